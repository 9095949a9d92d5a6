#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem {

/// Record of every semantic choice made while satisfying a formula on a
/// probabilistic team; mirrors the formula tree.
///
/// Or: allocation[s] is the mass of row s sent to the left disjunct, with
///     0 <= allocation[s] <= X(s); missing rows send nothing left.
/// Exists: choice[s] is the distribution over A for the quantified variable
///     on row s; every row of the team must be present.
/// And/Forall carry children only. A Leaf stands for an atom, for a
/// dependency-free subformula (checked pointwise), or for any subformula
/// evaluated on the empty team.
struct Certificate {
  enum class Kind { Leaf, And, Or, Exists, Forall };
  Kind kind = Kind::Leaf;
  VarList vars;
  std::map<Values, Rational> allocation;
  std::map<Values, std::vector<Rational>> choice;
  std::vector<Certificate> children;

  bool operator==(const Certificate&) const = default;
};

enum class VerdictKind { Satisfied, Refuted, Unknown };

struct Verdict {
  VerdictKind kind = VerdictKind::Unknown;
  std::optional<Certificate> certificate;
  int resolution = 0;
  std::uint64_t nodes = 0;

  bool satisfied() const { return kind == VerdictKind::Satisfied; }
  bool refuted() const { return kind == VerdictKind::Refuted; }
  bool decided() const { return kind != VerdictKind::Unknown; }
};

const char* to_string(VerdictKind k);

struct ProbOptions {
  /// Grid resolution N; the root scale is N times the lcm of the weight
  /// denominators.
  int resolution = 1;
  /// Search steps before giving up with Unknown.
  std::uint64_t node_budget = 5'000'000;
  /// Evaluate existential chains guarded by marginal independence atoms
  /// with constant distributions.
  bool constant_distribution_chains = true;
  int max_domain = 8;
  std::size_t max_rows = 20000;
};

bool check_approx(const Structure& A, const ProbabilisticTeam& X, const VarList& xs, const VarList& ys);
/// ys independent of zs given xs.
bool check_cindep(const Structure& A, const ProbabilisticTeam& X, const VarList& xs, const VarList& ys,
                  const VarList& zs);

/// Tarskian truth of a dependency-free formula under one assignment.
bool holds_classically(const Structure& A, const Formula& f, Assignment& s);

Verdict eval_prob(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi,
                  const ProbOptions& opts = {});

/// Exact replay of a certificate. Never throws on malformed certificates;
/// returns false instead.
bool verify_certificate(const Structure& A, const ProbabilisticTeam& X, const Formula& phi,
                        const Certificate& cert);

/// phi must have the shape exists ys ((cindep () xs ys) & psi) with the free
/// variables of phi among xs; searches one constant distribution for ys.
Verdict eval_const_dist(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi,
                        const ProbOptions& opts = {});

struct LocalityReport {
  bool consistent = true;
  Verdict full;
  Verdict restricted;
};

/// Evaluates phi on X and on X restricted to V and compares decided verdicts.
LocalityReport check_locality(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi,
                              const std::set<std::string>& V, const ProbOptions& opts = {});

}  // namespace teamsem
