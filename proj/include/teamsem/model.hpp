#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "teamsem/rational.hpp"

namespace teamsem {

using Element = int;
using Values = std::vector<Element>;
using VarList = std::vector<std::string>;
using Assignment = std::map<std::string, Element>;

/// Interned value domain: element ids 0..size-1 with printable labels.
struct Domain {
  std::vector<std::string> labels;

  static Domain range(int n);
  int size() const { return static_cast<int>(labels.size()); }
  std::optional<Element> find(std::string_view label) const;
  const std::string& label(Element e) const { return labels.at(e); }
  bool operator==(const Domain&) const = default;
};

/// Probability distribution A^arity -> [0,1], stored row-major over the
/// lexicographic order of argument tuples. Arity 0 is the constant 1.
struct Distribution {
  int arity = 0;
  int domain_size = 0;
  std::vector<Rational> table;

  Distribution() = default;
  Distribution(int arity, int domain_size, std::vector<Rational> table);

  static Distribution uniform(int arity, int domain_size);
  static Distribution dirac(int domain_size, const Values& at);

  const Rational& at(const Values& args) const { return table.at(index(args)); }
  std::size_t index(const Values& args) const;
  Values args_of(std::size_t index) const;
  std::size_t cells() const { return table.size(); }

  /// Throws DomainError unless nonnegative and summing to exactly 1.
  void validate() const;
  bool operator==(const Distribution&) const = default;
};

/// Number of tuples in A^n.
std::size_t tuple_count(int domain_size, int n);
/// Tuple with the given lexicographic index in A^n.
Values tuple_at(int domain_size, int n, std::size_t index);

/// A probabilistic team: rows keyed by value tuples aligned with vars(),
/// which are kept sorted. Zero-weight rows are dropped on construction.
/// Weights sum to exactly 1 unless the team is empty.
class ProbabilisticTeam {
 public:
  using Rows = std::map<Values, Rational>;

  ProbabilisticTeam() = default;
  /// Rows are given in the order of `vars` (any order); duplicate
  /// assignments are merged. Throws DomainError on invalid input.
  ProbabilisticTeam(VarList vars, int domain_size,
                    const std::vector<std::pair<Values, Rational>>& rows);

  /// Single empty assignment of weight 1.
  static ProbabilisticTeam unit(int domain_size);
  /// Team with no rows over the given variables.
  static ProbabilisticTeam empty_over(VarList vars, int domain_size);
  /// Rows already aligned with sorted, duplicate-free vars.
  static ProbabilisticTeam from_sorted(VarList sorted_vars, int domain_size, Rows rows);

  const VarList& vars() const { return vars_; }
  int domain_size() const { return domain_size_; }
  const Rows& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }

  bool has_var(const std::string& v) const;
  /// Position of v in vars(); throws DomainError if absent.
  std::size_t index_of(const std::string& v) const;
  Rational weight(const Values& row) const;
  Assignment assignment(const Values& row) const;
  /// Lcm of the weight denominators (1 for the empty team).
  mpz_class denominator_lcm() const;

  bool operator==(const ProbabilisticTeam&) const = default;

 private:
  VarList vars_;
  int domain_size_ = 0;
  Rows rows_;
};

/// Multiteam: rows with positive integer multiplicities.
class Multiteam {
 public:
  using Rows = std::map<Values, std::uint64_t>;

  Multiteam() = default;
  Multiteam(VarList vars, int domain_size,
            const std::vector<std::pair<Values, std::uint64_t>>& rows);
  static Multiteam from_sorted(VarList sorted_vars, int domain_size, Rows rows);

  const VarList& vars() const { return vars_; }
  int domain_size() const { return domain_size_; }
  const Rows& rows() const { return rows_; }
  std::size_t size() const { return rows_.size(); }
  bool empty() const { return rows_.empty(); }
  /// |mX|: sum of multiplicities.
  std::uint64_t cardinality() const;
  bool has_var(const std::string& v) const;
  std::size_t index_of(const std::string& v) const;
  std::uint64_t multiplicity(const Values& row) const;

  bool operator==(const Multiteam&) const = default;

 private:
  VarList vars_;
  int domain_size_ = 0;
  Rows rows_;
};

struct Relation {
  int arity = 0;
  std::set<Values> tuples;
};

/// Finite relational structure optionally carrying distribution-valued
/// function symbols.
struct Structure {
  Domain domain;
  std::map<std::string, Relation> relations;
  std::map<std::string, Distribution> functions;

  static Structure plain(int n) { return Structure{Domain::range(n), {}, {}}; }
  int size() const { return domain.size(); }
  bool holds(const std::string& rel, const Values& args) const;
  /// Throws DomainError on tuples outside A or invalid distributions.
  void validate() const;
};

// ---- probabilistic team operations ----

/// |X_{vars=vals}|
Rational marginal_weight(const ProbabilisticTeam& X, const VarList& vars, const Values& vals);

/// |X_phi| for a predicate over assignments (row value tuples in X.vars() order).
template <class Pred>
Rational marginal_weight_if(const ProbabilisticTeam& X, Pred&& pred) {
  Rational total = 0;
  for (const auto& [row, w] : X.rows())
    if (pred(row)) total += w;
  return total;
}

/// k*Y + (1-k)*Z, per row.
ProbabilisticTeam scaled_union(const ProbabilisticTeam& Y, const ProbabilisticTeam& Z, const Rational& k);

/// X[A/x]
ProbabilisticTeam duplicate(const ProbabilisticTeam& X, const std::string& x);

/// X[F/x]; F maps each row of X to a distribution over A (unary).
ProbabilisticTeam extend(const ProbabilisticTeam& X,
                         const std::map<Values, std::vector<Rational>>& F,
                         const std::string& x);

/// X[d/xs] for fresh xs: every row paired with the constant distribution d.
ProbabilisticTeam extend_constant(const ProbabilisticTeam& X, const Distribution& d,
                                  const VarList& xs);

/// X restricted to V (weights of merged rows add up).
ProbabilisticTeam restrict(const ProbabilisticTeam& X, const std::set<std::string>& V);

/// Counting measure of a multiteam; the empty multiteam maps to the empty team.
ProbabilisticTeam prob_of_multiteam(const Multiteam& mX);

// ---- multiteam operations ----

Multiteam disjoint_union(const Multiteam& mY, const Multiteam& mZ);

/// Canonical set representative: every (row, i) with 1 <= i <= mX(row).
std::vector<std::pair<Values, std::uint64_t>> canonical_set(const Multiteam& mX);

/// mX[A/x]
Multiteam mduplicate(const Multiteam& mX, const std::string& x);

/// mX[F/x]; F maps each canonical copy (row, i) to a nonempty set of elements.
Multiteam mextend(const Multiteam& mX,
                  const std::map<std::pair<Values, std::uint64_t>, std::vector<Element>>& F,
                  const std::string& x);

}  // namespace teamsem
