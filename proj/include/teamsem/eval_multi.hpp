#pragma once

#include <cstdint>
#include <optional>

#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem {

/// Witness tree for multiteam satisfaction (lax existential, strict
/// disjunction).
///
/// Or: left[s] copies of row s go to the left disjunct (missing means 0).
/// Exists: choice[(s, i)] is the nonempty value set for the i-th copy of s,
///     1 <= i <= mX(s); every copy must be present.
/// Leaf: an atom, a dependency-free subformula, or the empty multiteam.
struct MultiCertificate {
  enum class Kind { Leaf, And, Or, Exists, Forall };
  Kind kind = Kind::Leaf;
  VarList vars;
  std::map<Values, std::uint64_t> left;
  std::map<std::pair<Values, std::uint64_t>, std::vector<Element>> choice;
  std::vector<MultiCertificate> children;

  bool operator==(const MultiCertificate&) const = default;
};

struct MultiOptions {
  std::uint64_t max_cardinality = 64;
  int max_domain = 6;
  int max_quantifier_depth = 3;
  /// Safety net; exhausting it raises RefusedInput rather than guessing.
  std::uint64_t node_budget = 50'000'000;
};

bool eval_multi(const Structure& A, const Multiteam& mX, const FormulaPtr& phi, const MultiOptions& opts = {});

/// The certificate is present exactly when the formula holds.
std::optional<MultiCertificate> eval_multi_with_witness(const Structure& A, const Multiteam& mX,
                                                        const FormulaPtr& phi, const MultiOptions& opts = {});

/// Replays a certificate with the model operations (mextend, mduplicate,
/// prob_of_multiteam for atoms). Returns false on any mismatch.
bool verify_multi_certificate(const Structure& A, const Multiteam& mX, const Formula& phi,
                              const MultiCertificate& cert);

}  // namespace teamsem
