#pragma once

#include <string>
#include <vector>

#include "teamsem/eval_multi.hpp"
#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem {

/// Universe and a collection of subsets. The listed order inside each set
/// fixes the cyclic successor used by the encoding.
struct ExactCoverInstance {
  std::vector<std::string> universe;
  std::vector<std::vector<std::string>> sets;

  /// Throws DomainError on empty sets, repeated or foreign elements, or
  /// labels that clash with the encoding's reserved labels ("0", "S1", ...).
  void validate() const;
};

struct ExactCoverEncoding {
  /// "0", the universe, then "S1".."Sn".
  Domain domain;
  /// Element id of "S1".
  Element first_set = 0;
  /// Over (element, left, right, set), every multiplicity 1.
  Multiteam team;
  FormulaPtr phi;
};

/// (or (!= set 0) (and (approx (element) (left)) (approx (set right) (set left))))
FormulaPtr exact_cover_formula();

ExactCoverEncoding gen_exact_cover(const ExactCoverInstance& inst);

/// Sets (0-based) whose rows the root disjunction sends to the right
/// disjunct. Throws DomainError if the certificate is not rooted at an
/// or-node over the encoding's team or splits a set's rows.
std::vector<std::size_t> cover_from_certificate(const ExactCoverEncoding& enc, const MultiCertificate& cert);

ExactCoverInstance sample_cover_instance();
ExactCoverInstance triangle_cover_instance();

struct BayesVariable {
  std::string name;
  VarList parents;
  /// Parent labels (in `parents` order) -> probabilities over the domain,
  /// in domain order.
  std::map<std::vector<std::string>, std::vector<Rational>> table;
};

struct BayesSpec {
  Domain domain;
  std::vector<BayesVariable> variables;

  /// Throws DomainError on unknown or cyclic parents, missing rows, or rows
  /// that do not sum to 1.
  void validate() const;
};

/// Product of the table entries over every joint assignment. Zero-weight
/// assignments are not stored.
ProbabilisticTeam gen_bayes_joint(const BayesSpec& spec);

/// The burglary network: thief, cat, guard, alarm over {T, F}.
BayesSpec burglary_bayes_spec();

}  // namespace teamsem
