#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "teamsem/eval_prob.hpp"
#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem {

/// Witness functions keyed by "name#node@assignment": the quantified
/// symbol, the preorder index of its quantifier in the formula, and the
/// first-order assignment in force when the quantifier was evaluated
/// (e.g. "g#2@x=0,y=1").
using EsofWitnesses = std::map<std::string, Distribution>;

struct EsofResult {
  VerdictKind kind = VerdictKind::Unknown;
  EsofWitnesses witnesses;
  int resolution = 0;
  std::uint64_t nodes = 0;

  bool satisfied() const { return kind == VerdictKind::Satisfied; }
  bool decided() const { return kind != VerdictKind::Unknown; }
};

struct EsofOptions {
  /// Quantified distributions take values in multiples of 1/D where D is
  /// the resolution times the lcm of the denominators of the structure's
  /// functions.
  int resolution = 1;
  /// Counts candidate cell values and first-order quantifier steps.
  std::uint64_t node_budget = 5'000'000;
  int max_domain = 6;
  /// Cap on the number of cells of one block of function quantifiers.
  std::size_t max_cells = 4096;
};

/// Exact value of a numerical term. Function symbols are looked up in
/// `extra` first, then in the structure.
Rational eval_term(const Structure& A, const Assignment& s, const NumTerm& t, const EsofWitnesses& extra = {});

EsofResult eval_esof(const Structure& A, const EsofFormula& phi, const Assignment& s = {},
                     const EsofOptions& opts = {});

/// Exact evaluation with every function quantifier replaced by its witness;
/// a quantifier without a witness counts as false.
bool verify_esof_certificate(const Structure& A, const EsofFormula& phi, const Assignment& s,
                             const EsofWitnesses& witnesses);

/// The key used for a quantifier node under an assignment.
std::string witness_key(const std::string& fn, std::size_t node_index, const Assignment& s);

}  // namespace teamsem
