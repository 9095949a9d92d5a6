#pragma once

#include <optional>
#include <string>

#include "teamsem/syntax.hpp"

namespace teamsem {

/// Rewrites every independence atom so that its three tuples are pairwise
/// disjoint or of the form y indep_x y with x, y disjoint. Idempotent.
FormulaPtr normalize_cindep(const FormulaPtr& phi);

/// Sentence with the single free function symbol `f` of arity |xs| that holds
/// of the distribution of a nonempty team over xs exactly when the team
/// satisfies phi. Requires the free variables of phi to lie in xs.
EsofPtr to_esof(const FormulaPtr& phi, const VarList& xs, const std::string& f = "f");

/// Equivalent sentence of the shape exists fs forall xs theta with theta
/// quantifier-free and every numerical atom an identity of the shapes
/// accepted by check_normal_form. Input already in that shape is returned
/// as is.
EsofPtr normalize_esof(const EsofPtr& phi);

/// Nullopt when phi is in normal form, otherwise a description of the first
/// violating subformula. Accepted numerical atoms:
///   f(a) = g(b) * h(c)        product identity
///   f(a) = SUM_vs g(b)        sum identity (vs possibly empty, each v
///                             occurring in b and nowhere else)
///   f(a) = 0, f(a) != 0       zero atoms
///   f(a) != g(b)              disequality
/// with distinct symbols per atom, at most one of them not quantified.
std::optional<std::string> check_normal_form(const EsofFormula& phi);

/// Open formula over team_vars that a probabilistic team p^A satisfies
/// exactly when (A, p) satisfies phi. phi must be in normal form with free
/// symbol p of arity |team_vars|; disequalities and f(a) != 0 atoms are
/// refused. Throws RefusedInput naming the violating subterm.
FormulaPtr from_esof(const EsofPtr& phi, const std::string& p, const VarList& team_vars);

}  // namespace teamsem
