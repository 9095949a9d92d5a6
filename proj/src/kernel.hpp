#pragma once

#include <cstdint>
#include <map>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "teamsem/model.hpp"
#include "teamsem/syntax.hpp"

namespace teamsem::detail {

using Mass = std::int64_t;
using Wide = __int128;

/// Team with positive integer masses; only ratios matter to the atoms.
struct MassTeam {
  VarList vars;
  std::map<Values, Mass> rows;

  Mass total() const;
  bool operator<(const MassTeam& o) const { return std::tie(vars, rows) < std::tie(o.vars, o.rows); }
};

MassTeam to_mass(const ProbabilisticTeam& X, Mass scale);
MassTeam to_mass(const Multiteam& mX);
/// Normalized rational team of the same shape.
ProbabilisticTeam to_rational(const MassTeam& X, int domain_size);

/// Positions of the distinct variables of `vs` in X.vars (sorted, unique).
std::vector<std::size_t> positions(const VarList& team_vars, const VarList& vs);
std::map<Values, Mass> marginal(const MassTeam& X, const std::vector<std::size_t>& idx);

/// Atom checks over any weight map (integer masses or exact rationals).
template <class W>
bool approx_on(const VarList& vars, const std::map<Values, W>& rows, const VarList& xs, const VarList& ys);
template <class W>
bool cindep_on(const VarList& vars, const std::map<Values, W>& rows, const VarList& xs, const VarList& ys,
               const VarList& zs);

inline bool mass_approx(const MassTeam& X, const VarList& xs, const VarList& ys) {
  return approx_on(X.vars, X.rows, xs, ys);
}
inline bool mass_cindep(const MassTeam& X, const VarList& xs, const VarList& ys, const VarList& zs) {
  return cindep_on(X.vars, X.rows, xs, ys, zs);
}

/// Adds (or overwrites) column x.
struct Extender {
  VarList out_vars;
  std::size_t pos = 0;
  bool replace = false;

  Extender(const VarList& vars, const std::string& x);
  Values apply(const Values& row, Element a) const;
};

/// Top-level conjuncts of a formula (And flattened).
void conjuncts(const FormulaPtr& f, std::vector<FormulaPtr>& out);

/// Caches per-node flatness.
class FlatCache {
 public:
  bool operator()(const Formula& f);

 private:
  std::unordered_map<const Formula*, bool> cache_;
};

/// Resolves term constants against the structure's domain.
Element term_value(const Structure& A, const Term& t, const Assignment& s);

Assignment assignment_of(const VarList& vars, const Values& row);

}  // namespace teamsem::detail
