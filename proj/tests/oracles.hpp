#pragma once

// Reference checks written directly from the definitions. They only read
// rows out of the library's containers and share no evaluation code with it.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "teamsem/generators.hpp"
#include "teamsem/model.hpp"

namespace oracle {

using teamsem::Rational;
using teamsem::Values;
using teamsem::VarList;

inline std::vector<std::size_t> columns(const VarList& team_vars, const VarList& xs) {
  std::vector<std::size_t> out;
  for (const auto& x : xs) out.push_back(std::find(team_vars.begin(), team_vars.end(), x) - team_vars.begin());
  return out;
}

inline Values project(const Values& row, const std::vector<std::size_t>& cols) {
  Values out;
  for (auto c : cols) out.push_back(row[c]);
  return out;
}

/// Marginal of xs as a map; tuples of mass 0 are absent.
inline std::map<Values, Rational> marginal(const teamsem::ProbabilisticTeam& X, const VarList& xs) {
  const auto cols = columns(X.vars(), xs);
  std::map<Values, Rational> m;
  for (const auto& [row, w] : X.rows()) m[project(row, cols)] += w;
  return m;
}

inline bool approx(const teamsem::ProbabilisticTeam& X, const VarList& xs, const VarList& ys) {
  return marginal(X, xs) == marginal(X, ys);
}

/// |X_xy| * |X_xz| == |X_xyz| * |X_x| for every value combination. Only
/// combinations with |X_x| > 0 can fail, and for those it suffices to range
/// over y, z values that occur.
inline bool cindep(const teamsem::ProbabilisticTeam& X, const VarList& xs, const VarList& ys, const VarList& zs) {
  auto cat = [](VarList a, const VarList& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  const auto mx = marginal(X, xs), mxy = marginal(X, cat(xs, ys)), mxz = marginal(X, cat(xs, zs));
  const auto mxyz = marginal(X, cat(cat(xs, ys), zs));
  auto get = [](const std::map<Values, Rational>& m, const Values& k) {
    auto it = m.find(k);
    return it == m.end() ? Rational(0) : it->second;
  };
  std::set<Values> yvals, zvals;
  for (const auto& [k, w] : marginal(X, ys)) yvals.insert(k);
  for (const auto& [k, w] : marginal(X, zs)) zvals.insert(k);
  for (const auto& [a, wa] : mx)
    for (const auto& b : yvals)
      for (const auto& c : zvals) {
        Values ab = a, ac = a, abc = a;
        ab.insert(ab.end(), b.begin(), b.end());
        ac.insert(ac.end(), c.begin(), c.end());
        abc.insert(abc.end(), b.begin(), b.end());
        abc.insert(abc.end(), c.begin(), c.end());
        if (get(mxy, ab) * get(mxz, ac) != get(mxyz, abc) * wa) return false;
      }
  return true;
}

/// Every tuple of A^|xs| has marginal 1/n^|xs|.
inline bool uniform(const teamsem::ProbabilisticTeam& X, const VarList& xs, int n) {
  const auto m = marginal(X, xs);
  std::size_t cells = 1;
  for (std::size_t i = 0; i < xs.size(); ++i) cells *= n;
  if (m.size() != cells) return false;
  for (const auto& [k, w] : m)
    if (w * Rational(static_cast<long>(cells)) != 1) return false;
  return true;
}

/// |X_P(x)| >= 2 |X_Q(x)| for a team over x and unary P, Q given as sets.
inline bool twice_as_likely(const teamsem::ProbabilisticTeam& X, const std::string& x, const std::set<int>& P,
                            const std::set<int>& Q) {
  Rational p = 0, q = 0;
  for (const auto& [v, w] : marginal(X, {x})) {
    if (P.count(v[0])) p += w;
    if (Q.count(v[0])) q += w;
  }
  return p >= 2 * q;
}

/// All exact covers, each as sorted 0-based set indices, by subset enumeration.
inline std::vector<std::vector<std::size_t>> exact_covers(const teamsem::ExactCoverInstance& inst) {
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = inst.sets.size();
  for (unsigned long mask = 0; mask < (1ul << n); ++mask) {
    std::map<std::string, int> hits;
    for (std::size_t j = 0; j < n; ++j)
      if (mask >> j & 1)
        for (const auto& a : inst.sets[j]) ++hits[a];
    bool ok = hits.size() == inst.universe.size();
    for (const auto& [a, c] : hits) ok = ok && c == 1;
    if (!ok) continue;
    std::vector<std::size_t> cover;
    for (std::size_t j = 0; j < n; ++j)
      if (mask >> j & 1) cover.push_back(j);
    out.push_back(cover);
  }
  return out;
}

inline bool is_exact_cover(const teamsem::ExactCoverInstance& inst, const std::vector<std::size_t>& cover) {
  const auto all = exact_covers(inst);
  return std::find(all.begin(), all.end(), cover) != all.end();
}

}  // namespace oracle
