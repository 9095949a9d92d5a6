#include "kernel.hpp"

#include <algorithm>

namespace teamsem::detail {

Mass MassTeam::total() const {
  Mass t = 0;
  for (const auto& [row, m] : rows) t += m;
  return t;
}

MassTeam to_mass(const ProbabilisticTeam& X, Mass scale) {
  MassTeam out{X.vars(), {}};
  for (const auto& [row, w] : X.rows()) {
    Rational m = w * Rational(mpz_class(static_cast<long>(scale)));
    if (m.get_den() != 1) throw DomainError("team weight does not lie on the mass grid");
    if (!m.get_num().fits_slong_p()) throw RefusedInput("team mass exceeds 64 bits");
    out.rows.emplace(row, m.get_num().get_si());
  }
  return out;
}

MassTeam to_mass(const Multiteam& mX) {
  MassTeam out{mX.vars(), {}};
  for (const auto& [row, m] : mX.rows()) {
    if (m > static_cast<std::uint64_t>(INT64_MAX)) throw RefusedInput("multiplicity exceeds 63 bits");
    out.rows.emplace(row, static_cast<Mass>(m));
  }
  return out;
}

ProbabilisticTeam to_rational(const MassTeam& X, int domain_size) {
  const Mass t = X.total();
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, m] : X.rows) {
    Rational w(mpz_class(static_cast<long>(m)), mpz_class(static_cast<long>(t)));
    w.canonicalize();
    rows.emplace(row, w);
  }
  return ProbabilisticTeam::from_sorted(X.vars, domain_size, std::move(rows));
}

std::vector<std::size_t> positions(const VarList& team_vars, const VarList& vs) {
  std::vector<std::size_t> idx;
  for (const auto& v : vs) {
    auto it = std::lower_bound(team_vars.begin(), team_vars.end(), v);
    if (it == team_vars.end() || *it != v) throw DomainError("variable '" + v + "' is not in the team domain");
    idx.push_back(static_cast<std::size_t>(it - team_vars.begin()));
  }
  std::sort(idx.begin(), idx.end());
  idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
  return idx;
}

std::map<Values, Mass> marginal(const MassTeam& X, const std::vector<std::size_t>& idx) {
  std::map<Values, Mass> out;
  Values key(idx.size());
  for (const auto& [row, m] : X.rows) {
    for (std::size_t i = 0; i < idx.size(); ++i) key[i] = row[idx[i]];
    out[key] += m;
  }
  return out;
}

template <class W>
bool approx_on(const VarList& vars, const std::map<Values, W>& rows, const VarList& xs, const VarList& ys) {
  if (xs.size() != ys.size()) throw DomainError("marginal identity needs tuples of equal length");
  // Tuples may repeat variables, so read values position by position.
  auto tuple_marginal = [&](const VarList& vs) {
    std::vector<std::size_t> idx;
    for (const auto& v : vs) idx.push_back(positions(vars, {v})[0]);
    std::map<Values, W> out;
    Values key(idx.size());
    for (const auto& [row, m] : rows) {
      for (std::size_t i = 0; i < idx.size(); ++i) key[i] = row[idx[i]];
      out[key] += m;
    }
    return out;
  };
  return tuple_marginal(xs) == tuple_marginal(ys);
}

namespace {

VarList concat(const VarList& a, const VarList& b) {
  VarList out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

// Projects a row keyed by `from` positions onto `to` positions (both sorted
// subsets of the team columns, `to` a subset of `from`).
Values project(const Values& row, const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
  Values out;
  out.reserve(to.size());
  std::size_t j = 0;
  for (std::size_t i = 0; i < from.size() && j < to.size(); ++i)
    if (from[i] == to[j]) {
      out.push_back(row[i]);
      ++j;
    }
  return out;
}

template <class W>
std::map<Values, W> marginal_of(const std::map<Values, W>& rows, const std::vector<std::size_t>& idx) {
  std::map<Values, W> out;
  Values key(idx.size());
  for (const auto& [row, m] : rows) {
    for (std::size_t i = 0; i < idx.size(); ++i) key[i] = row[idx[i]];
    out[key] += m;
  }
  return out;
}

bool products_equal(Mass a, Mass b, Mass c, Mass d) { return static_cast<Wide>(a) * b == static_cast<Wide>(c) * d; }
bool products_equal(const Rational& a, const Rational& b, const Rational& c, const Rational& d) {
  return a * b == c * d;
}

}  // namespace

template <class W>
bool cindep_on(const VarList& vars, const std::map<Values, W>& rows, const VarList& xs, const VarList& ys,
               const VarList& zs) {
  auto ix = positions(vars, xs);
  auto ixy = positions(vars, concat(xs, ys));
  auto ixz = positions(vars, concat(xs, zs));
  auto ixyz = positions(vars, concat(concat(xs, ys), zs));
  std::vector<std::size_t> common;
  std::set_intersection(ixy.begin(), ixy.end(), ixz.begin(), ixz.end(), std::back_inserter(common));

  auto mx = marginal_of(rows, ix);
  auto mxy = marginal_of(rows, ixy);
  auto mxz = marginal_of(rows, ixz);
  auto mxyz = marginal_of(rows, ixyz);

  // Pairs of supported xy- and xz-values that agree on shared columns; all
  // other assignments make both sides zero.
  std::map<Values, std::vector<const std::pair<const Values, W>*>> by_common;
  for (const auto& e : mxz) by_common[project(e.first, ixz, common)].push_back(&e);

  const W zero(0);
  Values full(ixyz.size());
  for (const auto& [ry, my] : mxy) {
    auto it = by_common.find(project(ry, ixy, common));
    if (it == by_common.end()) continue;
    for (const auto* ez : it->second) {
      const auto& rz = ez->first;
      std::size_t a = 0, b = 0;
      for (std::size_t k = 0; k < ixyz.size(); ++k) {
        const std::size_t col = ixyz[k];
        while (a < ixy.size() && ixy[a] < col) ++a;
        while (b < ixz.size() && ixz[b] < col) ++b;
        full[k] = (a < ixy.size() && ixy[a] == col) ? ry[a] : rz[b];
      }
      auto jt = mxyz.find(full);
      const W& joint = jt == mxyz.end() ? zero : jt->second;
      const W& base = mx.at(project(full, ixyz, ix));
      if (!products_equal(my, ez->second, joint, base)) return false;
    }
  }
  return true;
}

template bool approx_on<Mass>(const VarList&, const std::map<Values, Mass>&, const VarList&, const VarList&);
template bool approx_on<Rational>(const VarList&, const std::map<Values, Rational>&, const VarList&, const VarList&);
template bool cindep_on<Mass>(const VarList&, const std::map<Values, Mass>&, const VarList&, const VarList&,
                              const VarList&);
template bool cindep_on<Rational>(const VarList&, const std::map<Values, Rational>&, const VarList&, const VarList&,
                                  const VarList&);

Extender::Extender(const VarList& vars, const std::string& x) : out_vars(vars) {
  auto it = std::lower_bound(out_vars.begin(), out_vars.end(), x);
  pos = static_cast<std::size_t>(it - out_vars.begin());
  if (it != out_vars.end() && *it == x) {
    replace = true;
  } else {
    out_vars.insert(it, x);
  }
}

Values Extender::apply(const Values& row, Element a) const {
  Values out = row;
  if (replace) {
    out[pos] = a;
  } else {
    out.insert(out.begin() + static_cast<std::ptrdiff_t>(pos), a);
  }
  return out;
}

void conjuncts(const FormulaPtr& f, std::vector<FormulaPtr>& out) {
  if (f->op == Op::And) {
    conjuncts(f->left, out);
    conjuncts(f->right, out);
  } else {
    out.push_back(f);
  }
}

bool FlatCache::operator()(const Formula& f) {
  auto it = cache_.find(&f);
  if (it != cache_.end()) return it->second;
  bool flat = !f.is_dependency_atom();
  if (flat && f.left) flat = (*this)(*f.left);
  if (flat && f.right) flat = (*this)(*f.right);
  cache_.emplace(&f, flat);
  return flat;
}

Element term_value(const Structure& A, const Term& t, const Assignment& s) {
  if (t.is_var()) {
    auto it = s.find(t.name);
    if (it == s.end()) throw DomainError("unassigned variable '" + t.name + "'");
    return it->second;
  }
  auto e = A.domain.find(t.name);
  if (!e) throw DomainError("constant '" + t.name + "' is not an element of the domain");
  return *e;
}

Assignment assignment_of(const VarList& vars, const Values& row) {
  Assignment s;
  for (std::size_t i = 0; i < vars.size(); ++i) s.emplace(vars[i], row[i]);
  return s;
}

}  // namespace teamsem::detail
