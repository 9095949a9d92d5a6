#include "teamsem/eval_multi.hpp"

#include <algorithm>
#include <memory>

#include "kernel.hpp"
#include "linsolve.hpp"
#include "search_util.hpp"
#include "teamsem/eval_prob.hpp"

namespace teamsem {

using namespace detail;

namespace {

struct MNode;
using MPtr = std::shared_ptr<const MNode>;

struct MNode {
  MultiCertificate::Kind kind = MultiCertificate::Kind::Leaf;
  VarList vars;
  std::map<Values, std::uint64_t> left;
  std::map<std::pair<Values, std::uint64_t>, std::vector<Element>> choice;
  std::vector<MPtr> children;
};

MultiCertificate materialize(const MNode& c) {
  MultiCertificate out;
  out.kind = c.kind;
  out.vars = c.vars;
  out.left = c.left;
  out.choice = c.choice;
  for (const auto& ch : c.children) out.children.push_back(materialize(*ch));
  return out;
}

const MPtr& mleaf() {
  static const MPtr node = std::make_shared<const MNode>();
  return node;
}

// Spreads counts[a] copies of value a over k copies so that no copy gets a
// value twice and every copy gets at least one (needs counts[a] <= k and
// sum >= k).
std::vector<std::vector<Element>> spread(const std::vector<std::pair<Element, Mass>>& counts, Mass k) {
  std::vector<std::vector<Element>> copies(static_cast<std::size_t>(k));
  std::size_t j = 0;
  for (const auto& [a, c] : counts)
    for (Mass r = 0; r < c; ++r) copies[j++ % copies.size()].push_back(a);
  for (auto& c : copies) std::sort(c.begin(), c.end());
  return copies;
}

class MultiSearch {
 public:
  MultiSearch(const Structure& A, const MultiOptions& opts) : A_(A), n_(A.size()), budget_(opts.node_budget) {}

  std::pair<bool, MPtr> eval(const FormulaPtr& f, const MassTeam& X);

 private:
  const Structure& A_;
  int n_;
  Budget budget_;
  FlatCache flat_;
  std::map<std::pair<const Formula*, MassTeam>, std::pair<bool, MPtr>> memo_;

  bool row_holds(const Formula& f, const VarList& vars, const Values& row) const {
    Assignment s = assignment_of(vars, row);
    return holds_classically(A_, f, s);
  }
  Values key_of(const VarList& vars, const Values& row, const VarList& tuple) const {
    Values key;
    for (const auto& v : tuple) key.push_back(row[positions(vars, {v})[0]]);
    return key;
  }

  MPtr flat_cert(const FormulaPtr& f, const MassTeam& X);
  std::pair<bool, MPtr> dispatch(const FormulaPtr& f, const MassTeam& X);
  std::pair<bool, MPtr> eval_or(const FormulaPtr& f, const MassTeam& X);
  std::pair<bool, MPtr> eval_exists(const FormulaPtr& f, const MassTeam& X);
  MPtr exists_node(const MassTeam& X, const std::vector<std::vector<std::pair<Element, Mass>>>& counts,
                   const MPtr& child) const;
};

std::pair<bool, MPtr> MultiSearch::eval(const FormulaPtr& f, const MassTeam& X) {
  budget_.tick();
  if (X.rows.empty()) return {true, mleaf()};
  if (flat_(*f)) {
    for (const auto& [row, m] : X.rows)
      if (!row_holds(*f, X.vars, row)) return {false, nullptr};
    return {true, flat_cert(f, X)};
  }
  auto key = std::make_pair(f.get(), X);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  auto out = dispatch(f, X);
  if (memo_.size() > 200000) memo_.clear();
  memo_.emplace(std::move(key), out);
  return out;
}

std::pair<bool, MPtr> MultiSearch::dispatch(const FormulaPtr& f, const MassTeam& X) {
  switch (f->op) {
    case Op::Approx: return {mass_approx(X, f->xs, f->ys), mleaf()};
    case Op::CIndep: return {mass_cindep(X, f->xs, f->ys, f->zs), mleaf()};
    case Op::And: {
      auto a = eval(f->left, X);
      if (!a.first) return {false, nullptr};
      auto b = eval(f->right, X);
      if (!b.first) return {false, nullptr};
      auto node = std::make_shared<MNode>();
      node->kind = MultiCertificate::Kind::And;
      node->children = {a.second, b.second};
      return {true, node};
    }
    case Op::Or: return eval_or(f, X);
    case Op::Exists: return eval_exists(f, X);
    case Op::Forall: {
      Extender ext(X.vars, f->name);
      MassTeam next{ext.out_vars, {}};
      for (const auto& [row, m] : X.rows)
        for (Element a = 0; a < n_; ++a) next.rows[ext.apply(row, a)] += m;
      auto o = eval(f->left, next);
      if (!o.first) return o;
      auto node = std::make_shared<MNode>();
      node->kind = MultiCertificate::Kind::Forall;
      node->children = {o.second};
      return {true, node};
    }
    default: break;
  }
  throw DomainError("unexpected literal in dependency search");
}

MPtr MultiSearch::flat_cert(const FormulaPtr& f, const MassTeam& X) {
  if (X.rows.empty() || f->is_literal()) return mleaf();
  auto node = std::make_shared<MNode>();
  switch (f->op) {
    case Op::And:
      node->kind = MultiCertificate::Kind::And;
      node->children = {flat_cert(f->left, X), flat_cert(f->right, X)};
      break;
    case Op::Or: {
      node->kind = MultiCertificate::Kind::Or;
      node->vars = X.vars;
      MassTeam Y{X.vars, {}}, Z{X.vars, {}};
      for (const auto& [row, m] : X.rows) {
        if (row_holds(*f->left, X.vars, row)) {
          Y.rows.emplace(row, m);
          node->left.emplace(row, static_cast<std::uint64_t>(m));
        } else {
          Z.rows.emplace(row, m);
        }
      }
      node->children = {flat_cert(f->left, Y), flat_cert(f->right, Z)};
      break;
    }
    case Op::Exists: {
      Extender ext(X.vars, f->name);
      MassTeam next{ext.out_vars, {}};
      std::vector<std::vector<std::pair<Element, Mass>>> counts;
      for (const auto& [row, m] : X.rows) {
        Assignment s = assignment_of(X.vars, row);
        Element pick = -1;
        for (Element a = 0; a < n_ && pick < 0; ++a) {
          s[f->name] = a;
          if (holds_classically(A_, *f->left, s)) pick = a;
        }
        if (pick < 0) throw std::logic_error("flat certificate requested for a failing row");
        counts.push_back({{pick, m}});
        next.rows[ext.apply(row, pick)] += m;
      }
      return exists_node(X, counts, flat_cert(f->left, next));
    }
    case Op::Forall: {
      node->kind = MultiCertificate::Kind::Forall;
      Extender ext(X.vars, f->name);
      MassTeam next{ext.out_vars, {}};
      for (const auto& [row, m] : X.rows)
        for (Element a = 0; a < n_; ++a) next.rows[ext.apply(row, a)] += m;
      node->children = {flat_cert(f->left, next)};
      break;
    }
    default: return mleaf();
  }
  return node;
}

MPtr MultiSearch::exists_node(const MassTeam& X, const std::vector<std::vector<std::pair<Element, Mass>>>& counts,
                              const MPtr& child) const {
  auto node = std::make_shared<MNode>();
  node->kind = MultiCertificate::Kind::Exists;
  node->vars = X.vars;
  std::size_t i = 0;
  for (const auto& [row, m] : X.rows) {
    auto copies = spread(counts[i++], m);
    for (std::size_t c = 0; c < copies.size(); ++c) node->choice.emplace(std::make_pair(row, c + 1), copies[c]);
  }
  node->children = {child};
  return node;
}

std::pair<bool, MPtr> MultiSearch::eval_or(const FormulaPtr& f, const MassTeam& X) {
  std::vector<FormulaPtr> lc, rc, lflat, rflat;
  conjuncts(f->left, lc);
  conjuncts(f->right, rc);
  for (const auto& c : lc)
    if (flat_(*c)) lflat.push_back(c);
  for (const auto& c : rc)
    if (flat_(*c)) rflat.push_back(c);

  // Variable per row: copies sent to the right disjunct.
  LinearSystem sys;
  std::vector<const Values*> rows;
  std::vector<Mass> mult;
  for (const auto& [row, m] : X.rows) {
    auto ok = [&](const std::vector<FormulaPtr>& cs) {
      return std::all_of(cs.begin(), cs.end(), [&](const FormulaPtr& c) { return row_holds(*c, X.vars, row); });
    };
    const bool okL = ok(lflat), okR = ok(rflat);
    if (!okL && !okR) return {false, nullptr};
    if (okL && okR) sys.add_var(0, m);
    else sys.add_var(okL ? 0 : m, okL ? 0 : m);
    rows.push_back(&row);
    mult.push_back(m);
  }
  auto add_side = [&](const std::vector<FormulaPtr>& side, bool right) {
    for (const auto& c : side) {
      if (c->op != Op::Approx) continue;
      std::map<Values, std::vector<LinearSystem::Term>> terms;
      std::map<Values, Mass> rhs;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Values kx = key_of(X.vars, *rows[i], c->xs), ky = key_of(X.vars, *rows[i], c->ys);
        const Mass sign = right ? 1 : -1;
        terms[kx].emplace_back(i, sign);
        terms[ky].emplace_back(i, -sign);
        if (!right) {
          rhs[kx] -= mult[i];
          rhs[ky] += mult[i];
        }
      }
      for (auto& [key, t] : terms) sys.add_eq(std::move(t), rhs[key]);
    }
  };
  add_side(lc, false);
  add_side(rc, true);

  std::pair<bool, MPtr> result{false, nullptr};
  sys.enumerate(
      [&](const std::vector<Mass>& b) {
        MassTeam Y{X.vars, {}}, Z{X.vars, {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (mult[i] - b[i] > 0) Y.rows.emplace(*rows[i], mult[i] - b[i]);
          if (b[i] > 0) Z.rows.emplace(*rows[i], b[i]);
        }
        auto l = eval(f->left, Y);
        if (!l.first) return false;
        auto r = eval(f->right, Z);
        if (!r.first) return false;
        auto node = std::make_shared<MNode>();
        node->kind = MultiCertificate::Kind::Or;
        node->vars = X.vars;
        for (const auto& [row, a] : Y.rows) node->left.emplace(row, static_cast<std::uint64_t>(a));
        node->children = {l.second, r.second};
        result = {true, node};
        return true;
      },
      budget_);
  return result;
}

std::pair<bool, MPtr> MultiSearch::eval_exists(const FormulaPtr& f, const MassTeam& X) {
  const std::string& x = f->name;
  Extender ext(X.vars, x);
  std::vector<FormulaPtr> cs, fc, approx;
  conjuncts(f->left, cs);
  std::set<std::string> scope(X.vars.begin(), X.vars.end());
  scope.insert(x);
  for (const auto& c : cs) {
    auto fv = free_vars(*c);
    if (!std::includes(scope.begin(), scope.end(), fv.begin(), fv.end())) continue;
    if (flat_(*c)) fc.push_back(c);
    if (c->op == Op::Approx) approx.push_back(c);
  }

  std::vector<std::vector<Element>> allowed;
  std::vector<const Values*> rows;
  std::vector<Mass> mult;
  for (const auto& [row, m] : X.rows) {
    Assignment s = assignment_of(X.vars, row);
    std::vector<Element> ok;
    for (Element a = 0; a < n_; ++a) {
      s[x] = a;
      if (std::all_of(fc.begin(), fc.end(), [&](const FormulaPtr& c) { return holds_classically(A_, *c, s); }))
        ok.push_back(a);
    }
    if (ok.empty()) return {false, nullptr};
    allowed.push_back(std::move(ok));
    rows.push_back(&row);
    mult.push_back(m);
  }

  auto run = [&](const std::vector<std::vector<std::pair<Element, Mass>>>& counts) -> std::pair<bool, MPtr> {
    MassTeam next{ext.out_vars, {}};
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (const auto& [a, c] : counts[i])
        if (c > 0) next.rows[ext.apply(*rows[i], a)] += c;
    auto o = eval(f->left, next);
    if (!o.first) return {false, nullptr};
    return {true, exists_node(X, counts, o.second)};
  };

  // x functional in W: one value per W-class, every copy a singleton.
  for (const auto& c : cs) {
    if (c->op != Op::CIndep) continue;
    auto only_x = [&](const VarList& vs) {
      return !vs.empty() && std::all_of(vs.begin(), vs.end(), [&](const std::string& v) { return v == x; });
    };
    if (!only_x(c->ys) || !only_x(c->zs)) continue;
    if (!std::all_of(c->xs.begin(), c->xs.end(), [&](const std::string& w) {
          return w != x && std::binary_search(X.vars.begin(), X.vars.end(), w);
        }))
      continue;
    auto idx = positions(X.vars, c->xs);
    std::map<Values, std::vector<std::size_t>> classes;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Values key;
      for (auto k : idx) key.push_back((*rows[i])[k]);
      classes[key].push_back(i);
    }
    std::vector<std::vector<Element>> class_allowed;
    std::vector<std::vector<std::size_t>> members;
    for (auto& [key, ms] : classes) {
      std::vector<Element> common = allowed[ms[0]];
      for (auto r : ms) {
        std::vector<Element> tmp;
        std::set_intersection(common.begin(), common.end(), allowed[r].begin(), allowed[r].end(),
                              std::back_inserter(tmp));
        common = std::move(tmp);
      }
      if (common.empty()) return {false, nullptr};
      class_allowed.push_back(std::move(common));
      members.push_back(ms);
    }
    std::vector<std::int64_t> max;
    for (const auto& ca : class_allowed) max.push_back(static_cast<std::int64_t>(ca.size()) - 1);
    Odometer odo(max);
    do {
      budget_.tick();
      std::vector<std::vector<std::pair<Element, Mass>>> counts(rows.size());
      for (std::size_t k = 0; k < members.size(); ++k)
        for (auto r : members[k]) counts[r] = {{class_allowed[k][static_cast<std::size_t>(odo[k])], mult[r]}};
      auto o = run(counts);
      if (o.first) return o;
    } while (odo.next());
    return {false, nullptr};
  }

  // Lax choice: per row, how many copies receive each value. Any counts with
  // 0 <= c_a <= k and sum >= k are realised by some nonempty sets per copy.
  LinearSystem sys;
  std::vector<std::vector<std::pair<Element, std::size_t>>> row_vars(rows.size());
  std::vector<Values> extended;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::vector<LinearSystem::Term> sum;
    for (Element a : allowed[i]) {
      const std::size_t v = sys.add_var(allowed[i].size() == 1 ? mult[i] : 0, mult[i]);
      row_vars[i].emplace_back(a, v);
      extended.push_back(ext.apply(*rows[i], a));
      sum.emplace_back(v, 1);
    }
    const std::size_t slack =
        sys.add_var(0, static_cast<std::int64_t>(allowed[i].size() - 1) * mult[i]);
    extended.emplace_back();
    sum.emplace_back(slack, -1);
    sys.add_eq(std::move(sum), mult[i]);
  }
  for (const auto& c : approx) {
    std::map<Values, std::vector<LinearSystem::Term>> terms;
    for (std::size_t v = 0; v < extended.size(); ++v) {
      if (extended[v].empty() && !ext.out_vars.empty()) continue;  // slack
      terms[key_of(ext.out_vars, extended[v], c->xs)].emplace_back(v, 1);
      terms[key_of(ext.out_vars, extended[v], c->ys)].emplace_back(v, -1);
    }
    for (auto& [key, t] : terms) sys.add_eq(std::move(t), 0);
  }
  std::pair<bool, MPtr> result{false, nullptr};
  sys.enumerate(
      [&](const std::vector<Mass>& sol) {
        std::vector<std::vector<std::pair<Element, Mass>>> counts(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i)
          for (const auto& [a, v] : row_vars[i])
            if (sol[v] > 0) counts[i].emplace_back(a, sol[v]);
        auto o = run(counts);
        if (!o.first) return false;
        result = o;
        return true;
      },
      budget_);
  return result;
}

void check_inputs(const Structure& A, const Multiteam& mX, const Formula& phi, const MultiOptions& opts) {
  if (A.size() != mX.domain_size()) throw DomainError("multiteam and structure disagree on the domain size");
  for (const auto& v : free_vars(phi))
    if (!mX.has_var(v)) throw DomainError("free variable '" + v + "' is not in the multiteam domain");
  if (mX.cardinality() > opts.max_cardinality) throw RefusedInput("multiteam cardinality exceeds the cap");
  if (A.size() > opts.max_domain) throw RefusedInput("domain size exceeds the cap");
  if (quantifier_depth(phi) > opts.max_quantifier_depth) throw RefusedInput("quantifier depth exceeds the cap");
}

bool replay(const Structure& A, const Multiteam& mX, const Formula& f, const MultiCertificate& c) {
  if (mX.empty()) return true;
  using K = MultiCertificate::Kind;
  if (c.kind == K::Leaf) {
    if (f.op == Op::Approx) return check_approx(A, prob_of_multiteam(mX), f.xs, f.ys);
    if (f.op == Op::CIndep) return check_cindep(A, prob_of_multiteam(mX), f.xs, f.ys, f.zs);
    if (!is_flat(f)) return false;
    for (const auto& [row, m] : mX.rows()) {
      Assignment s;
      for (std::size_t i = 0; i < mX.vars().size(); ++i) s[mX.vars()[i]] = row[i];
      if (!holds_classically(A, f, s)) return false;
    }
    return true;
  }
  switch (f.op) {
    case Op::And:
      return c.kind == K::And && c.children.size() == 2 && replay(A, mX, *f.left, c.children[0]) &&
             replay(A, mX, *f.right, c.children[1]);
    case Op::Or: {
      if (c.kind != K::Or || c.children.size() != 2 || c.vars != mX.vars()) return false;
      Multiteam::Rows Y, Z;
      for (const auto& [row, k] : c.left)
        if (mX.multiplicity(row) < k) return false;
      for (const auto& [row, m] : mX.rows()) {
        auto it = c.left.find(row);
        const std::uint64_t k = it == c.left.end() ? 0 : it->second;
        if (k > 0) Y.emplace(row, k);
        if (m - k > 0) Z.emplace(row, m - k);
      }
      auto mY = Multiteam::from_sorted(mX.vars(), mX.domain_size(), std::move(Y));
      auto mZ = Multiteam::from_sorted(mX.vars(), mX.domain_size(), std::move(Z));
      if (!(disjoint_union(mY, mZ) == mX)) return false;
      return replay(A, mY, *f.left, c.children[0]) && replay(A, mZ, *f.right, c.children[1]);
    }
    case Op::Exists: {
      if (c.kind != K::Exists || c.children.size() != 1 || c.vars != mX.vars()) return false;
      if (c.choice.size() != mX.cardinality()) return false;
      return replay(A, mextend(mX, c.choice, f.name), *f.left, c.children[0]);
    }
    case Op::Forall:
      if (c.kind != K::Forall || c.children.size() != 1) return false;
      return replay(A, mduplicate(mX, f.name), *f.left, c.children[0]);
    default: return false;
  }
}

}  // namespace

std::optional<MultiCertificate> eval_multi_with_witness(const Structure& A, const Multiteam& mX,
                                                        const FormulaPtr& phi, const MultiOptions& opts) {
  check_inputs(A, mX, *phi, opts);
  MultiSearch search(A, opts);
  try {
    auto [ok, cert] = search.eval(phi, to_mass(mX));
    if (!ok) return std::nullopt;
    return materialize(*cert);
  } catch (const BudgetExceeded&) {
    throw RefusedInput("multiteam search exceeded its node budget");
  }
}

bool eval_multi(const Structure& A, const Multiteam& mX, const FormulaPtr& phi, const MultiOptions& opts) {
  return eval_multi_with_witness(A, mX, phi, opts).has_value();
}

bool verify_multi_certificate(const Structure& A, const Multiteam& mX, const Formula& phi,
                              const MultiCertificate& cert) {
  try {
    return replay(A, mX, phi, cert);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace teamsem
