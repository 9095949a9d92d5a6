#include "teamsem/eval_prob.hpp"

#include <algorithm>
#include <functional>
#include <memory>

#include "kernel.hpp"
#include "linsolve.hpp"
#include "search_util.hpp"

namespace teamsem {

using namespace detail;

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Satisfied: return "satisfied";
    case VerdictKind::Refuted: return "refuted";
    case VerdictKind::Unknown: return "unknown";
  }
  return "?";
}

bool holds_classically(const Structure& A, const Formula& f, Assignment& s) {
  switch (f.op) {
    case Op::Eq: return term_value(A, f.args[0], s) == term_value(A, f.args[1], s);
    case Op::Neq: return term_value(A, f.args[0], s) != term_value(A, f.args[1], s);
    case Op::Rel:
    case Op::NegRel: {
      Values vals;
      for (const auto& t : f.args) vals.push_back(term_value(A, t, s));
      return A.holds(f.name, vals) == (f.op == Op::Rel);
    }
    case Op::And: return holds_classically(A, *f.left, s) && holds_classically(A, *f.right, s);
    case Op::Or: return holds_classically(A, *f.left, s) || holds_classically(A, *f.right, s);
    case Op::Exists:
    case Op::Forall: {
      const bool want = f.op == Op::Exists;
      auto old = s.find(f.name);
      std::optional<Element> saved;
      if (old != s.end()) saved = old->second;
      bool result = !want;
      for (Element a = 0; a < A.size(); ++a) {
        s[f.name] = a;
        if (holds_classically(A, *f.left, s) == want) {
          result = want;
          break;
        }
      }
      if (saved) s[f.name] = *saved;
      else s.erase(f.name);
      return result;
    }
    case Op::Approx:
    case Op::CIndep: break;
  }
  throw DomainError("dependency atom evaluated under a single assignment");
}

namespace {

struct CNode;
using CPtr = std::shared_ptr<const CNode>;

struct CNode {
  Certificate::Kind kind = Certificate::Kind::Leaf;
  VarList vars;
  std::map<Values, Rational> allocation;
  std::map<Values, std::vector<Rational>> choice;
  std::vector<CPtr> children;
};

Certificate materialize(const CNode& c) {
  Certificate out;
  out.kind = c.kind;
  out.vars = c.vars;
  out.allocation = c.allocation;
  out.choice = c.choice;
  for (const auto& ch : c.children) out.children.push_back(materialize(*ch));
  return out;
}

const CPtr& leaf() {
  static const CPtr node = std::make_shared<const CNode>();
  return node;
}

Rational ratio(Mass a, Mass b) {
  Rational r(mpz_class(static_cast<long>(a)), mpz_class(static_cast<long>(b)));
  r.canonicalize();
  return r;
}

struct Outcome {
  bool sat = false;
  bool complete = true;
  CPtr cert;
};

Outcome fail(bool complete) { return {false, complete, nullptr}; }

struct Block {
  std::size_t begin, end;  // chain positions [begin, end)
};

class ProbSearch {
 public:
  ProbSearch(const Structure& A, const ProbOptions& opts) : A_(A), opts_(opts), n_(A.size()) {}

  Outcome eval(const FormulaPtr& f, const MassTeam& X);
  std::uint64_t steps() const { return budget_.used(); }

  /// Constant-distribution evaluation of an existential chain; nullopt when
  /// the shape does not apply.
  std::optional<Outcome> eval_chain(const FormulaPtr& f, const MassTeam& X);

 private:
  const Structure& A_;
  ProbOptions opts_;
  int n_;
  FlatCache flat_;
  Budget budget_{opts_.node_budget};
  std::map<std::pair<const Formula*, MassTeam>, Outcome> memo_;

  bool row_holds(const Formula& f, const VarList& vars, const Values& row) const {
    Assignment s = assignment_of(vars, row);
    return holds_classically(A_, f, s);
  }
  bool search_free(const Formula& f) {
    if (flat_(f) || f.is_dependency_atom()) return true;
    if (f.op == Op::And) return search_free(*f.left) && search_free(*f.right);
    if (f.op == Op::Forall) return search_free(*f.left);
    return false;
  }

  CPtr flat_cert(const FormulaPtr& f, const MassTeam& X);
  Outcome dispatch(const FormulaPtr& f, const MassTeam& X);
  Outcome eval_and(const FormulaPtr& f, const MassTeam& X);
  Outcome eval_or(const FormulaPtr& f, const MassTeam& X);
  Outcome eval_exists(const FormulaPtr& f, const MassTeam& X);
  Outcome eval_forall(const FormulaPtr& f, const MassTeam& X);
  // Per row of a team (map order): value tuples for the block with masses.
  using Joint = std::vector<std::vector<std::pair<Values, Mass>>>;
  std::vector<Extender> extenders(const VarList& vars, const VarList& ys, std::size_t begin, std::size_t end) const;
  MassTeam apply_joint(const MassTeam& X, const std::vector<Extender>& exts, const Joint& joint) const;
  CPtr block_cert(const MassTeam& X, const std::vector<Extender>& exts, const Joint& joint, const CPtr& child) const;
  Values key_of(const VarList& vars, const Values& row, const VarList& tuple) const;
  Outcome eval_functional(const FormulaPtr& f, const MassTeam& X, const Formula& atom,
                          const std::vector<FormulaPtr>& cs);
};

Outcome ProbSearch::eval(const FormulaPtr& f, const MassTeam& X) {
  budget_.tick();
  if (X.rows.empty()) return {true, true, leaf()};
  if (flat_(*f)) {
    for (const auto& [row, m] : X.rows)
      if (!row_holds(*f, X.vars, row)) return fail(true);
    return {true, true, flat_cert(f, X)};
  }
  auto key = std::make_pair(f.get(), X);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  Outcome out = dispatch(f, X);
  if (memo_.size() > 200000) memo_.clear();
  memo_.emplace(std::move(key), out);
  return out;
}

Outcome ProbSearch::dispatch(const FormulaPtr& f, const MassTeam& X) {
  switch (f->op) {
    case Op::Approx: return {mass_approx(X, f->xs, f->ys), true, leaf()};
    case Op::CIndep: return {mass_cindep(X, f->xs, f->ys, f->zs), true, leaf()};
    case Op::And: return eval_and(f, X);
    case Op::Or: return eval_or(f, X);
    case Op::Exists: return eval_exists(f, X);
    case Op::Forall: return eval_forall(f, X);
    default: break;
  }
  throw DomainError("unexpected literal in dependency search");
}

CPtr ProbSearch::flat_cert(const FormulaPtr& f, const MassTeam& X) {
  if (X.rows.empty() || f->is_literal()) return leaf();
  auto node = std::make_shared<CNode>();
  switch (f->op) {
    case Op::And:
      node->kind = Certificate::Kind::And;
      node->children = {flat_cert(f->left, X), flat_cert(f->right, X)};
      break;
    case Op::Or: {
      node->kind = Certificate::Kind::Or;
      node->vars = X.vars;
      MassTeam Y{X.vars, {}}, Z{X.vars, {}};
      const Mass t = X.total();
      for (const auto& [row, m] : X.rows) {
        if (row_holds(*f->left, X.vars, row)) {
          Y.rows.emplace(row, m);
          node->allocation.emplace(row, ratio(m, t));
        } else {
          Z.rows.emplace(row, m);
        }
      }
      node->children = {flat_cert(f->left, Y), flat_cert(f->right, Z)};
      break;
    }
    case Op::Exists: {
      node->kind = Certificate::Kind::Exists;
      node->vars = X.vars;
      Extender ext(X.vars, f->name);
      MassTeam next{ext.out_vars, {}};
      for (const auto& [row, m] : X.rows) {
        Assignment s = assignment_of(X.vars, row);
        Element pick = -1;
        for (Element a = 0; a < n_ && pick < 0; ++a) {
          s[f->name] = a;
          if (holds_classically(A_, *f->left, s)) pick = a;
        }
        if (pick < 0) throw std::logic_error("flat certificate requested for a failing row");
        std::vector<Rational> d(static_cast<std::size_t>(n_), Rational(0));
        d[static_cast<std::size_t>(pick)] = 1;
        node->choice.emplace(row, std::move(d));
        next.rows[ext.apply(row, pick)] += m;
      }
      node->children = {flat_cert(f->left, next)};
      break;
    }
    case Op::Forall: {
      node->kind = Certificate::Kind::Forall;
      Extender ext(X.vars, f->name);
      MassTeam next{ext.out_vars, {}};
      for (const auto& [row, m] : X.rows)
        for (Element a = 0; a < n_; ++a) next.rows[ext.apply(row, a)] += m;
      node->children = {flat_cert(f->left, next)};
      break;
    }
    default: return leaf();
  }
  return node;
}

Outcome ProbSearch::eval_and(const FormulaPtr& f, const MassTeam& X) {
  // Dependency-free or search-free sides are cheap and exact; try them first.
  const bool swap = search_free(*f->right) && !search_free(*f->left);
  const FormulaPtr& first = swap ? f->right : f->left;
  const FormulaPtr& second = swap ? f->left : f->right;
  Outcome a = eval(first, X);
  if (!a.sat && a.complete) return fail(true);
  Outcome b = eval(second, X);
  if (a.sat && b.sat) {
    auto node = std::make_shared<CNode>();
    node->kind = Certificate::Kind::And;
    node->children = swap ? std::vector<CPtr>{b.cert, a.cert} : std::vector<CPtr>{a.cert, b.cert};
    return {true, true, node};
  }
  return fail((!a.sat && a.complete) || (!b.sat && b.complete));
}

Values ProbSearch::key_of(const VarList& vars, const Values& row, const VarList& tuple) const {
  Values key;
  key.reserve(tuple.size());
  for (const auto& v : tuple) key.push_back(row[positions(vars, {v})[0]]);
  return key;
}

Outcome ProbSearch::eval_or(const FormulaPtr& f, const MassTeam& X) {
  std::vector<FormulaPtr> lc, rc, lflat, rflat;
  conjuncts(f->left, lc);
  conjuncts(f->right, rc);
  for (const auto& c : lc)
    if (flat_(*c)) lflat.push_back(c);
  for (const auto& c : rc)
    if (flat_(*c)) rflat.push_back(c);

  // One variable per row: the mass sent to the right disjunct. Rows failing
  // the dependency-free conjuncts of a side are forced to the other side.
  LinearSystem sys;
  std::vector<const Values*> rows;
  std::vector<Mass> masses;
  bool complete = true;
  for (const auto& [row, m] : X.rows) {
    auto ok = [&](const std::vector<FormulaPtr>& cs) {
      return std::all_of(cs.begin(), cs.end(), [&](const FormulaPtr& c) { return row_holds(*c, X.vars, row); });
    };
    const bool okL = ok(lflat), okR = ok(rflat);
    if (!okL && !okR) return fail(true);
    if (okL && okR) {
      sys.add_var(0, m);
      complete = false;
    } else {
      sys.add_var(okL ? 0 : m, okL ? 0 : m);
    }
    rows.push_back(&row);
    masses.push_back(m);
  }

  // Marginal identities at the top level of either side are linear in the split.
  auto add_side = [&](const std::vector<FormulaPtr>& side, bool right) {
    for (const auto& c : side) {
      if (c->op != Op::Approx) continue;
      std::map<Values, std::vector<LinearSystem::Term>> terms;
      std::map<Values, Mass> rhs;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        Values kx = key_of(X.vars, *rows[i], c->xs), ky = key_of(X.vars, *rows[i], c->ys);
        if (right) {
          terms[kx].emplace_back(i, 1);
          terms[ky].emplace_back(i, -1);
        } else {
          terms[kx].emplace_back(i, -1);
          rhs[kx] -= masses[i];
          terms[ky].emplace_back(i, 1);
          rhs[ky] += masses[i];
        }
      }
      for (auto& [key, t] : terms) sys.add_eq(std::move(t), rhs[key]);
    }
  };
  add_side(lc, false);
  add_side(rc, true);

  const Mass t = X.total();
  Outcome result = fail(false);
  const bool found = sys.enumerate(
      [&](const std::vector<Mass>& b) {
        MassTeam Y{X.vars, {}}, Z{X.vars, {}};
        for (std::size_t i = 0; i < rows.size(); ++i) {
          if (masses[i] - b[i] > 0) Y.rows.emplace(*rows[i], masses[i] - b[i]);
          if (b[i] > 0) Z.rows.emplace(*rows[i], b[i]);
        }
        Outcome l = eval(f->left, Y);
        if (!l.sat) {
          if (!l.complete) complete = false;
          return false;
        }
        Outcome r = eval(f->right, Z);
        if (!r.sat) {
          if (!r.complete) complete = false;
          return false;
        }
        auto node = std::make_shared<CNode>();
        node->kind = Certificate::Kind::Or;
        node->vars = X.vars;
        for (const auto& [row, a] : Y.rows) node->allocation.emplace(row, ratio(a, t));
        node->children = {l.cert, r.cert};
        result = {true, true, node};
        return true;
      },
      budget_);
  if (found) return result;
  return fail(complete);
}

Outcome ProbSearch::eval_forall(const FormulaPtr& f, const MassTeam& X) {
  Extender ext(X.vars, f->name);
  MassTeam next{ext.out_vars, {}};
  for (const auto& [row, m] : X.rows)
    for (Element a = 0; a < n_; ++a) next.rows[ext.apply(row, a)] += m;
  Outcome o = eval(f->left, next);
  if (!o.sat) return o;
  auto node = std::make_shared<CNode>();
  node->kind = Certificate::Kind::Forall;
  node->children = {o.cert};
  return {true, true, node};
}

std::vector<Extender> ProbSearch::extenders(const VarList& vars, const VarList& ys, std::size_t begin,
                                            std::size_t end) const {
  std::vector<Extender> exts;
  VarList cur = vars;
  for (std::size_t j = begin; j < end; ++j) {
    exts.emplace_back(cur, ys[j]);
    cur = exts.back().out_vars;
  }
  return exts;
}

MassTeam ProbSearch::apply_joint(const MassTeam& X, const std::vector<Extender>& exts, const Joint& joint) const {
  MassTeam out{exts.empty() ? X.vars : exts.back().out_vars, {}};
  std::size_t i = 0;
  for (const auto& [row, m] : X.rows) {
    for (const auto& [t, mass] : joint[i]) {
      if (mass == 0) continue;
      Values r = row;
      for (std::size_t j = 0; j < exts.size(); ++j) r = exts[j].apply(r, t[j]);
      out.rows[r] += mass;
    }
    ++i;
  }
  return out;
}

CPtr ProbSearch::block_cert(const MassTeam& X, const std::vector<Extender>& exts, const Joint& joint,
                            const CPtr& child) const {
  // Sequential choices: the distribution of the j-th variable given the
  // earlier ones on the same row.
  std::vector<std::shared_ptr<CNode>> nodes;
  for (std::size_t j = 0; j < exts.size(); ++j) {
    auto node = std::make_shared<CNode>();
    node->kind = Certificate::Kind::Exists;
    node->vars = j == 0 ? X.vars : exts[j - 1].out_vars;
    std::size_t i = 0;
    for (const auto& [row, m] : X.rows) {
      std::map<Values, Mass> prefix_mass;
      std::map<Values, std::vector<Mass>> next_mass;
      for (const auto& [t, mass] : joint[i]) {
        if (mass == 0) continue;
        Values prefix(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(j));
        prefix_mass[prefix] += mass;
        auto& v = next_mass[prefix];
        v.resize(static_cast<std::size_t>(n_), 0);
        v[static_cast<std::size_t>(t[j])] += mass;
      }
      for (const auto& [prefix, pm] : prefix_mass) {
        Values key = row;
        for (std::size_t k = 0; k < j; ++k) key = exts[k].apply(key, prefix[k]);
        std::vector<Rational> d(static_cast<std::size_t>(n_), Rational(0));
        const auto& v = next_mass[prefix];
        for (std::size_t a = 0; a < v.size(); ++a)
          if (v[a] > 0) d[a] = ratio(v[a], pm);
        node->choice.emplace(std::move(key), std::move(d));
      }
      ++i;
    }
    nodes.push_back(node);
  }
  CPtr cur = child;
  for (std::size_t j = nodes.size(); j-- > 0;) {
    nodes[j]->children = {cur};
    cur = nodes[j];
  }
  return cur;
}

namespace {

bool only_var(const VarList& vs, const std::string& x) {
  return !vs.empty() && std::all_of(vs.begin(), vs.end(), [&](const std::string& v) { return v == x; });
}

// (cindep W (y) (y)) with W among `known`: y is a function of W.
const Formula* functional_atom(const std::vector<FormulaPtr>& cs, const std::string& y,
                               const std::set<std::string>& known) {
  for (const auto& c : cs) {
    if (c->op != Op::CIndep || !only_var(c->ys, y) || !only_var(c->zs, y)) continue;
    if (std::all_of(c->xs.begin(), c->xs.end(), [&](const std::string& w) { return w != y && known.count(w); }))
      return c.get();
  }
  return nullptr;
}

}  // namespace

Outcome ProbSearch::eval_functional(const FormulaPtr& f, const MassTeam& X, const Formula& atom,
                                    const std::vector<FormulaPtr>& cs) {
  const std::string& x = f->name;
  std::vector<FormulaPtr> fc;
  for (const auto& c : cs) {
    if (!flat_(*c)) continue;
    auto fv = free_vars(*c);
    if (std::all_of(fv.begin(), fv.end(), [&](const std::string& v) {
          return v == x || std::binary_search(X.vars.begin(), X.vars.end(), v);
        }))
      fc.push_back(c);
  }
  auto idx = positions(X.vars, atom.xs);
  std::map<Values, std::vector<std::size_t>> classes;
  std::vector<std::vector<Element>> allowed;
  std::vector<Mass> masses;
  for (const auto& [row, m] : X.rows) {
    Assignment s = assignment_of(X.vars, row);
    std::vector<Element> ok;
    for (Element a = 0; a < n_; ++a) {
      s[x] = a;
      if (std::all_of(fc.begin(), fc.end(), [&](const FormulaPtr& c) { return holds_classically(A_, *c, s); }))
        ok.push_back(a);
    }
    if (ok.empty()) return fail(true);
    Values key;
    for (auto k : idx) key.push_back(row[k]);
    classes[key].push_back(allowed.size());
    allowed.push_back(std::move(ok));
    masses.push_back(m);
  }
  std::vector<std::vector<Element>> class_allowed;
  std::vector<std::vector<std::size_t>> members;
  for (auto& [key, rows] : classes) {
    std::vector<Element> common = allowed[rows[0]];
    for (auto r : rows) {
      std::vector<Element> tmp;
      std::set_intersection(common.begin(), common.end(), allowed[r].begin(), allowed[r].end(),
                            std::back_inserter(tmp));
      common = std::move(tmp);
    }
    if (common.empty()) return fail(true);
    class_allowed.push_back(std::move(common));
    members.push_back(rows);
  }
  std::vector<std::int64_t> max;
  for (const auto& c : class_allowed) max.push_back(static_cast<std::int64_t>(c.size()) - 1);
  const auto exts = extenders(X.vars, {x}, 0, 1);
  Odometer odo(max);
  bool complete = true;
  do {
    budget_.tick();
    Joint joint(masses.size());
    for (std::size_t k = 0; k < members.size(); ++k)
      for (auto r : members[k]) joint[r] = {{Values{class_allowed[k][static_cast<std::size_t>(odo[k])]}, masses[r]}};
    Outcome o = eval(f->left, apply_joint(X, exts, joint));
    if (o.sat) return {true, true, block_cert(X, exts, joint, o.cert)};
    if (!o.complete) complete = false;
  } while (odo.next());
  return fail(complete);
}

Outcome ProbSearch::eval_exists(const FormulaPtr& f, const MassTeam& X) {
  if (opts_.constant_distribution_chains)
    if (auto o = eval_chain(f, X)) return *o;

  // Consecutive existentials are searched as one joint block.
  VarList ys;
  std::vector<FormulaPtr> chain;
  FormulaPtr body = f;
  while (body->op == Op::Exists) {
    if (std::find(ys.begin(), ys.end(), body->name) != ys.end()) break;
    if (!ys.empty() && std::binary_search(X.vars.begin(), X.vars.end(), body->name)) break;
    chain.push_back(body);
    ys.push_back(body->name);
    body = body->left;
  }
  std::vector<FormulaPtr> cs;
  conjuncts(body, cs);

  std::set<std::string> known(X.vars.begin(), X.vars.end());
  if (const Formula* atom = functional_atom(cs, ys[0], known)) return eval_functional(f, X, *atom, cs);
  known.insert(ys[0]);
  for (std::size_t j = 1; j < ys.size(); ++j) {
    if (functional_atom(cs, ys[j], known)) {
      body = chain[j];
      ys.resize(j);
      cs = {body};
      break;
    }
    known.insert(ys[j]);
  }

  const int k = static_cast<int>(ys.size());
  const std::size_t cells = tuple_count(n_, k);
  if (cells > 4096) throw RefusedInput("existential block ranges over too many value tuples");
  std::set<std::string> scope(X.vars.begin(), X.vars.end());
  scope.insert(ys.begin(), ys.end());
  auto in_scope = [&](const Formula& c) {
    auto fv = free_vars(c);
    return std::includes(scope.begin(), scope.end(), fv.begin(), fv.end());
  };
  std::vector<FormulaPtr> fc, approx;
  for (const auto& c : cs) {
    if (flat_(*c) && in_scope(*c)) fc.push_back(c);
    if (c->op == Op::Approx && in_scope(*c)) approx.push_back(c);
  }

  const auto exts = extenders(X.vars, ys, 0, ys.size());
  const VarList& out_vars = exts.back().out_vars;
  LinearSystem sys;
  std::vector<std::vector<std::pair<Values, std::size_t>>> row_vars;  // (tuple, variable)
  std::vector<Values> extended_rows;
  std::vector<std::size_t> var_row;
  bool complete = true;
  for (const auto& [row, m] : X.rows) {
    Assignment s = assignment_of(X.vars, row);
    std::vector<std::pair<Values, std::size_t>> vs;
    std::vector<LinearSystem::Term> sum;
    for (std::size_t c = 0; c < cells; ++c) {
      Values t = tuple_at(n_, k, c);
      for (int j = 0; j < k; ++j) s[ys[static_cast<std::size_t>(j)]] = t[static_cast<std::size_t>(j)];
      if (!std::all_of(fc.begin(), fc.end(), [&](const FormulaPtr& q) { return holds_classically(A_, *q, s); }))
        continue;
      const std::size_t v = sys.add_var(0, m);
      Values r = row;
      for (std::size_t j = 0; j < exts.size(); ++j) r = exts[j].apply(r, t[j]);
      extended_rows.push_back(std::move(r));
      var_row.push_back(row_vars.size());
      vs.emplace_back(std::move(t), v);
      sum.emplace_back(v, 1);
    }
    if (vs.empty()) return fail(true);
    if (vs.size() > 1) complete = false;
    sys.add_eq(std::move(sum), m);
    row_vars.push_back(std::move(vs));
  }
  for (const auto& c : approx) {
    std::map<Values, std::vector<LinearSystem::Term>> terms;
    for (std::size_t v = 0; v < extended_rows.size(); ++v) {
      terms[key_of(out_vars, extended_rows[v], c->xs)].emplace_back(v, 1);
      terms[key_of(out_vars, extended_rows[v], c->ys)].emplace_back(v, -1);
    }
    for (auto& [key, t] : terms) sys.add_eq(std::move(t), 0);
  }

  Outcome result = fail(false);
  const bool found = sys.enumerate(
      [&](const std::vector<Mass>& sol) {
        Joint joint(row_vars.size());
        for (std::size_t i = 0; i < row_vars.size(); ++i)
          for (const auto& [t, v] : row_vars[i])
            if (sol[v] > 0) joint[i].emplace_back(t, sol[v]);
        Outcome o = eval(body, apply_joint(X, exts, joint));
        if (!o.sat) {
          if (!o.complete) complete = false;
          return false;
        }
        result = {true, true, block_cert(X, exts, joint, o.cert)};
        return true;
      },
      budget_);
  if (found) return result;
  return fail(complete);
}

namespace {

// Splits the chain into consecutive blocks, each guarded by an atom
// (cindep () W G) with G the block and W covering the free variables and all
// earlier blocks. Smallest blocks first.
bool find_blocks(const std::vector<FormulaPtr>& cs, const VarList& ys, const std::set<std::string>& team,
                 const std::set<std::string>& fr, std::size_t p, std::vector<Block>& out) {
  if (p == ys.size()) return true;
  const std::set<std::string> yset(ys.begin(), ys.end());
  for (std::size_t len = 1; p + len <= ys.size(); ++len) {
    const std::set<std::string> expect(ys.begin() + static_cast<std::ptrdiff_t>(p),
                                       ys.begin() + static_cast<std::ptrdiff_t>(p + len));
    for (const auto& c : cs) {
      if (c->op != Op::CIndep || !c->xs.empty()) continue;
      for (int orient = 0; orient < 2; ++orient) {
        const VarList& W = orient ? c->zs : c->ys;
        const VarList& G = orient ? c->ys : c->zs;
        if (std::set<std::string>(G.begin(), G.end()) != expect) continue;
        const std::set<std::string> w(W.begin(), W.end());
        bool ok = true;
        for (const auto& v : w)
          if (expect.count(v) || !(team.count(v) || yset.count(v))) ok = false;
        for (const auto& v : fr)
          if (!w.count(v)) ok = false;
        for (std::size_t j = 0; j < p; ++j)
          if (!w.count(ys[j])) ok = false;
        if (!ok) continue;
        out.push_back({p, p + len});
        if (find_blocks(cs, ys, team, fr, p + len, out)) return true;
        out.pop_back();
      }
    }
  }
  return false;
}

}  // namespace

std::optional<Outcome> ProbSearch::eval_chain(const FormulaPtr& f, const MassTeam& X) {
  std::vector<const Formula*> chain;
  VarList ys;
  FormulaPtr body = f;
  while (body->op == Op::Exists) {
    chain.push_back(body.get());
    ys.push_back(body->name);
    body = body->left;
  }
  const std::set<std::string> yset(ys.begin(), ys.end());
  if (yset.size() != ys.size()) return std::nullopt;
  for (const auto& y : ys)
    if (std::binary_search(X.vars.begin(), X.vars.end(), y)) return std::nullopt;

  std::vector<FormulaPtr> cs;
  conjuncts(body, cs);
  const std::set<std::string> team(X.vars.begin(), X.vars.end());
  std::vector<Block> blocks;
  if (!find_blocks(cs, ys, team, free_vars(*f), 0, blocks)) return std::nullopt;

  const int N = opts_.resolution;
  std::vector<FormulaPtr> fc;
  for (const auto& c : cs)
    if (flat_(*c)) fc.push_back(c);

  // Tuples for ys that every row accepts under the dependency-free conjuncts.
  // A constant distribution must live inside this set.
  std::optional<std::set<Values>> accepted;
  if (tuple_count(n_, static_cast<int>(ys.size())) <= 4096) {
    std::set<Values> acc;
    const std::size_t cells = tuple_count(n_, static_cast<int>(ys.size()));
    for (std::size_t c = 0; c < cells; ++c) acc.insert(tuple_at(n_, static_cast<int>(ys.size()), c));
    for (const auto& [row, m] : X.rows) {
      Assignment s = assignment_of(X.vars, row);
      std::set<Values> row_ok;
      for (const auto& g : acc) {
        for (std::size_t j = 0; j < ys.size(); ++j) s[ys[j]] = g[j];
        if (std::all_of(fc.begin(), fc.end(), [&](const FormulaPtr& c) { return holds_classically(A_, *c, s); }))
          row_ok.insert(g);
      }
      // A row that accepts nothing cannot be extended at all.
      if (row_ok.empty()) return fail(true);
      acc = std::move(row_ok);
    }
    if (acc.empty()) return fail(true);
    accepted = std::move(acc);
  }

  // Search-free conjuncts are checked as soon as their variables exist.
  std::vector<std::vector<FormulaPtr>> early(blocks.size());
  for (const auto& c : cs) {
    if (!search_free(*c)) continue;
    const auto fv = free_vars(*c);
    std::set<std::string> have = team;
    for (std::size_t i = 0; i + 1 < blocks.size(); ++i) {
      for (std::size_t j = blocks[i].begin; j < blocks[i].end; ++j) have.insert(ys[j]);
      if (std::includes(have.begin(), have.end(), fv.begin(), fv.end())) {
        early[i].push_back(c);
        break;
      }
    }
  }

  std::vector<std::vector<std::vector<Mass>>> options(blocks.size());
  for (std::size_t bi = 0; bi < blocks.size(); ++bi) {
    const int len = static_cast<int>(blocks[bi].end - blocks[bi].begin);
    const std::size_t cells = tuple_count(n_, len);
    if (cells > 4096) throw RefusedInput("constant distribution over too many cells");
    std::vector<std::size_t> support;
    for (std::size_t c = 0; c < cells; ++c) {
      bool ok = true;
      if (accepted && blocks.size() == 1) ok = accepted->count(tuple_at(n_, len, c)) > 0;
      if (ok) support.push_back(c);
    }
    if (composition_count(N, support.size(), 200001) > 200000) throw BudgetExceeded{};
    for (const auto& comp : compositions(N, support.size())) {
      std::vector<Mass> d(cells, 0);
      for (std::size_t k = 0; k < support.size(); ++k) d[support[k]] = comp[k];
      options[bi].push_back(std::move(d));
    }
  }

  std::vector<std::vector<Mass>> chosen(blocks.size());
  auto block_joint = [&](const MassTeam& T, std::size_t bi, const std::vector<Mass>& d) {
    const int len = static_cast<int>(blocks[bi].end - blocks[bi].begin);
    Joint joint;
    for (const auto& [row, m] : T.rows) {
      std::vector<std::pair<Values, Mass>> parts;
      for (std::size_t c = 0; c < d.size(); ++c) {
        if (d[c] == 0) continue;
        const Wide mass = static_cast<Wide>(m) * d[c];
        if (mass > INT64_MAX) throw RefusedInput("team mass exceeds 64 bits");
        parts.emplace_back(tuple_at(n_, len, c), static_cast<Mass>(mass));
      }
      joint.push_back(std::move(parts));
    }
    return joint;
  };
  std::vector<MassTeam> bases{X};
  // dfs holds references into bases across push_back.
  bases.reserve(blocks.size() + 1);
  std::function<std::optional<Outcome>(std::size_t)> dfs = [&](std::size_t i) -> std::optional<Outcome> {
    const MassTeam& T = bases[i];
    if (i == blocks.size()) {
      Outcome o = eval(body, T);
      if (o.sat) return o;
      return std::nullopt;
    }
    auto exts = extenders(T.vars, ys, blocks[i].begin, blocks[i].end);
    for (const auto& d : options[i]) {
      budget_.tick();
      MassTeam next = apply_joint(T, exts, block_joint(T, i, d));
      bool ok = true;
      for (const auto& c : early[i])
        if (!eval(c, next).sat) {
          ok = false;
          break;
        }
      if (!ok) continue;
      chosen[i] = d;
      bases.push_back(std::move(next));
      if (auto r = dfs(i + 1)) return r;
      bases.pop_back();
    }
    return std::nullopt;
  };
  auto r = dfs(0);
  if (!r) return fail(false);
  CPtr cert = r->cert;
  for (std::size_t i = blocks.size(); i-- > 0;) {
    auto exts = extenders(bases[i].vars, ys, blocks[i].begin, blocks[i].end);
    cert = block_cert(bases[i], exts, block_joint(bases[i], i, chosen[i]), cert);
  }
  return Outcome{true, true, cert};
}

// ---------------------------------------------------------------------------

void check_inputs(const Structure& A, const ProbabilisticTeam& X, const Formula& phi, const ProbOptions& opts) {
  if (opts.resolution < 1) throw DomainError("resolution must be at least 1");
  if (A.size() != X.domain_size()) throw DomainError("team and structure disagree on the domain size");
  if (A.size() > opts.max_domain) throw RefusedInput("domain larger than the configured maximum");
  if (X.size() > opts.max_rows) throw RefusedInput("team has more rows than the configured maximum");
  for (const auto& v : free_vars(phi))
    if (!X.has_var(v)) throw DomainError("free variable '" + v + "' is not in the team domain");
}

Mass root_scale(const ProbabilisticTeam& X, int N) {
  mpz_class L = X.denominator_lcm() * N;
  if (L > mpz_class(1) << 40) throw RefusedInput("grid scale exceeds 2^40");
  return L.get_si();
}

Verdict run(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi, const ProbOptions& opts,
            const std::function<Outcome(ProbSearch&, const MassTeam&)>& body) {
  check_inputs(A, X, *phi, opts);
  MassTeam M = to_mass(X, root_scale(X, opts.resolution));
  ProbSearch search(A, opts);
  Verdict v;
  v.resolution = opts.resolution;
  try {
    Outcome o = body(search, M);
    if (o.sat) {
      v.kind = VerdictKind::Satisfied;
      v.certificate = materialize(*o.cert);
    } else {
      v.kind = o.complete ? VerdictKind::Refuted : VerdictKind::Unknown;
    }
  } catch (const BudgetExceeded&) {
    v.kind = VerdictKind::Unknown;
  }
  v.nodes = search.steps();
  return v;
}

bool replay(const Structure& A, const ProbabilisticTeam& X, const Formula& f, const Certificate& c,
            FlatCache& flat) {
  if (X.empty()) return true;
  const int n = X.domain_size();
  if (c.kind == Certificate::Kind::Leaf) {
    if (f.op == Op::Approx) return approx_on(X.vars(), X.rows(), f.xs, f.ys);
    if (f.op == Op::CIndep) return cindep_on(X.vars(), X.rows(), f.xs, f.ys, f.zs);
    if (!flat(f)) return false;
    for (const auto& [row, w] : X.rows()) {
      Assignment s = X.assignment(row);
      if (!holds_classically(A, f, s)) return false;
    }
    return true;
  }
  switch (f.op) {
    case Op::And:
      return c.kind == Certificate::Kind::And && c.children.size() == 2 && replay(A, X, *f.left, c.children[0], flat) &&
             replay(A, X, *f.right, c.children[1], flat);
    case Op::Or: {
      if (c.kind != Certificate::Kind::Or || c.children.size() != 2 || c.vars != X.vars()) return false;
      for (const auto& [row, a] : c.allocation) {
        auto it = X.rows().find(row);
        if (it == X.rows().end() || a < 0 || a > it->second) return false;
      }
      ProbabilisticTeam::Rows Y, Z;
      Rational k = 0;
      for (const auto& [row, w] : X.rows()) {
        auto it = c.allocation.find(row);
        const Rational a = it == c.allocation.end() ? Rational(0) : it->second;
        if (a > 0) Y.emplace(row, a);
        if (w - a > 0) Z.emplace(row, w - a);
        k += a;
      }
      for (auto& [row, a] : Y) a /= k;
      for (auto& [row, a] : Z) a /= (1 - k);
      auto Yt = ProbabilisticTeam::from_sorted(X.vars(), n, std::move(Y));
      auto Zt = ProbabilisticTeam::from_sorted(X.vars(), n, std::move(Z));
      return replay(A, Yt, *f.left, c.children[0], flat) && replay(A, Zt, *f.right, c.children[1], flat);
    }
    case Op::Exists: {
      if (c.kind != Certificate::Kind::Exists || c.children.size() != 1 || c.vars != X.vars()) return false;
      for (const auto& [row, d] : c.choice)
        if (!X.rows().count(row)) return false;
      return replay(A, extend(X, c.choice, f.name), *f.left, c.children[0], flat);
    }
    case Op::Forall:
      if (c.kind != Certificate::Kind::Forall || c.children.size() != 1) return false;
      return replay(A, duplicate(X, f.name), *f.left, c.children[0], flat);
    default: return false;
  }
}

}  // namespace

bool check_approx(const Structure& A, const ProbabilisticTeam& X, const VarList& xs, const VarList& ys) {
  (void)A;
  return approx_on(X.vars(), X.rows(), xs, ys);
}

bool check_cindep(const Structure& A, const ProbabilisticTeam& X, const VarList& xs, const VarList& ys,
                  const VarList& zs) {
  (void)A;
  return cindep_on(X.vars(), X.rows(), xs, ys, zs);
}

Verdict eval_prob(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi, const ProbOptions& opts) {
  return run(A, X, phi, opts, [&](ProbSearch& s, const MassTeam& M) { return s.eval(phi, M); });
}

Verdict eval_const_dist(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi,
                        const ProbOptions& opts) {
  VarList ys;
  FormulaPtr body = phi;
  while (body->op == Op::Exists) {
    ys.push_back(body->name);
    body = body->left;
  }
  std::vector<FormulaPtr> cs;
  conjuncts(body, cs);
  const std::set<std::string> yset(ys.begin(), ys.end());
  const auto fr = free_vars(*phi);
  bool shaped = !ys.empty() && yset.size() == ys.size();
  if (shaped) {
    shaped = std::any_of(cs.begin(), cs.end(), [&](const FormulaPtr& c) {
      if (c->op != Op::CIndep || !c->xs.empty()) return false;
      for (int orient = 0; orient < 2; ++orient) {
        const VarList& W = orient ? c->zs : c->ys;
        const VarList& G = orient ? c->ys : c->zs;
        const std::set<std::string> w(W.begin(), W.end());
        if (std::set<std::string>(G.begin(), G.end()) == yset &&
            std::includes(w.begin(), w.end(), fr.begin(), fr.end()))
          return true;
      }
      return false;
    });
  }
  if (!shaped) throw RefusedInput("formula is not of the form exists ys ((cindep () xs ys) & psi)");
  ProbOptions o = opts;
  o.constant_distribution_chains = true;
  return run(A, X, phi, o, [&](ProbSearch& s, const MassTeam& M) {
    auto r = s.eval_chain(phi, M);
    if (!r) throw RefusedInput("variables of the chain are not fresh for the team");
    return *r;
  });
}

bool verify_certificate(const Structure& A, const ProbabilisticTeam& X, const Formula& phi, const Certificate& cert) {
  try {
    FlatCache flat;
    return replay(A, X, phi, cert, flat);
  } catch (const std::exception&) {
    return false;
  }
}

LocalityReport check_locality(const Structure& A, const ProbabilisticTeam& X, const FormulaPtr& phi,
                              const std::set<std::string>& V, const ProbOptions& opts) {
  LocalityReport rep;
  rep.full = eval_prob(A, X, phi, opts);
  rep.restricted = eval_prob(A, restrict(X, V), phi, opts);
  rep.consistent = !(rep.full.decided() && rep.restricted.decided() && rep.full.kind != rep.restricted.kind);
  return rep;
}

}  // namespace teamsem
