#include "teamsem/transform.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <stdexcept>

#include "teamsem/rational.hpp"

namespace teamsem {

namespace {

VarList dedupe(const VarList& v) {
  VarList out;
  for (const auto& x : v)
    if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
  return out;
}

VarList minus(const VarList& a, const VarList& b) {
  VarList out;
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) == b.end()) out.push_back(x);
  return out;
}

VarList intersect(const VarList& a, const VarList& b) {
  VarList out;
  for (const auto& x : a)
    if (std::find(b.begin(), b.end(), x) != b.end()) out.push_back(x);
  return out;
}

VarList concat(VarList a, const VarList& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

bool contains(const VarList& v, const std::string& x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// Names of the form prefix+k that do not occur in the input.
class Fresh {
 public:
  void reserve(const std::string& s) { used_.insert(s); }
  std::string operator()(const std::string& prefix) {
    for (;;) {
      std::string s = prefix + std::to_string(next_[prefix]++);
      if (used_.insert(s).second) return s;
    }
  }
  VarList tuple(const std::string& prefix, std::size_t n) {
    VarList out;
    for (std::size_t i = 0; i < n; ++i) out.push_back((*this)(prefix));
    return out;
  }

 private:
  std::set<std::string> used_;
  std::map<std::string, int> next_;
};

void reserve_names(Fresh& fresh, const Formula& f) {
  fresh.reserve(f.name);
  for (const auto& t : f.args) fresh.reserve(t.name);
  for (const auto* v : {&f.xs, &f.ys, &f.zs})
    for (const auto& x : *v) fresh.reserve(x);
  if (f.left) reserve_names(fresh, *f.left);
  if (f.right) reserve_names(fresh, *f.right);
}

void reserve_names(Fresh& fresh, const NumTerm& t) {
  fresh.reserve(t.name);
  for (const auto& x : t.args) fresh.reserve(x);
  if (t.left) reserve_names(fresh, *t.left);
  if (t.right) reserve_names(fresh, *t.right);
}

void reserve_names(Fresh& fresh, const EsofFormula& f) {
  fresh.reserve(f.name);
  for (const auto& t : f.args) fresh.reserve(t.name);
  if (f.lhs) reserve_names(fresh, *f.lhs);
  if (f.rhs) reserve_names(fresh, *f.rhs);
  if (f.left) reserve_names(fresh, *f.left);
  if (f.right) reserve_names(fresh, *f.right);
}

// ---- independence atoms ----

FormulaPtr norm_cindep(const FormulaPtr& f) {
  switch (f->op) {
    case Op::CIndep: {
      const VarList x = dedupe(f->xs);
      const VarList y = minus(dedupe(f->ys), x);
      const VarList z = minus(dedupe(f->zs), x);
      const VarList common = intersect(y, z);
      const VarList y_only = minus(y, z), z_only = minus(z, y);
      if (common.empty()) return fo::cindep(x, y, z);
      if (y_only.empty() && z_only.empty()) return fo::cindep(x, common, common);
      return fo::conj(fo::cindep(x, y_only, z_only), fo::cindep(x, common, common));
    }
    case Op::And: return fo::conj(norm_cindep(f->left), norm_cindep(f->right));
    case Op::Or: return fo::disj(norm_cindep(f->left), norm_cindep(f->right));
    case Op::Exists: return fo::exists(f->name, norm_cindep(f->left));
    case Op::Forall: return fo::forall(f->name, norm_cindep(f->left));
    default: return f;
  }
}

// ---- first-order renaming ----

Term rename_term(const Term& t, const std::string& from, const std::string& to) {
  return t.is_var() && t.name == from ? Term::var(to) : t;
}

VarList rename_list(const VarList& v, const std::string& from, const std::string& to) {
  VarList out = v;
  for (auto& x : out)
    if (x == from) x = to;
  return out;
}

FormulaPtr rename_free(const FormulaPtr& f, const std::string& from, const std::string& to) {
  Formula g = *f;
  switch (f->op) {
    case Op::Exists:
    case Op::Forall:
      if (f->name == from) return f;
      g.left = rename_free(f->left, from, to);
      break;
    case Op::And:
    case Op::Or:
      g.left = rename_free(f->left, from, to);
      g.right = rename_free(f->right, from, to);
      break;
    default:
      for (auto& t : g.args) t = rename_term(t, from, to);
      g.xs = rename_list(g.xs, from, to);
      g.ys = rename_list(g.ys, from, to);
      g.zs = rename_list(g.zs, from, to);
  }
  return std::make_shared<const Formula>(std::move(g));
}

// ---- FO -> ESOf ----

EsofPtr esof_literal(const Formula& f) {
  switch (f.op) {
    case Op::Eq: return esof::eq(f.args[0], f.args[1]);
    case Op::Neq: return esof::neq(f.args[0], f.args[1]);
    case Op::Rel: return esof::rel(f.name, f.args);
    default: return esof::nrel(f.name, f.args);
  }
}

NumTermPtr sum_or_fn(const VarList& bound, NumTermPtr body) { return bound.empty() ? body : esof::sum(bound, body); }

// SUM over xs minus keep of f(xs).
NumTermPtr marginal_of(const std::string& f, const VarList& xs, const VarList& keep) {
  return sum_or_fn(minus(xs, keep), esof::fn(f, xs));
}

std::optional<EsofPtr> conj_opt(const std::vector<EsofPtr>& parts) {
  if (parts.empty()) return std::nullopt;
  return esof::conj_all(parts);
}

class ToEsof {
 public:
  explicit ToEsof(Fresh& fresh) : fresh_(fresh) {}

  EsofPtr tr(const FormulaPtr& phi, const VarList& xs, const std::string& f) {
    using namespace esof;
    const NumTermPtr fx = fn(f, xs);
    switch (phi->op) {
      case Op::Eq:
      case Op::Neq:
      case Op::Rel:
      case Op::NegRel: return forall_all(xs, disj(num_eq(fx, zero()), esof_literal(*phi)));
      case Op::Approx: return approx(*phi, xs, f);
      case Op::CIndep: {
        const VarList& x0 = phi->xs;
        const VarList& x1 = phi->ys;
        const VarList& x2 = phi->zs;
        if (std::set<std::string>(x1.begin(), x1.end()) == std::set<std::string>(x2.begin(), x2.end())) {
          const NumTermPtr s01 = marginal_of(f, xs, concat(x0, x1));
          return forall_all(concat(x0, x1), disj(num_eq(s01, zero()), num_eq(s01, marginal_of(f, xs, x0))));
        }
        const NumTermPtr lhs = mul(marginal_of(f, xs, concat(x0, x1)), marginal_of(f, xs, concat(x0, x2)));
        const NumTermPtr rhs = mul(marginal_of(f, xs, concat(concat(x0, x1), x2)), marginal_of(f, xs, x0));
        return forall_all(concat(concat(x0, x1), x2), num_eq(lhs, rhs));
      }
      case Op::And: return conj(tr(phi->left, xs, f), tr(phi->right, xs, f));
      case Op::Or: return disjunction(phi, xs, f);
      case Op::Exists:
      case Op::Forall: {
        std::string y = phi->name;
        FormulaPtr body = phi->left;
        if (contains(xs, y)) {
          const std::string y2 = fresh_("#b");
          body = rename_free(body, y, y2);
          y = y2;
        }
        const std::string g = fresh_("#g");
        const VarList xy = concat(xs, {y});
        EsofPtr link = num_eq(sum({y}, fn(g, xy)), fx);
        if (phi->op == Op::Forall) {
          const std::string z = fresh_("#z");
          VarList xz = concat(xs, {z});
          link = conj(forall(y, forall(z, num_eq(fn(g, xy), fn(g, xz)))), link);
        }
        return exists_fn(g, static_cast<int>(xy.size()), conj(forall_all(xs, link), tr(body, xy, g)));
      }
    }
    throw std::logic_error("unhandled formula");
  }

 private:
  EsofPtr approx(const Formula& phi, const VarList& xs, const std::string& f) {
    using namespace esof;
    const VarList zs = fresh_.tuple("#z", phi.xs.size());
    // Marginal of f on a tuple at zs; repeated variables force equal z's.
    auto side = [&](const VarList& T, std::vector<EsofPtr>& cons) {
      std::map<std::string, std::string> sub;
      for (std::size_t t = 0; t < T.size(); ++t) {
        auto it = sub.find(T[t]);
        if (it == sub.end()) sub.emplace(T[t], zs[t]);
        else cons.push_back(eq(Term::var(it->second), Term::var(zs[t])));
      }
      VarList args, bound;
      for (const auto& x : xs) {
        auto it = sub.find(x);
        args.push_back(it == sub.end() ? x : it->second);
        if (it == sub.end()) bound.push_back(x);
      }
      return sum_or_fn(bound, fn(f, args));
    };
    std::vector<EsofPtr> c0, c1;
    const NumTermPtr s0 = side(phi.xs, c0), s1 = side(phi.ys, c1);
    const auto C0 = conj_opt(c0), C1 = conj_opt(c1);
    std::vector<EsofPtr> cases;
    auto with = [](std::vector<EsofPtr> parts, EsofPtr last) {
      parts.push_back(std::move(last));
      return conj_all(parts);
    };
    std::vector<EsofPtr> both;
    if (C0) both.push_back(*C0);
    if (C1) both.push_back(*C1);
    cases.push_back(with(both, num_eq(s0, s1)));
    if (C1) {
      std::vector<EsofPtr> p;
      if (C0) p.push_back(*C0);
      p.push_back(negate(*C1));
      cases.push_back(with(p, num_eq(s0, zero())));
    }
    if (C0) {
      std::vector<EsofPtr> p{negate(*C0)};
      if (C1) p.push_back(*C1);
      cases.push_back(with(p, num_eq(s1, zero())));
    }
    if (C0 && C1) cases.push_back(conj(negate(*C0), negate(*C1)));
    return forall_all(zs, disj_all(cases));
  }

  EsofPtr disjunction(const FormulaPtr& phi, const VarList& xs, const std::string& f) {
    using namespace esof;
    const std::string l = fresh_("#l"), r = fresh_("#r");
    const std::string p = fresh_("#p"), g = fresh_("#g"), h = fresh_("#g"), k = fresh_("#k");
    const std::string y = fresh_("#w");
    const int n = static_cast<int>(xs.size());
    const VarList xy = concat(xs, {y}), xl = concat(xs, {l}), xr = concat(xs, {r});
    EsofPtr dis1 = forall_all(
        xs, forall(y, disj_all({eq(Term::var(y), Term::var(l)), eq(Term::var(y), Term::var(r)),
                                conj(num_eq(fn(p, {y}), zero()), num_eq(fn(k, xy), zero()))})));
    EsofPtr dis2 = forall_all(xs, conj(num_eq(fn(k, xl), mul(fn(g, xs), fn(p, {l}))),
                                       num_eq(fn(k, xr), mul(fn(h, xs), fn(p, {r})))));
    EsofPtr dis3 = conj_all({forall_all(xs, num_eq(sum({y}, fn(k, xy)), fn(f, xs))), tr(phi->left, xs, g),
                             tr(phi->right, xs, h)});
    EsofPtr split =
        exists_fn(p, 1, exists_fn(g, n, exists_fn(h, n, exists_fn(k, n + 1, conj_all({dis1, dis2, dis3})))));
    EsofPtr third = exists(l, exists(r, conj(neq(Term::var(l), Term::var(r)), split)));
    return disj_all({tr(phi->left, xs, f), tr(phi->right, xs, f), third});
  }

  Fresh& fresh_;
};

// ---- normal form ----

bool is_fn(const NumTerm& t) { return t.op == NumOp::Fn; }

class NormalFormChecker {
 public:
  std::optional<std::string> check(const EsofFormula& phi) {
    const EsofFormula* f = &phi;
    while (f->op == EsofOp::ExistsFn) {
      quantified_.insert(f->name);
      f = f->left.get();
    }
    while (f->op == EsofOp::Forall) {
      vars_.insert(f->name);
      f = f->left.get();
    }
    return matrix(*f);
  }

 private:
  std::optional<std::string> matrix(const EsofFormula& f) {
    switch (f.op) {
      case EsofOp::Eq:
      case EsofOp::Neq:
      case EsofOp::Rel:
      case EsofOp::NegRel:
        for (const auto& t : f.args)
          if (t.is_var() && !vars_.count(t.name)) return "unbound variable in " + print(f);
        return std::nullopt;
      case EsofOp::And:
      case EsofOp::Or: {
        if (auto v = matrix(*f.left)) return v;
        return matrix(*f.right);
      }
      case EsofOp::NumEq:
      case EsofOp::NumNeq:
        if (identity_ok(f)) return std::nullopt;
        return "identity outside the normal-form shapes: " + print(f);
      default: return "quantifier inside the quantifier-free matrix: " + print(f);
    }
  }

  bool args_bound(const VarList& args, const std::set<std::string>& extra = {}) const {
    return std::all_of(args.begin(), args.end(), [&](const std::string& x) { return vars_.count(x) || extra.count(x); });
  }

  bool symbols_ok(const std::vector<const NumTerm*>& fs) const {
    std::set<std::string> names;
    int free = 0;
    for (const auto* t : fs) {
      names.insert(t->name);
      if (!quantified_.count(t->name)) ++free;
    }
    return names.size() == fs.size() && free <= 1;
  }

  bool identity_ok(const EsofFormula& f) const {
    const NumTerm& a = *f.lhs;
    const NumTerm& b = *f.rhs;
    // zero atoms, either orientation
    if (a.op == NumOp::Zero || b.op == NumOp::Zero) {
      const NumTerm& t = a.op == NumOp::Zero ? b : a;
      return is_fn(t) && args_bound(t.args);
    }
    if (!is_fn(a) || !args_bound(a.args)) return false;
    if (f.op == EsofOp::NumNeq) return is_fn(b) && args_bound(b.args) && symbols_ok({&a, &b});
    if (is_fn(b)) return args_bound(b.args) && symbols_ok({&a, &b});
    if (b.op == NumOp::Mul) {
      const NumTerm& j = *b.left;
      const NumTerm& k = *b.right;
      return is_fn(j) && is_fn(k) && args_bound(j.args) && args_bound(k.args) && symbols_ok({&a, &j, &k});
    }
    if (b.op == NumOp::Sum) {
      const NumTerm& j = *b.left;
      if (!is_fn(j)) return false;
      const std::set<std::string> bound(b.args.begin(), b.args.end());
      if (bound.size() != b.args.size()) return false;
      for (const auto& v : b.args)
        if (vars_.count(v) || contains(a.args, v) || !contains(j.args, v)) return false;
      return args_bound(j.args, bound) && symbols_ok({&a, &j});
    }
    return false;
  }

  std::set<std::string> quantified_;
  std::set<std::string> vars_;
};

// Gives every bound variable and function symbol a fresh name.
class AlphaRenamer {
 public:
  explicit AlphaRenamer(Fresh& fresh) : fresh_(fresh) {}

  EsofPtr formula(const EsofFormula& f) {
    EsofFormula g = f;
    switch (f.op) {
      case EsofOp::Eq:
      case EsofOp::Neq:
      case EsofOp::Rel:
      case EsofOp::NegRel:
        for (auto& t : g.args)
          if (t.is_var()) t.name = var(t.name);
        break;
      case EsofOp::NumEq:
      case EsofOp::NumNeq:
        g.lhs = term(*f.lhs);
        g.rhs = term(*f.rhs);
        break;
      case EsofOp::And:
      case EsofOp::Or:
        g.left = formula(*f.left);
        g.right = formula(*f.right);
        break;
      case EsofOp::Exists:
      case EsofOp::Forall: {
        g.name = fresh_("#v");
        vars_[f.name].push_back(g.name);
        g.left = formula(*f.left);
        vars_[f.name].pop_back();
        break;
      }
      case EsofOp::ExistsFn: {
        g.name = fresh_("#f");
        fns_[f.name].push_back(g.name);
        g.left = formula(*f.left);
        fns_[f.name].pop_back();
        break;
      }
    }
    return std::make_shared<const EsofFormula>(std::move(g));
  }

 private:
  NumTermPtr term(const NumTerm& t) {
    NumTerm u = t;
    switch (t.op) {
      case NumOp::Fn: {
        auto it = fns_.find(t.name);
        if (it != fns_.end() && !it->second.empty()) u.name = it->second.back();
        for (auto& x : u.args) x = var(x);
        break;
      }
      case NumOp::Mul:
        u.left = term(*t.left);
        u.right = term(*t.right);
        break;
      case NumOp::Sum: {
        VarList renamed;
        for (const auto& x : t.args) {
          renamed.push_back(fresh_("#v"));
          vars_[x].push_back(renamed.back());
        }
        u.left = term(*t.left);
        for (const auto& x : t.args) vars_[x].pop_back();
        u.args = renamed;
        break;
      }
      default: break;
    }
    return std::make_shared<const NumTerm>(std::move(u));
  }

  std::string var(const std::string& x) const {
    auto it = vars_.find(x);
    return it != vars_.end() && !it->second.empty() ? it->second.back() : x;
  }

  Fresh& fresh_;
  std::map<std::string, VarList> vars_;
  std::map<std::string, VarList> fns_;
};

struct NF {
  std::vector<std::pair<std::string, int>> fns;
  VarList vars;
  EsofPtr theta;
};

class Normalizer {
 public:
  explicit Normalizer(Fresh& fresh) : fresh_(fresh) {}

  NF nf(const EsofFormula& f) {
    using namespace esof;
    switch (f.op) {
      case EsofOp::Eq:
      case EsofOp::Neq:
      case EsofOp::Rel:
      case EsofOp::NegRel: return {{}, {}, std::make_shared<const EsofFormula>(f)};
      case EsofOp::NumEq:
      case EsofOp::NumNeq: return atom(f);
      case EsofOp::And:
      case EsofOp::Or: {
        NF a = nf(*f.left), b = nf(*f.right);
        a.fns.insert(a.fns.end(), b.fns.begin(), b.fns.end());
        a.vars = concat(a.vars, b.vars);
        a.theta = f.op == EsofOp::And ? conj(a.theta, b.theta) : disj(a.theta, b.theta);
        return a;
      }
      case EsofOp::Exists: {
        NF a = nf(*f.left);
        const std::string g = fresh_("#f");
        a.fns.insert(a.fns.begin(), {g, 1});
        a.vars.push_back(f.name);
        a.theta = disj(num_eq(fn(g, {f.name}), zero()), a.theta);
        return a;
      }
      case EsofOp::Forall: return lift(nf(*f.left), f.name);
      case EsofOp::ExistsFn: {
        NF a = nf(*f.left);
        a.fns.insert(a.fns.begin(), {f.name, f.arity});
        return a;
      }
    }
    throw std::logic_error("unhandled formula");
  }

 private:
  using Flat = std::pair<std::string, VarList>;

  Flat flatten(const NumTerm& t, NF& out, std::vector<EsofPtr>& ids) {
    using namespace esof;
    switch (t.op) {
      case NumOp::Fn: {
        const VarList u = dedupe(t.args);
        const std::string fi = new_fn(out, u.size());
        ids.push_back(num_eq(fn(fi, u), fn(t.name, t.args)));
        return {fi, u};
      }
      case NumOp::Mul: {
        Flat j = flatten(*t.left, out, ids);
        Flat k = flatten(*t.right, out, ids);
        const VarList u = concat(j.second, k.second);
        const std::string fi = new_fn(out, u.size());
        ids.push_back(num_eq(fn(fi, u), mul(fn(j.first, j.second), fn(k.first, k.second))));
        return {fi, u};
      }
      case NumOp::Sum: {
        Flat j = flatten(*t.left, out, ids);
        for (const auto& v : t.args)
          if (!contains(j.second, v))
            throw RefusedInput("improper term (summed variable does not occur): " + print(t));
        const VarList u = minus(j.second, t.args);
        const std::string fi = new_fn(out, u.size());
        // The inner identities mention the summed variables, so they become
        // universal; the sum itself binds fresh copies.
        out.vars = concat(out.vars, t.args);
        VarList body_args = j.second, bound;
        for (const auto& v : t.args) {
          bound.push_back(fresh_("#v"));
          std::replace(body_args.begin(), body_args.end(), v, bound.back());
        }
        ids.push_back(num_eq(fn(fi, u), sum(bound, fn(j.first, body_args))));
        return {fi, u};
      }
      case NumOp::Zero:
      case NumOp::One: throw RefusedInput("improper term (numeral inside a compound term): " + print(t));
      case NumOp::IllSorted: break;
    }
    throw RefusedInput("ill-sorted numerical term: " + print(t));
  }

  std::string new_fn(NF& out, std::size_t arity) {
    const std::string name = fresh_("#f");
    out.fns.emplace_back(name, static_cast<int>(arity));
    return name;
  }

  NF truth(bool value) {
    const std::string v = fresh_("#v");
    return {{}, {v}, value ? esof::eq(Term::var(v), Term::var(v)) : esof::neq(Term::var(v), Term::var(v))};
  }

  NF atom(const EsofFormula& f) {
    using namespace esof;
    const bool is_eq = f.op == EsofOp::NumEq;
    auto numeral = [](const NumTerm& t) { return t.op == NumOp::Zero || t.op == NumOp::One; };
    const NumTerm* a = f.lhs.get();
    const NumTerm* b = f.rhs.get();
    if (numeral(*a) && numeral(*b)) return truth((a->op == b->op) == is_eq);
    if (numeral(*a)) std::swap(a, b);

    NF out;
    std::vector<EsofPtr> ids;
    Flat i = flatten(*a, out, ids);
    NumTermPtr rhs;
    if (b->op == NumOp::Zero) {
      rhs = zero();
    } else if (b->op == NumOp::One) {
      const std::string c = new_fn(out, 0);
      rhs = fn(c, {});
    } else {
      Flat j = flatten(*b, out, ids);
      rhs = fn(j.first, j.second);
    }
    NumTermPtr lhs = fn(i.first, i.second);
    ids.insert(ids.begin(), is_eq ? num_eq(lhs, rhs) : num_neq(lhs, rhs));
    out.theta = conj_all(ids);
    return out;
  }

  // forall y over exists fs forall xs theta: one function per quantified
  // symbol with y as an extra first argument, each y-slice of mass 1/|A|.
  NF lift(NF in, const std::string& y) {
    using namespace esof;
    const std::string d = fresh_("#f");
    const std::string y2 = fresh_("#v");
    std::map<std::string, std::string> lifted;
    std::map<std::string, int> arity;
    NF out;
    for (const auto& [name, k] : in.fns) {
      lifted[name] = fresh_("#f");
      arity[name] = k;
      out.fns.emplace_back(lifted[name], k + 1);
    }
    // d is constant: e(y) = d(y) and d(y) = e(y') keep the symbols distinct.
    const std::string e = fresh_("#f");
    std::vector<EsofPtr> defs{num_eq(fn(e, {y}), fn(d, {y})), num_eq(fn(d, {y}), fn(e, {y2}))};
    for (const auto& [name, k] : in.fns) {
      const VarList w = fresh_.tuple("#v", static_cast<std::size_t>(k));
      defs.push_back(num_eq(fn(d, {y}), sum_or_fn(w, fn(lifted[name], concat({y}, w)))));
    }
    VarList extra_vars;
    // Symbols free in theta get a lifted copy d(y) * g(ws).
    std::vector<std::pair<std::string, int>> free_syms;
    collect_free(*in.theta, lifted, free_syms);
    for (const auto& [name, k] : free_syms) {
      lifted[name] = fresh_("#f");
      out.fns.emplace_back(lifted[name], k + 1);
      const VarList w = fresh_.tuple("#v", static_cast<std::size_t>(k));
      extra_vars = concat(extra_vars, w);
      defs.push_back(num_eq(fn(lifted[name], concat({y}, w)), mul(fn(d, {y}), fn(name, w))));
    }
    std::vector<std::pair<std::string, int>> products;
    EsofPtr theta = lift_matrix(in.theta, y, y2, d, lifted, products);
    out.fns.insert(out.fns.end(), products.begin(), products.end());
    out.fns.emplace_back(d, 1);
    out.fns.emplace_back(e, 1);
    defs.push_back(theta);
    out.vars = concat(concat({y, y2}, extra_vars), in.vars);
    out.theta = conj_all(defs);
    return out;
  }

  void collect_free(const EsofFormula& f, const std::map<std::string, std::string>& known,
                    std::vector<std::pair<std::string, int>>& out) {
    auto visit = [&](auto&& self, const NumTerm& t) -> void {
      if (t.op == NumOp::Fn && !known.count(t.name) &&
          std::none_of(out.begin(), out.end(), [&](const auto& e) { return e.first == t.name; }))
        out.emplace_back(t.name, static_cast<int>(t.args.size()));
      if (t.left) self(self, *t.left);
      if (t.right) self(self, *t.right);
    };
    if (f.lhs) visit(visit, *f.lhs);
    if (f.rhs) visit(visit, *f.rhs);
    if (f.left) collect_free(*f.left, known, out);
    if (f.right) collect_free(*f.right, known, out);
  }

  EsofPtr lift_matrix(const EsofPtr& f, const std::string& y, const std::string& y2, const std::string& d,
                      const std::map<std::string, std::string>& lifted,
                      std::vector<std::pair<std::string, int>>& products) {
    using namespace esof;
    auto up = [&](const NumTerm& t) { return fn(lifted.at(t.name), concat({y}, t.args)); };
    switch (f->op) {
      case EsofOp::And:
      case EsofOp::Or: {
        EsofPtr a = lift_matrix(f->left, y, y2, d, lifted, products);
        EsofPtr b = lift_matrix(f->right, y, y2, d, lifted, products);
        return f->op == EsofOp::And ? conj(a, b) : disj(a, b);
      }
      case EsofOp::NumEq:
      case EsofOp::NumNeq: {
        const NumTerm& a = *f->lhs;
        const NumTerm& b = *f->rhs;
        auto side = [&](const NumTerm& t) -> NumTermPtr {
          switch (t.op) {
            case NumOp::Zero: return zero();
            case NumOp::Fn: return up(t);
            case NumOp::Sum: return sum(t.args, up(*t.left));
            default: throw std::logic_error("unexpected identity shape");
          }
        };
        if (b.op != NumOp::Mul) {
          return f->op == EsofOp::NumEq ? num_eq(side(a), side(b)) : num_neq(side(a), side(b));
        }
        // f_i(a) = f_j(b) * f_k(c) becomes, with G(y a y') = f*_i(y a) * d(y'),
        // the guarded identity G(y a y') = f*_j(y b) * f*_k(y' c) on y = y'.
        const std::string G = fresh_("#f");
        const VarList gargs = concat(concat({y}, a.args), {y2});
        products.emplace_back(G, static_cast<int>(gargs.size()));
        EsofPtr def = num_eq(fn(G, gargs), mul(up(a), fn(d, {y2})));
        EsofPtr prod = num_eq(fn(G, gargs), mul(up(*b.left), fn(lifted.at(b.right->name), concat({y2}, b.right->args))));
        return conj(def, disj(neq(Term::var(y), Term::var(y2)), prod));
      }
      default: return f;
    }
  }

  Fresh& fresh_;
};

// ---- normal form ESOf -> FO ----

class FromEsof {
 public:
  FromEsof(Fresh& fresh, VarList xs, std::map<std::string, VarList> ys)
      : fresh_(fresh), xs_(std::move(xs)), ys_(std::move(ys)) {}

  FormulaPtr tr(const EsofFormula& f) {
    switch (f.op) {
      case EsofOp::Eq: return fo::eq(f.args[0], f.args[1]);
      case EsofOp::Neq: return fo::neq(f.args[0], f.args[1]);
      case EsofOp::Rel: return fo::rel(f.name, f.args);
      case EsofOp::NegRel: return fo::nrel(f.name, f.args);
      case EsofOp::And: return fo::conj(tr(*f.left), tr(*f.right));
      case EsofOp::Or: {
        const std::string z = fresh_("#z");
        FormulaPtr zero = fo::eq(Term::var(z), Term::constant("0"));
        FormulaPtr split = fo::disj(fo::conj(tr(*f.left), zero), fo::conj(tr(*f.right), fo::negate(zero)));
        return fo::exists(z, fo::conj(fo::cindep(xs_, {z}, {z}), split));
      }
      case EsofOp::NumEq: return identity(f);
      case EsofOp::NumNeq:
        throw RefusedInput("disequality identities have no translation: " + print(f));
      default: throw RefusedInput("quantifier inside the matrix: " + print(f));
    }
  }

 private:
  const VarList& y_of(const NumTerm& t) {
    auto it = ys_.find(t.name);
    if (it == ys_.end()) throw RefusedInput("function symbol without a team encoding: " + print(t));
    if (it->second.size() != t.args.size()) throw RefusedInput("wrong arity in " + print(t));
    return it->second;
  }

  // Conjunction of position-wise equalities; an empty one is always true.
  static FormulaPtr equalities(const std::vector<FormulaPtr>& eqs, const std::string& witness) {
    if (eqs.empty()) return fo::eq(Term::var(witness), Term::var(witness));
    return fo::conj_all(eqs);
  }

  static std::vector<FormulaPtr> match(const VarList& args, const VarList& ys, const std::set<std::string>& summed) {
    std::vector<FormulaPtr> out;
    std::map<std::string, std::size_t> first;
    for (std::size_t t = 0; t < args.size(); ++t) {
      if (!summed.count(args[t])) {
        out.push_back(fo::eq(Term::var(args[t]), Term::var(ys[t])));
        continue;
      }
      auto [it, fresh] = first.emplace(args[t], t);
      if (!fresh) out.push_back(fo::eq(Term::var(ys[it->second]), Term::var(ys[t])));
    }
    return out;
  }

  FormulaPtr identity(const EsofFormula& f) {
    const NumTerm& a = *f.lhs;
    const NumTerm& b = *f.rhs;
    if (a.op == NumOp::Zero || b.op == NumOp::Zero) {
      const NumTerm& t = a.op == NumOp::Zero ? b : a;
      const VarList& y = y_of(t);
      if (t.args.empty()) {
        const std::string q = fresh_("#q");
        return fo::exists(q, fo::neq(Term::var(q), Term::var(q)));
      }
      std::vector<FormulaPtr> parts;
      for (std::size_t i = 0; i < y.size(); ++i) parts.push_back(fo::neq(Term::var(t.args[i]), Term::var(y[i])));
      return fo::disj_all(parts);
    }
    std::vector<FormulaPtr> lhs = match(a.args, y_of(a), {});
    std::vector<FormulaPtr> rhs;
    if (b.op == NumOp::Fn) {
      rhs = match(b.args, y_of(b), {});
    } else if (b.op == NumOp::Sum) {
      rhs = match(b.left->args, y_of(*b.left), std::set<std::string>(b.args.begin(), b.args.end()));
    } else {
      rhs = match(concat(b.left->args, b.right->args), concat(y_of(*b.left), y_of(*b.right)), {});
    }
    const std::string alpha = fresh_("#a"), beta = fresh_("#a");
    auto is_zero = [](const std::string& v) { return fo::eq(Term::var(v), Term::constant("0")); };
    return fo::exists(alpha, fo::exists(beta, fo::conj_all({fo::iff(is_zero(alpha), equalities(lhs, alpha)),
                                                            fo::iff(is_zero(beta), equalities(rhs, beta)),
                                                            fo::approx(concat(xs_, {alpha}), concat(xs_, {beta}))})));
  }

  Fresh& fresh_;
  VarList xs_;
  std::map<std::string, VarList> ys_;
};

}  // namespace

FormulaPtr normalize_cindep(const FormulaPtr& phi) { return norm_cindep(phi); }

EsofPtr to_esof(const FormulaPtr& phi, const VarList& xs, const std::string& f) {
  if (dedupe(xs).size() != xs.size()) throw DomainError("free-variable tuple repeats a variable");
  for (const auto& v : free_vars(*phi))
    if (!contains(xs, v)) throw DomainError("free variable '" + v + "' outside the given tuple");
  Fresh fresh;
  reserve_names(fresh, *phi);
  for (const auto& x : xs) fresh.reserve(x);
  fresh.reserve(f);
  ToEsof t(fresh);
  return t.tr(normalize_cindep(phi), xs, f);
}

std::optional<std::string> check_normal_form(const EsofFormula& phi) { return NormalFormChecker{}.check(phi); }

EsofPtr normalize_esof(const EsofPtr& phi) {
  if (!free_vars(*phi).empty()) throw DomainError("normal form needs a sentence; free variables remain");
  if (!check_normal_form(*phi)) return phi;
  Fresh fresh;
  reserve_names(fresh, *phi);
  AlphaRenamer rn(fresh);
  EsofPtr renamed = rn.formula(*phi);
  Normalizer n(fresh);
  NF out = n.nf(*renamed);
  EsofPtr body = esof::forall_all(out.vars, out.theta);
  for (auto it = out.fns.rbegin(); it != out.fns.rend(); ++it) body = esof::exists_fn(it->first, it->second, body);
  return body;
}

FormulaPtr from_esof(const EsofPtr& phi, const std::string& p, const VarList& team_vars) {
  if (auto v = check_normal_form(*phi)) throw RefusedInput("not in normal form: " + *v);
  Fresh fresh;
  reserve_names(fresh, *phi);
  for (const auto& v : team_vars) fresh.reserve(v);
  fresh.reserve(p);

  std::vector<std::pair<std::string, int>> fns;
  const EsofFormula* f = phi.get();
  while (f->op == EsofOp::ExistsFn) {
    fns.emplace_back(f->name, f->arity);
    f = f->left.get();
  }
  VarList xs;
  while (f->op == EsofOp::Forall) {
    xs.push_back(f->name);
    f = f->left.get();
  }
  for (const auto& v : team_vars)
    if (contains(xs, v)) throw DomainError("team variable '" + v + "' clashes with a bound variable");

  std::map<std::string, VarList> ys{{p, team_vars}};
  std::vector<VarList> tuples;
  for (const auto& [name, k] : fns) {
    if (name == p) throw RefusedInput("the free symbol is also quantified");
    tuples.push_back(fresh.tuple("#y", static_cast<std::size_t>(k)));
    ys[name] = tuples.back();
  }
  for (const auto& g : free_functions(*phi))
    if (!ys.count(g)) throw RefusedInput("free function symbol other than the team's: " + g);

  FromEsof t(fresh, xs, ys);
  FormulaPtr theta = t.tr(*f);

  std::vector<FormulaPtr> psi;
  VarList chain, seen = concat(team_vars, xs);
  for (const auto& y : tuples) {
    if (y.empty()) continue;
    psi.push_back(fo::cindep({}, seen, y));
    seen = concat(seen, y);
    chain = concat(chain, y);
  }
  FormulaPtr body = psi.empty() ? theta : fo::conj(theta, fo::conj_all(psi));
  return fo::forall_all(xs, fo::exists_all(chain, body));
}

}  // namespace teamsem
