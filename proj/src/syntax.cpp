#include "teamsem/syntax.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <functional>
#include <sstream>

#include "sexpr.hpp"

namespace teamsem {

using detail::SExpr;

// ---------------------------------------------------------------------------
// FO constructors

namespace fo {

namespace {
FormulaPtr make(Formula f) { return std::make_shared<const Formula>(std::move(f)); }
}  // namespace

FormulaPtr eq(Term a, Term b) { return make({Op::Eq, {}, {std::move(a), std::move(b)}, {}, {}, {}, nullptr, nullptr, {}}); }
FormulaPtr neq(Term a, Term b) { return make({Op::Neq, {}, {std::move(a), std::move(b)}, {}, {}, {}, nullptr, nullptr, {}}); }
FormulaPtr rel(std::string r, std::vector<Term> args) {
  return make({Op::Rel, std::move(r), std::move(args), {}, {}, {}, nullptr, nullptr, {}});
}
FormulaPtr nrel(std::string r, std::vector<Term> args) {
  return make({Op::NegRel, std::move(r), std::move(args), {}, {}, {}, nullptr, nullptr, {}});
}
FormulaPtr approx(VarList xs, VarList ys) {
  return make({Op::Approx, {}, {}, std::move(xs), std::move(ys), {}, nullptr, nullptr, {}});
}
FormulaPtr cindep(VarList given, VarList ys, VarList zs) {
  return make({Op::CIndep, {}, {}, std::move(given), std::move(ys), std::move(zs), nullptr, nullptr, {}});
}
FormulaPtr conj(FormulaPtr a, FormulaPtr b) { return make({Op::And, {}, {}, {}, {}, {}, std::move(a), std::move(b), {}}); }
FormulaPtr disj(FormulaPtr a, FormulaPtr b) { return make({Op::Or, {}, {}, {}, {}, {}, std::move(a), std::move(b), {}}); }
FormulaPtr exists(std::string x, FormulaPtr body) {
  return make({Op::Exists, std::move(x), {}, {}, {}, {}, std::move(body), nullptr, {}});
}
FormulaPtr forall(std::string x, FormulaPtr body) {
  return make({Op::Forall, std::move(x), {}, {}, {}, {}, std::move(body), nullptr, {}});
}

FormulaPtr conj_all(const std::vector<FormulaPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty conjunction");
  FormulaPtr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = conj(acc, parts[i]);
  return acc;
}

FormulaPtr disj_all(const std::vector<FormulaPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty disjunction");
  FormulaPtr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = disj(acc, parts[i]);
  return acc;
}

FormulaPtr exists_all(const VarList& xs, FormulaPtr body) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = exists(*it, body);
  return body;
}

FormulaPtr forall_all(const VarList& xs, FormulaPtr body) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = forall(*it, body);
  return body;
}

FormulaPtr negate(const FormulaPtr& f) {
  switch (f->op) {
    case Op::Eq: return neq(f->args[0], f->args[1]);
    case Op::Neq: return eq(f->args[0], f->args[1]);
    case Op::Rel: return nrel(f->name, f->args);
    case Op::NegRel: return rel(f->name, f->args);
    case Op::And: return disj(negate(f->left), negate(f->right));
    case Op::Or: return conj(negate(f->left), negate(f->right));
    case Op::Exists: return forall(f->name, negate(f->left));
    case Op::Forall: return exists(f->name, negate(f->left));
    case Op::Approx:
    case Op::CIndep: break;
  }
  throw SyntaxError("negation of a dependency atom is not expressible in negation normal form", f->span);
}

FormulaPtr iff(FormulaPtr a, FormulaPtr b) {
  return disj(conj(a, b), conj(negate(a), negate(b)));
}

}  // namespace fo

bool equal(const Formula& a, const Formula& b) {
  if (a.op != b.op || a.name != b.name || a.args != b.args || a.xs != b.xs || a.ys != b.ys || a.zs != b.zs)
    return false;
  if (static_cast<bool>(a.left) != static_cast<bool>(b.left)) return false;
  if (static_cast<bool>(a.right) != static_cast<bool>(b.right)) return false;
  if (a.left && !equal(*a.left, *b.left)) return false;
  if (a.right && !equal(*a.right, *b.right)) return false;
  return true;
}

bool is_flat(const Formula& f) {
  if (f.is_dependency_atom()) return false;
  if (f.left && !is_flat(*f.left)) return false;
  if (f.right && !is_flat(*f.right)) return false;
  return true;
}

std::set<std::string> free_vars(const Formula& f) {
  std::set<std::string> out;
  switch (f.op) {
    case Op::Eq:
    case Op::Neq:
    case Op::Rel:
    case Op::NegRel:
      for (const auto& t : f.args)
        if (t.is_var()) out.insert(t.name);
      break;
    case Op::Approx:
    case Op::CIndep:
      out.insert(f.xs.begin(), f.xs.end());
      out.insert(f.ys.begin(), f.ys.end());
      out.insert(f.zs.begin(), f.zs.end());
      break;
    case Op::And:
    case Op::Or: {
      out = free_vars(*f.left);
      auto r = free_vars(*f.right);
      out.insert(r.begin(), r.end());
      break;
    }
    case Op::Exists:
    case Op::Forall:
      out = free_vars(*f.left);
      out.erase(f.name);
      break;
  }
  return out;
}

int quantifier_depth(const Formula& f) {
  switch (f.op) {
    case Op::And:
    case Op::Or: return std::max(quantifier_depth(*f.left), quantifier_depth(*f.right));
    case Op::Exists:
    case Op::Forall: return 1 + quantifier_depth(*f.left);
    default: return 0;
  }
}

// ---------------------------------------------------------------------------
// ESOf constructors

namespace esof {

namespace {
NumTermPtr make_t(NumTerm t) { return std::make_shared<const NumTerm>(std::move(t)); }
EsofPtr make(EsofFormula f) { return std::make_shared<const EsofFormula>(std::move(f)); }
EsofFormula blank(EsofOp op) { return EsofFormula{op, {}, {}, nullptr, nullptr, 0, nullptr, nullptr, {}}; }
}  // namespace

NumTermPtr fn(std::string f, VarList args) { return make_t({NumOp::Fn, std::move(f), std::move(args), nullptr, nullptr, {}}); }
NumTermPtr mul(NumTermPtr a, NumTermPtr b) { return make_t({NumOp::Mul, {}, {}, std::move(a), std::move(b), {}}); }
NumTermPtr sum(VarList bound, NumTermPtr body) {
  return make_t({NumOp::Sum, {}, std::move(bound), std::move(body), nullptr, {}});
}
NumTermPtr zero() { return make_t({NumOp::Zero, {}, {}, nullptr, nullptr, {}}); }
NumTermPtr one() { return make_t({NumOp::One, {}, {}, nullptr, nullptr, {}}); }

EsofPtr eq(Term a, Term b) {
  auto f = blank(EsofOp::Eq);
  f.args = {std::move(a), std::move(b)};
  return make(std::move(f));
}
EsofPtr neq(Term a, Term b) {
  auto f = blank(EsofOp::Neq);
  f.args = {std::move(a), std::move(b)};
  return make(std::move(f));
}
EsofPtr rel(std::string r, std::vector<Term> args) {
  auto f = blank(EsofOp::Rel);
  f.name = std::move(r);
  f.args = std::move(args);
  return make(std::move(f));
}
EsofPtr nrel(std::string r, std::vector<Term> args) {
  auto f = blank(EsofOp::NegRel);
  f.name = std::move(r);
  f.args = std::move(args);
  return make(std::move(f));
}
EsofPtr num_eq(NumTermPtr a, NumTermPtr b) {
  auto f = blank(EsofOp::NumEq);
  f.lhs = std::move(a);
  f.rhs = std::move(b);
  return make(std::move(f));
}
EsofPtr num_neq(NumTermPtr a, NumTermPtr b) {
  auto f = blank(EsofOp::NumNeq);
  f.lhs = std::move(a);
  f.rhs = std::move(b);
  return make(std::move(f));
}
EsofPtr conj(EsofPtr a, EsofPtr b) {
  auto f = blank(EsofOp::And);
  f.left = std::move(a);
  f.right = std::move(b);
  return make(std::move(f));
}
EsofPtr disj(EsofPtr a, EsofPtr b) {
  auto f = blank(EsofOp::Or);
  f.left = std::move(a);
  f.right = std::move(b);
  return make(std::move(f));
}
EsofPtr exists(std::string x, EsofPtr body) {
  auto f = blank(EsofOp::Exists);
  f.name = std::move(x);
  f.left = std::move(body);
  return make(std::move(f));
}
EsofPtr forall(std::string x, EsofPtr body) {
  auto f = blank(EsofOp::Forall);
  f.name = std::move(x);
  f.left = std::move(body);
  return make(std::move(f));
}
EsofPtr exists_fn(std::string name, int arity, EsofPtr body) {
  auto f = blank(EsofOp::ExistsFn);
  f.name = std::move(name);
  f.arity = arity;
  f.left = std::move(body);
  return make(std::move(f));
}

EsofPtr conj_all(const std::vector<EsofPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty conjunction");
  EsofPtr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = conj(acc, parts[i]);
  return acc;
}

EsofPtr disj_all(const std::vector<EsofPtr>& parts) {
  if (parts.empty()) throw std::invalid_argument("empty disjunction");
  EsofPtr acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = disj(acc, parts[i]);
  return acc;
}

EsofPtr exists_all(const VarList& xs, EsofPtr body) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = exists(*it, body);
  return body;
}

EsofPtr forall_all(const VarList& xs, EsofPtr body) {
  for (auto it = xs.rbegin(); it != xs.rend(); ++it) body = forall(*it, body);
  return body;
}

EsofPtr negate(const EsofPtr& f) {
  switch (f->op) {
    case EsofOp::Eq: return neq(f->args[0], f->args[1]);
    case EsofOp::Neq: return eq(f->args[0], f->args[1]);
    case EsofOp::Rel: return nrel(f->name, f->args);
    case EsofOp::NegRel: return rel(f->name, f->args);
    case EsofOp::NumEq: return num_neq(f->lhs, f->rhs);
    case EsofOp::NumNeq: return num_eq(f->lhs, f->rhs);
    case EsofOp::And: return disj(negate(f->left), negate(f->right));
    case EsofOp::Or: return conj(negate(f->left), negate(f->right));
    case EsofOp::Exists: return forall(f->name, negate(f->left));
    case EsofOp::Forall: return exists(f->name, negate(f->left));
    case EsofOp::ExistsFn: break;
  }
  throw SyntaxError("negation of a function quantifier is outside the grammar", f->span);
}

EsofPtr iff(EsofPtr a, EsofPtr b) { return disj(conj(a, b), conj(negate(a), negate(b))); }

EsofPtr uniformity(const std::string& f, int arity) {
  VarList xs, ys;
  for (int i = 0; i < arity; ++i) {
    xs.push_back("#ux" + std::to_string(i));
    ys.push_back("#uy" + std::to_string(i));
  }
  auto fx = fn(f, xs);
  auto fy = fn(f, ys);
  auto body = disj_all({num_eq(fx, zero()), num_eq(fy, zero()), num_eq(fx, fy)});
  VarList all = xs;
  all.insert(all.end(), ys.begin(), ys.end());
  return forall_all(all, body);
}

EsofPtr zero_definability() {
  return exists_fn("#g", 1,
                   exists("#x", exists("#y", conj(neq(Term::var("#x"), Term::var("#y")),
                                                  num_eq(fn("#g", {"#x"}), one())))));
}

EsofPtr constant_ratio(NumTermPtr i, unsigned p, unsigned q) {
  if (q == 0 || p > q) throw std::invalid_argument("constant_ratio needs 0 <= p <= q, q >= 1");
  const int ybits = std::bit_width(p);
  const int zbits = std::bit_width(q - p);
  const std::string y0 = "#y0", y1 = "#y1", f = "#f";
  auto pattern = [&](unsigned k, int width) {
    VarList out;
    for (int b = width - 1; b >= 0; --b) out.push_back(((k >> b) & 1U) ? y1 : y0);
    return out;
  };
  std::vector<VarList> E;
  for (unsigned k = 1; k <= p; ++k) {
    VarList e = pattern(k, ybits);
    VarList z = pattern(0, zbits);
    e.insert(e.end(), z.begin(), z.end());
    E.push_back(e);
  }
  for (unsigned l = 1; l <= q - p; ++l) {
    VarList e = pattern(0, ybits);
    VarList z = pattern(l, zbits);
    e.insert(e.end(), z.begin(), z.end());
    E.push_back(e);
  }
  std::vector<EsofPtr> parts{neq(Term::var(y0), Term::var(y1))};
  for (std::size_t j = 1; j < E.size(); ++j) parts.push_back(num_eq(fn(f, E[0]), fn(f, E[j])));

  VarList us;
  for (int t = 0; t < ybits + zbits; ++t) us.push_back("#u" + std::to_string(t));
  std::vector<EsofPtr> in_e, not_e;
  for (const auto& e : E) {
    std::vector<EsofPtr> eqs, neqs;
    for (std::size_t t = 0; t < e.size(); ++t) {
      eqs.push_back(eq(Term::var(us[t]), Term::var(e[t])));
      neqs.push_back(neq(Term::var(us[t]), Term::var(e[t])));
    }
    in_e.push_back(conj_all(eqs));
    not_e.push_back(disj_all(neqs));
  }
  auto fu = fn(f, us);
  auto membership = disj(conj(conj_all(not_e), num_eq(fu, zero())), conj(disj_all(in_e), num_neq(fu, zero())));
  parts.push_back(forall_all(us, membership));

  VarList sum_vars;
  for (int t = 0; t < ybits; ++t) sum_vars.push_back("#s" + std::to_string(t));
  VarList args = sum_vars;
  VarList z0 = pattern(0, zbits);
  args.insert(args.end(), z0.begin(), z0.end());
  parts.push_back(num_eq(std::move(i), sum(sum_vars, fn(f, args))));
  return exists(y0, exists(y1, exists_fn(f, ybits + zbits, conj_all(parts))));
}

}  // namespace esof

bool equal(const NumTerm& a, const NumTerm& b) {
  if (a.op != b.op || a.name != b.name || a.args != b.args) return false;
  if (static_cast<bool>(a.left) != static_cast<bool>(b.left)) return false;
  if (static_cast<bool>(a.right) != static_cast<bool>(b.right)) return false;
  if (a.left && !equal(*a.left, *b.left)) return false;
  if (a.right && !equal(*a.right, *b.right)) return false;
  return true;
}

bool equal(const EsofFormula& a, const EsofFormula& b) {
  if (a.op != b.op || a.name != b.name || a.args != b.args || a.arity != b.arity) return false;
  auto same_t = [](const NumTermPtr& x, const NumTermPtr& y) {
    if (static_cast<bool>(x) != static_cast<bool>(y)) return false;
    return !x || equal(*x, *y);
  };
  if (!same_t(a.lhs, b.lhs) || !same_t(a.rhs, b.rhs)) return false;
  if (static_cast<bool>(a.left) != static_cast<bool>(b.left)) return false;
  if (static_cast<bool>(a.right) != static_cast<bool>(b.right)) return false;
  if (a.left && !equal(*a.left, *b.left)) return false;
  if (a.right && !equal(*a.right, *b.right)) return false;
  return true;
}

std::set<std::string> free_vars(const NumTerm& t) {
  std::set<std::string> out;
  switch (t.op) {
    case NumOp::Fn: out.insert(t.args.begin(), t.args.end()); break;
    case NumOp::Mul: {
      out = free_vars(*t.left);
      auto r = free_vars(*t.right);
      out.insert(r.begin(), r.end());
      break;
    }
    case NumOp::Sum:
      out = free_vars(*t.left);
      for (const auto& v : t.args) out.erase(v);
      break;
    case NumOp::IllSorted: out.insert(t.name); break;
    case NumOp::Zero:
    case NumOp::One: break;
  }
  return out;
}

std::set<std::string> free_vars(const EsofFormula& f) {
  std::set<std::string> out;
  switch (f.op) {
    case EsofOp::Eq:
    case EsofOp::Neq:
    case EsofOp::Rel:
    case EsofOp::NegRel:
      for (const auto& t : f.args)
        if (t.is_var()) out.insert(t.name);
      break;
    case EsofOp::NumEq:
    case EsofOp::NumNeq: {
      out = free_vars(*f.lhs);
      auto r = free_vars(*f.rhs);
      out.insert(r.begin(), r.end());
      break;
    }
    case EsofOp::And:
    case EsofOp::Or: {
      out = free_vars(*f.left);
      auto r = free_vars(*f.right);
      out.insert(r.begin(), r.end());
      break;
    }
    case EsofOp::Exists:
    case EsofOp::Forall:
      out = free_vars(*f.left);
      out.erase(f.name);
      break;
    case EsofOp::ExistsFn: out = free_vars(*f.left); break;
  }
  return out;
}

namespace {

void term_functions(const NumTerm& t, std::set<std::string>& out) {
  if (t.op == NumOp::Fn) out.insert(t.name);
  if (t.left) term_functions(*t.left, out);
  if (t.right) term_functions(*t.right, out);
}

}  // namespace

std::set<std::string> free_functions(const EsofFormula& f) {
  std::set<std::string> out;
  if (f.lhs) term_functions(*f.lhs, out);
  if (f.rhs) term_functions(*f.rhs, out);
  if (f.left) {
    auto l = free_functions(*f.left);
    out.insert(l.begin(), l.end());
  }
  if (f.right) {
    auto r = free_functions(*f.right);
    out.insert(r.begin(), r.end());
  }
  if (f.op == EsofOp::ExistsFn) out.erase(f.name);
  return out;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

bool is_identifier(const std::string& s) {
  if (s.empty()) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0])) || s[0] == '\'') return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '#' || c == '-' || c == '.' || c == '$'))
      return false;
  return true;
}

bool is_numeral(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

Term parse_term(const SExpr& e) {
  if (!e.is_atom) throw SyntaxError("expected a variable or constant", e.span);
  if (is_numeral(e.text)) return Term::constant(e.text);
  if (e.text.size() > 1 && e.text[0] == '\'') return Term::constant(e.text.substr(1));
  if (is_identifier(e.text)) return Term::var(e.text);
  throw SyntaxError("malformed term '" + e.text + "'", e.span);
}

std::string parse_var(const SExpr& e) {
  if (!e.is_atom || !is_identifier(e.text)) throw SyntaxError("expected a variable", e.span);
  return e.text;
}

VarList parse_var_tuple(const SExpr& e) {
  if (e.is_atom) throw SyntaxError("expected a parenthesized variable tuple", e.span);
  VarList out;
  for (const auto& it : e.items) out.push_back(parse_var(it));
  return out;
}

void expect_arity(const SExpr& e, std::size_t n, const char* what) {
  if (e.items.size() != n)
    throw SyntaxError(std::string(what) + " expects " + std::to_string(n - 1) + " argument(s)", e.span);
}

const std::string& head(const SExpr& e) {
  if (e.is_atom) throw SyntaxError("expected a parenthesized form, got '" + e.text + "'", e.span);
  if (e.items.empty() || !e.items[0].is_atom) throw SyntaxError("form without an operator", e.span);
  return e.items[0].text;
}

FormulaPtr with_span(FormulaPtr f, SourceSpan s) {
  auto copy = std::make_shared<Formula>(*f);
  copy->span = s;
  return copy;
}

FormulaPtr build_formula(const SExpr& e) {
  const std::string& h = head(e);
  auto terms = [&](std::size_t from) {
    std::vector<Term> out;
    for (std::size_t i = from; i < e.items.size(); ++i) out.push_back(parse_term(e.items[i]));
    return out;
  };
  auto binary_chain = [&](bool is_and) {
    if (e.items.size() < 3) throw SyntaxError("'" + h + "' expects at least 2 arguments", e.span);
    std::vector<FormulaPtr> parts;
    for (std::size_t i = 1; i < e.items.size(); ++i) parts.push_back(build_formula(e.items[i]));
    return is_and ? fo::conj_all(parts) : fo::disj_all(parts);
  };
  auto quantifier = [&](bool is_exists) {
    expect_arity(e, 3, h.c_str());
    VarList vars = e.items[1].is_atom ? VarList{parse_var(e.items[1])} : parse_var_tuple(e.items[1]);
    auto body = build_formula(e.items[2]);
    return is_exists ? fo::exists_all(vars, body) : fo::forall_all(vars, body);
  };

  FormulaPtr out;
  if (h == "=" || h == "!=") {
    expect_arity(e, 3, h.c_str());
    auto t = terms(1);
    out = h == "=" ? fo::eq(t[0], t[1]) : fo::neq(t[0], t[1]);
  } else if (h == "rel" || h == "nrel") {
    if (e.items.size() < 2) throw SyntaxError("'" + h + "' expects a relation symbol", e.span);
    std::string r = parse_var(e.items[1]);
    out = h == "rel" ? fo::rel(r, terms(2)) : fo::nrel(r, terms(2));
  } else if (h == "approx") {
    expect_arity(e, 3, "approx");
    out = fo::approx(parse_var_tuple(e.items[1]), parse_var_tuple(e.items[2]));
  } else if (h == "cindep") {
    expect_arity(e, 4, "cindep");
    out = fo::cindep(parse_var_tuple(e.items[1]), parse_var_tuple(e.items[2]), parse_var_tuple(e.items[3]));
  } else if (h == "and") {
    out = binary_chain(true);
  } else if (h == "or") {
    out = binary_chain(false);
  } else if (h == "exists") {
    out = quantifier(true);
  } else if (h == "forall") {
    out = quantifier(false);
  } else if (h == "not") {
    expect_arity(e, 2, "not");
    auto inner = build_formula(e.items[1]);
    if (!is_flat(*inner)) throw SyntaxError("negation applied to a dependency atom (not in negation normal form)", e.span);
    out = fo::negate(inner);
  } else if (h == "imp") {
    expect_arity(e, 3, "imp");
    auto a = build_formula(e.items[1]);
    if (!is_flat(*a)) throw SyntaxError("implication antecedent must be dependency-free", e.span);
    out = fo::disj(fo::negate(a), build_formula(e.items[2]));
  } else if (h == "iff") {
    expect_arity(e, 3, "iff");
    auto a = build_formula(e.items[1]);
    auto b = build_formula(e.items[2]);
    if (!is_flat(*a) || !is_flat(*b)) throw SyntaxError("biconditional operands must be dependency-free", e.span);
    out = fo::iff(a, b);
  } else {
    throw SyntaxError("unknown operator '" + h + "'", e.items[0].span);
  }
  return with_span(out, e.span);
}

NumTermPtr build_term(const SExpr& e) {
  if (e.is_atom) {
    if (e.text == "0") return esof::zero();
    if (e.text == "1") return esof::one();
    if (is_identifier(e.text)) {
      return std::make_shared<const NumTerm>(NumTerm{NumOp::IllSorted, e.text, {}, nullptr, nullptr, e.span});
    }
    throw SyntaxError("malformed numerical term '" + e.text + "'", e.span);
  }
  const std::string& h = head(e);
  NumTerm out;
  if (h == "fn") {
    if (e.items.size() < 2) throw SyntaxError("'fn' expects a function symbol", e.span);
    VarList args;
    for (std::size_t i = 2; i < e.items.size(); ++i) args.push_back(parse_var(e.items[i]));
    out = *esof::fn(parse_var(e.items[1]), args);
  } else if (h == "mul") {
    expect_arity(e, 3, "mul");
    out = *esof::mul(build_term(e.items[1]), build_term(e.items[2]));
  } else if (h == "sum") {
    expect_arity(e, 3, "sum");
    out = *esof::sum(parse_var_tuple(e.items[1]), build_term(e.items[2]));
  } else if (is_identifier(h)) {
    // (f x ...) is shorthand for (fn f x ...)
    VarList args;
    for (std::size_t i = 1; i < e.items.size(); ++i) args.push_back(parse_var(e.items[i]));
    out = *esof::fn(h, args);
  } else {
    throw SyntaxError("unknown numerical operator '" + h + "'", e.items[0].span);
  }
  out.span = e.span;
  return std::make_shared<const NumTerm>(std::move(out));
}

EsofPtr with_span(EsofPtr f, SourceSpan s) {
  auto copy = std::make_shared<EsofFormula>(*f);
  copy->span = s;
  return copy;
}

EsofPtr build_esof(const SExpr& e) {
  const std::string& h = head(e);
  auto terms = [&](std::size_t from) {
    std::vector<Term> out;
    for (std::size_t i = from; i < e.items.size(); ++i) out.push_back(parse_term(e.items[i]));
    return out;
  };
  EsofPtr out;
  if (h == "=" || h == "!=") {
    expect_arity(e, 3, h.c_str());
    auto t = terms(1);
    out = h == "=" ? esof::eq(t[0], t[1]) : esof::neq(t[0], t[1]);
  } else if (h == "rel" || h == "nrel") {
    if (e.items.size() < 2) throw SyntaxError("'" + h + "' expects a relation symbol", e.span);
    std::string r = parse_var(e.items[1]);
    out = h == "rel" ? esof::rel(r, terms(2)) : esof::nrel(r, terms(2));
  } else if (h == "n=" || h == "n!=") {
    expect_arity(e, 3, h.c_str());
    auto a = build_term(e.items[1]);
    auto b = build_term(e.items[2]);
    out = h == "n=" ? esof::num_eq(a, b) : esof::num_neq(a, b);
  } else if (h == "and" || h == "or") {
    if (e.items.size() < 3) throw SyntaxError("'" + h + "' expects at least 2 arguments", e.span);
    std::vector<EsofPtr> parts;
    for (std::size_t i = 1; i < e.items.size(); ++i) parts.push_back(build_esof(e.items[i]));
    out = h == "and" ? esof::conj_all(parts) : esof::disj_all(parts);
  } else if (h == "exists" || h == "forall") {
    expect_arity(e, 3, h.c_str());
    VarList vars = e.items[1].is_atom ? VarList{parse_var(e.items[1])} : parse_var_tuple(e.items[1]);
    auto body = build_esof(e.items[2]);
    out = h == "exists" ? esof::exists_all(vars, body) : esof::forall_all(vars, body);
  } else if (h == "exists-fn") {
    expect_arity(e, 4, "exists-fn");
    const auto& k = e.items[2];
    if (!k.is_atom || !is_numeral(k.text)) throw SyntaxError("function arity must be a natural number", k.span);
    out = esof::exists_fn(parse_var(e.items[1]), std::stoi(k.text), build_esof(e.items[3]));
  } else if (h == "not") {
    expect_arity(e, 2, "not");
    out = esof::negate(build_esof(e.items[1]));
  } else if (h == "imp") {
    expect_arity(e, 3, "imp");
    out = esof::disj(esof::negate(build_esof(e.items[1])), build_esof(e.items[2]));
  } else if (h == "iff") {
    expect_arity(e, 3, "iff");
    out = esof::iff(build_esof(e.items[1]), build_esof(e.items[2]));
  } else {
    throw SyntaxError("unknown operator '" + h + "'", e.items[0].span);
  }
  return with_span(out, e.span);
}

std::string print_tuple(const VarList& xs) {
  std::string s = "(";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ' ';
    s += xs[i];
  }
  return s + ")";
}

}  // namespace

FormulaPtr parse_formula(std::string_view text) { return build_formula(detail::read_sexpr(text)); }
EsofPtr parse_esof(std::string_view text) { return build_esof(detail::read_sexpr(text)); }
NumTermPtr parse_num_term(std::string_view text) { return build_term(detail::read_sexpr(text)); }

// ---------------------------------------------------------------------------
// Printer

std::string print(const Term& t) {
  if (t.is_var()) return t.name;
  return is_numeral(t.name) ? t.name : "'" + t.name;
}

std::string print(const Formula& f) {
  auto terms = [&] {
    std::string s;
    for (const auto& t : f.args) s += " " + print(t);
    return s;
  };
  switch (f.op) {
    case Op::Eq: return "(=" + terms() + ")";
    case Op::Neq: return "(!=" + terms() + ")";
    case Op::Rel: return "(rel " + f.name + terms() + ")";
    case Op::NegRel: return "(nrel " + f.name + terms() + ")";
    case Op::Approx: return "(approx " + print_tuple(f.xs) + " " + print_tuple(f.ys) + ")";
    case Op::CIndep:
      return "(cindep " + print_tuple(f.xs) + " " + print_tuple(f.ys) + " " + print_tuple(f.zs) + ")";
    case Op::And: return "(and " + print(*f.left) + " " + print(*f.right) + ")";
    case Op::Or: return "(or " + print(*f.left) + " " + print(*f.right) + ")";
    case Op::Exists: return "(exists " + f.name + " " + print(*f.left) + ")";
    case Op::Forall: return "(forall " + f.name + " " + print(*f.left) + ")";
  }
  return {};
}

std::string print(const NumTerm& t) {
  switch (t.op) {
    case NumOp::Fn: {
      std::string s = "(fn " + t.name;
      for (const auto& a : t.args) s += " " + a;
      return s + ")";
    }
    case NumOp::Mul: return "(mul " + print(*t.left) + " " + print(*t.right) + ")";
    case NumOp::Sum: return "(sum " + print_tuple(t.args) + " " + print(*t.left) + ")";
    case NumOp::Zero: return "0";
    case NumOp::One: return "1";
    case NumOp::IllSorted: return t.name;
  }
  return {};
}

std::string print(const EsofFormula& f) {
  auto terms = [&] {
    std::string s;
    for (const auto& t : f.args) s += " " + print(t);
    return s;
  };
  switch (f.op) {
    case EsofOp::Eq: return "(=" + terms() + ")";
    case EsofOp::Neq: return "(!=" + terms() + ")";
    case EsofOp::Rel: return "(rel " + f.name + terms() + ")";
    case EsofOp::NegRel: return "(nrel " + f.name + terms() + ")";
    case EsofOp::NumEq: return "(n= " + print(*f.lhs) + " " + print(*f.rhs) + ")";
    case EsofOp::NumNeq: return "(n!= " + print(*f.lhs) + " " + print(*f.rhs) + ")";
    case EsofOp::And: return "(and " + print(*f.left) + " " + print(*f.right) + ")";
    case EsofOp::Or: return "(or " + print(*f.left) + " " + print(*f.right) + ")";
    case EsofOp::Exists: return "(exists " + f.name + " " + print(*f.left) + ")";
    case EsofOp::Forall: return "(forall " + f.name + " " + print(*f.left) + ")";
    case EsofOp::ExistsFn:
      return "(exists-fn " + f.name + " " + std::to_string(f.arity) + " " + print(*f.left) + ")";
  }
  return {};
}

// ---------------------------------------------------------------------------
// Validation

namespace {

struct Validator {
  const Signature& sig;
  std::vector<Diagnostic> out;

  void report(Diagnostic::Kind k, std::string msg, SourceSpan s) { out.push_back({k, std::move(msg), s}); }

  void check_relation(const std::string& r, std::size_t n, SourceSpan s) {
    auto it = sig.relations.find(r);
    if (it == sig.relations.end()) {
      report(Diagnostic::Kind::Unknown, "undeclared relation symbol '" + r + "'", s);
    } else if (static_cast<std::size_t>(it->second) != n) {
      report(Diagnostic::Kind::Arity, "relation '" + r + "' has arity " + std::to_string(it->second) + " but is applied to " +
                                          std::to_string(n) + " argument(s)", s);
    }
  }

  void check_free(const std::set<std::string>& fv, SourceSpan s) {
    for (const auto& v : fv)
      if (!sig.free_vars.count(v)) report(Diagnostic::Kind::Scope, "variable '" + v + "' is free but not declared", s);
  }

  void visit(const Formula& f) {
    switch (f.op) {
      case Op::Rel:
      case Op::NegRel: check_relation(f.name, f.args.size(), f.span); break;
      case Op::Approx:
        if (f.xs.size() != f.ys.size())
          report(Diagnostic::Kind::Arity, "marginal identity tuples differ in length (" + std::to_string(f.xs.size()) + " vs " +
                                              std::to_string(f.ys.size()) + ")", f.span);
        break;
      default: break;
    }
    if (f.left) visit(*f.left);
    if (f.right) visit(*f.right);
  }

  void visit_term(const NumTerm& t, const std::map<std::string, int>& bound_fns) {
    switch (t.op) {
      case NumOp::Fn: {
        int arity = -1;
        if (auto it = bound_fns.find(t.name); it != bound_fns.end()) arity = it->second;
        else if (auto jt = sig.functions.find(t.name); jt != sig.functions.end()) arity = jt->second;
        if (arity < 0) report(Diagnostic::Kind::Scope, "function symbol '" + t.name + "' is neither declared nor bound", t.span);
        else if (static_cast<std::size_t>(arity) != t.args.size())
          report(Diagnostic::Kind::Arity, "function '" + t.name + "' has arity " + std::to_string(arity) + " but is applied to " +
                                              std::to_string(t.args.size()) + " argument(s)", t.span);
        break;
      }
      case NumOp::Sum: {
        std::set<std::string> seen;
        for (const auto& v : t.args)
          if (!seen.insert(v).second) report(Diagnostic::Kind::Scope, "SUM binds '" + v + "' twice", t.span);
        break;
      }
      case NumOp::IllSorted:
        report(Diagnostic::Kind::Sort, "first-sort variable '" + t.name + "' used where a numerical term is expected", t.span);
        break;
      default: break;
    }
    if (t.left) visit_term(*t.left, bound_fns);
    if (t.right) visit_term(*t.right, bound_fns);
  }

  void visit(const EsofFormula& f, std::map<std::string, int> bound_fns) {
    switch (f.op) {
      case EsofOp::Rel:
      case EsofOp::NegRel: check_relation(f.name, f.args.size(), f.span); break;
      case EsofOp::NumEq:
      case EsofOp::NumNeq:
        visit_term(*f.lhs, bound_fns);
        visit_term(*f.rhs, bound_fns);
        break;
      case EsofOp::ExistsFn:
        if (f.arity < 0) report(Diagnostic::Kind::Arity, "negative function arity", f.span);
        if (sig.functions.count(f.name))
          report(Diagnostic::Kind::Scope, "quantified function '" + f.name + "' shadows a signature symbol", f.span);
        bound_fns[f.name] = f.arity;
        break;
      default: break;
    }
    if (f.left) visit(*f.left, bound_fns);
    if (f.right) visit(*f.right, bound_fns);
  }
};

}  // namespace

std::vector<Diagnostic> validate(const Formula& f, const Signature& sig) {
  Validator v{sig, {}};
  v.visit(f);
  v.check_free(free_vars(f), f.span);
  return v.out;
}

std::vector<Diagnostic> validate(const EsofFormula& f, const Signature& sig) {
  Validator v{sig, {}};
  v.visit(f, {});
  v.check_free(free_vars(f), f.span);
  return v.out;
}

}  // namespace teamsem
