#pragma once

#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "teamsem/model.hpp"

namespace teamsem {

struct SourceSpan {
  int line = 0;
  int column = 0;
};

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(const std::string& msg, SourceSpan at)
      : std::runtime_error(std::to_string(at.line) + ":" + std::to_string(at.column) + ": " + msg), span(at) {}
  SourceSpan span;
};

/// First-order term: a variable or a domain-element constant (by label).
struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  std::string name;

  static Term var(std::string v) { return {Kind::Var, std::move(v)}; }
  static Term constant(std::string label) { return {Kind::Const, std::move(label)}; }
  bool is_var() const { return kind == Kind::Var; }
  bool operator==(const Term&) const = default;
  auto operator<=>(const Term&) const = default;
};

// ---------------------------------------------------------------------------
// FO(cindep, approx)

enum class Op { Eq, Neq, Rel, NegRel, Approx, CIndep, And, Or, Exists, Forall };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Formula in negation normal form. Atoms: Eq/Neq use args[0..1], Rel/NegRel
/// use name+args, Approx uses xs~ys, CIndep is ys independent of zs given xs.
/// And/Or use left/right; quantifiers bind `name` over `left`.
struct Formula {
  Op op;
  std::string name;
  std::vector<Term> args;
  VarList xs, ys, zs;
  FormulaPtr left, right;
  SourceSpan span;

  const Formula& body() const { return *left; }
  bool is_literal() const { return op == Op::Eq || op == Op::Neq || op == Op::Rel || op == Op::NegRel; }
  bool is_dependency_atom() const { return op == Op::Approx || op == Op::CIndep; }
};

/// Structural equality ignoring source spans.
bool equal(const Formula& a, const Formula& b);
inline bool equal(const FormulaPtr& a, const FormulaPtr& b) { return equal(*a, *b); }

namespace fo {
FormulaPtr eq(Term a, Term b);
FormulaPtr neq(Term a, Term b);
FormulaPtr rel(std::string r, std::vector<Term> args);
FormulaPtr nrel(std::string r, std::vector<Term> args);
FormulaPtr approx(VarList xs, VarList ys);
FormulaPtr cindep(VarList given, VarList ys, VarList zs);
FormulaPtr conj(FormulaPtr a, FormulaPtr b);
FormulaPtr disj(FormulaPtr a, FormulaPtr b);
FormulaPtr exists(std::string x, FormulaPtr body);
FormulaPtr forall(std::string x, FormulaPtr body);
/// Left-nested conjunction; requires a nonempty list.
FormulaPtr conj_all(const std::vector<FormulaPtr>& parts);
FormulaPtr disj_all(const std::vector<FormulaPtr>& parts);
FormulaPtr exists_all(const VarList& xs, FormulaPtr body);
FormulaPtr forall_all(const VarList& xs, FormulaPtr body);
/// Dual of a dependency-free formula (NNF negation). Throws SyntaxError on
/// dependency atoms.
FormulaPtr negate(const FormulaPtr& f);
/// (a <-> b) expanded as (a & b) | (~a & ~b); a and b must be dependency-free.
FormulaPtr iff(FormulaPtr a, FormulaPtr b);
}  // namespace fo

/// True iff the formula contains no dependency atom (pure first-order).
bool is_flat(const Formula& f);
std::set<std::string> free_vars(const Formula& f);
/// Number of nested quantifiers along the deepest path.
int quantifier_depth(const Formula& f);

// ---------------------------------------------------------------------------
// ESOf with numerical terms

enum class NumOp { Fn, Mul, Sum, Zero, One, IllSorted };

struct NumTerm;
using NumTermPtr = std::shared_ptr<const NumTerm>;

/// Fn: name(args); Mul: left*right; Sum: SUM_{args} left; Zero/One are the
/// primitive numerals; IllSorted records a first-order variable written in a
/// numeric position so that validation can report it.
struct NumTerm {
  NumOp op;
  std::string name;
  VarList args;
  NumTermPtr left, right;
  SourceSpan span;
};

enum class EsofOp { Eq, Neq, Rel, NegRel, NumEq, NumNeq, And, Or, Exists, Forall, ExistsFn };

struct EsofFormula;
using EsofPtr = std::shared_ptr<const EsofFormula>;

struct EsofFormula {
  EsofOp op;
  std::string name;          // relation, bound variable, or bound function
  std::vector<Term> args;    // first-order literals
  NumTermPtr lhs, rhs;       // NumEq / NumNeq
  int arity = 0;             // ExistsFn
  EsofPtr left, right;
  SourceSpan span;

  const EsofFormula& body() const { return *left; }
};

bool equal(const NumTerm& a, const NumTerm& b);
bool equal(const EsofFormula& a, const EsofFormula& b);
inline bool equal(const EsofPtr& a, const EsofPtr& b) { return equal(*a, *b); }

namespace esof {
NumTermPtr fn(std::string f, VarList args);
NumTermPtr mul(NumTermPtr a, NumTermPtr b);
NumTermPtr sum(VarList bound, NumTermPtr body);
NumTermPtr zero();
NumTermPtr one();

EsofPtr eq(Term a, Term b);
EsofPtr neq(Term a, Term b);
EsofPtr rel(std::string r, std::vector<Term> args);
EsofPtr nrel(std::string r, std::vector<Term> args);
EsofPtr num_eq(NumTermPtr a, NumTermPtr b);
EsofPtr num_neq(NumTermPtr a, NumTermPtr b);
EsofPtr conj(EsofPtr a, EsofPtr b);
EsofPtr disj(EsofPtr a, EsofPtr b);
EsofPtr exists(std::string x, EsofPtr body);
EsofPtr forall(std::string x, EsofPtr body);
EsofPtr exists_fn(std::string f, int arity, EsofPtr body);
EsofPtr conj_all(const std::vector<EsofPtr>& parts);
EsofPtr disj_all(const std::vector<EsofPtr>& parts);
EsofPtr exists_all(const VarList& xs, EsofPtr body);
EsofPtr forall_all(const VarList& xs, EsofPtr body);
/// NNF negation. Throws SyntaxError on ExistsFn.
EsofPtr negate(const EsofPtr& f);
EsofPtr iff(EsofPtr a, EsofPtr b);

/// forall xs ys (f(xs)=0 | f(ys)=0 | f(xs)=f(ys)) for f of the given arity.
EsofPtr uniformity(const std::string& f, int arity);
/// exists g exists x exists y (x != y & g(x) = 1): true iff |A| >= 2.
EsofPtr zero_definability();
/// Sentence-level combinator stating i = p/q with the bit-pattern
/// construction over two distinct elements y0, y1 and a witness f uniform
/// on the q patterns of E. Requires 0 <= p <= q, q >= 1.
EsofPtr constant_ratio(NumTermPtr i, unsigned p, unsigned q);
}  // namespace esof

std::set<std::string> free_vars(const NumTerm& t);
std::set<std::string> free_vars(const EsofFormula& f);
/// Function symbols used but not bound by an enclosing ExistsFn.
std::set<std::string> free_functions(const EsofFormula& f);

// ---------------------------------------------------------------------------
// Parsing, printing, validation

FormulaPtr parse_formula(std::string_view text);
EsofPtr parse_esof(std::string_view text);
NumTermPtr parse_num_term(std::string_view text);

std::string print(const Formula& f);
std::string print(const EsofFormula& f);
std::string print(const NumTerm& t);
inline std::string print(const FormulaPtr& f) { return print(*f); }
inline std::string print(const EsofPtr& f) { return print(*f); }
std::string print(const Term& t);

struct Signature {
  std::map<std::string, int> relations;
  std::map<std::string, int> functions;
  std::set<std::string> free_vars;
};

struct Diagnostic {
  enum class Kind { Arity, Sort, Scope, Unknown };
  Kind kind;
  std::string message;
  SourceSpan span;
};

std::vector<Diagnostic> validate(const Formula& f, const Signature& sig);
std::vector<Diagnostic> validate(const EsofFormula& f, const Signature& sig);

}  // namespace teamsem
