#include <doctest.h>

#include "teamsem/syntax.hpp"

using namespace teamsem;

TEST_CASE("parsing the exact-cover formula") {
  auto phi = parse_formula("(or (!= set 0) (and (approx (element) (left)) (approx (set right) (set left))))");
  REQUIRE(phi->op == Op::Or);
  CHECK(phi->left->op == Op::Neq);
  CHECK(phi->left->args[1] == Term::constant("0"));
  const Formula& rhs = *phi->right;
  REQUIRE(rhs.op == Op::And);
  CHECK(rhs.left->op == Op::Approx);
  CHECK(rhs.left->xs == VarList{"element"});
  CHECK(rhs.right->ys == VarList{"set", "left"});
  CHECK(free_vars(*phi) == std::set<std::string>{"element", "left", "right", "set"});
}

TEST_CASE("parse and print are inverse") {
  for (const char* text : {"(approx (element) (left))", "(forall x (exists y (cindep (x) (y) (y))))",
                           "(and (rel R x z) (nrel S 'T))", "(or (= x y) (!= x 1))"}) {
    auto phi = parse_formula(text);
    CHECK(print(phi) == text);
    CHECK(equal(parse_formula(print(phi)), phi));
  }
  auto t = parse_num_term("(sum (x) (mul (f x) (g x)))");
  REQUIRE(t->op == NumOp::Sum);
  CHECK(t->args == VarList{"x"});
  CHECK(t->left->op == NumOp::Mul);
  CHECK(print(*t) == "(sum (x) (mul (fn f x) (fn g x)))");
}

TEST_CASE("free variables") {
  CHECK(free_vars(*parse_formula("(approx (x) (y))")) == std::set<std::string>{"x", "y"});
  CHECK(free_vars(*parse_formula("(exists y (cindep (x) (y) (y)))")) == std::set<std::string>{"x"});
  CHECK(free_vars(*parse_formula("(forall x (rel R x z))")) == std::set<std::string>{"z"});
  auto psi = parse_esof("(exists-fn g 1 (forall x (n= (g x) (sum (y) (f x y z)))))");
  CHECK(free_vars(*psi) == std::set<std::string>{"z"});
  CHECK(free_functions(*psi) == std::set<std::string>{"f"});
}

TEST_CASE("syntax errors carry positions") {
  try {
    parse_formula("(and (= x y)\n  (approx (x) y))");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.span.line == 2);
  }
  CHECK_THROWS_AS(parse_formula("(not (approx (x) (y)))"), SyntaxError);
  CHECK_THROWS_AS(parse_formula("(and (= x y)"), SyntaxError);
  CHECK_THROWS_AS(parse_esof("(n= (f x) (g x)"), SyntaxError);
}

TEST_CASE("sugar expands into negation normal form") {
  auto phi = parse_formula("(iff (= a 0) (!= b 0))");
  CHECK(is_flat(*phi));
  CHECK(print(phi) == print(fo::iff(fo::eq(Term::var("a"), Term::constant("0")),
                                    fo::neq(Term::var("b"), Term::constant("0")))));
  CHECK(print(parse_formula("(not (rel R x))")) == "(nrel R x)");
  CHECK(print(parse_formula("(imp (rel R x) (= x y))")) == "(or (nrel R x) (= x y))");
}

TEST_CASE("validation reports arity and sort problems") {
  Signature sig;
  sig.relations["R"] = 1;
  sig.functions["f"] = 1;
  sig.free_vars = {"x", "y", "z"};
  CHECK(validate(*parse_formula("(rel R x)"), sig).empty());
  auto bad_arity = validate(*parse_formula("(rel R x y)"), sig);
  REQUIRE(!bad_arity.empty());
  CHECK(bad_arity[0].kind == Diagnostic::Kind::Arity);
  auto approx = validate(*fo::approx({"x"}, {"y", "z"}), sig);
  REQUIRE(!approx.empty());
  CHECK(approx[0].kind == Diagnostic::Kind::Arity);

  auto sort = validate(*parse_esof("(forall x (n= (f x) y))"), sig);
  REQUIRE(!sort.empty());
  CHECK(sort[0].kind == Diagnostic::Kind::Sort);
  auto scope = validate(*parse_esof("(forall x (n= (g x) 0))"), sig);
  REQUIRE(!scope.empty());
  auto unbound = validate(*parse_formula("(= x w)"), sig);
  REQUIRE(!unbound.empty());
  CHECK(unbound[0].kind == Diagnostic::Kind::Scope);

  Signature h;
  h.functions["h"] = 0;
  CHECK(validate(*esof::constant_ratio(esof::fn("h", {}), 1, 2), h).empty());
}
