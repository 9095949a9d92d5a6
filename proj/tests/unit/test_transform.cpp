#include <doctest.h>

#include "teamsem/eval_esof.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/harness.hpp"
#include "teamsem/transform.hpp"

using namespace teamsem;

namespace {

std::string cindep_nf(const char* text) { return print(normalize_cindep(parse_formula(text))); }

}  // namespace

TEST_CASE("independence atoms are normalized") {
  CHECK(cindep_nf("(cindep (x) (y) (y))") == "(cindep (x) (y) (y))");
  CHECK(cindep_nf("(cindep (x) (x y) (z))") == "(cindep (x) (y) (z))");
  CHECK(cindep_nf("(cindep (x) (y u) (u z))") == "(and (cindep (x) (y) (z)) (cindep (x) (u) (u)))");
  for (const char* text : {"(cindep (x) (y u) (u z))", "(cindep (x y) (x y) (y z))", "(cindep () (x x) (x))"}) {
    auto once = normalize_cindep(parse_formula(text));
    CHECK(equal(normalize_cindep(once), once));
  }
}

TEST_CASE("normalized atoms keep their meaning") {
  Rng rng = trial_rng(11, 0);
  Structure A = Structure::plain(2);
  auto phi = parse_formula("(cindep (x) (y u) (u z))");
  auto nf = normalize_cindep(phi);
  for (int i = 0; i < 200; ++i) {
    ProbabilisticTeam X = random_team(rng, {"u", "x", "y", "z"}, 2, 4, 4);
    CHECK(eval_prob(A, X, phi).kind == eval_prob(A, X, nf).kind);
  }
}

TEST_CASE("first-order to ESOf") {
  CHECK(print(to_esof(parse_formula("(rel R x0)"), {"x0"})) == "(forall x0 (or (n= (fn f x0) 0) (rel R x0)))");
  CHECK(print(to_esof(parse_formula("(approx (x0) (x1))"), {"x0", "x1"})) ==
        "(forall #z0 (n= (sum (x1) (fn f #z0 x1)) (sum (x0) (fn f x0 #z0))))");
  auto phi = parse_formula("(or (approx (x) (y)) (exists z (cindep () (x) (z))))");
  auto a = to_esof(phi, {"x", "y"});
  CHECK(print(a) == print(to_esof(phi, {"x", "y"})));
  CHECK(free_functions(*a) == std::set<std::string>{"f"});
  CHECK(free_vars(*a).empty());
  CHECK_THROWS(to_esof(parse_formula("(= x w)"), {"x"}));
}

TEST_CASE("translation agrees on a small team") {
  Structure A = Structure::plain(2);
  A.relations["R"] = Relation{1, {{1}}};
  ProbabilisticTeam X({"x", "y"}, 2, {{{0, 0}, parse_rational("1/2")}, {{1, 1}, parse_rational("1/2")}});
  for (const char* text : {"(approx (x) (y))", "(cindep () (x) (y))", "(or (rel R x) (= x y))", "(and (= x y) (rel R x))"}) {
    auto phi = parse_formula(text);
    auto psi = to_esof(phi, X.vars());
    auto direct = eval_prob(A, X, phi);
    auto via = eval_esof(with_team_function(A, X), *psi);
    if (direct.decided() && via.decided()) CHECK_MESSAGE(direct.kind == via.kind, text);
  }
}

TEST_CASE("ESOf normal form") {
  auto zd = esof::zero_definability();
  auto nf = normalize_esof(zd);
  CHECK_FALSE(check_normal_form(*nf));
  CHECK(check_normal_form(*zd));
  for (int n = 1; n <= 3; ++n)
    CHECK(eval_esof(Structure::plain(n), *zd).kind == eval_esof(Structure::plain(n), *nf).kind);

  auto already = parse_esof("(exists-fn g 1 (forall x (n= (g x) (sum (y) (p x y)))))");
  CHECK_FALSE(check_normal_form(*already));
  CHECK(equal(normalize_esof(already), already));
  CHECK(print(normalize_esof(zd)) == print(nf));
}

TEST_CASE("normal-form checker rejects bad identities") {
  CHECK(check_normal_form(*parse_esof("(forall x (n= (p x) (mul (p x) (p x))))")));
  CHECK(check_normal_form(*parse_esof("(exists-fn g 1 (forall x (n= (g x) (mul (mul (p x) (p x)) (p x)))))")));
  CHECK(check_normal_form(*parse_esof("(forall x (exists y (n= (p x) (p y))))")));
  CHECK(check_normal_form(*parse_esof("(forall (x y) (n= (p x) (sum (y) (q x y))))")));
}

TEST_CASE("ESOf back to first order") {
  auto s = parse_esof(
      "(exists-fn q 1 (exists-fn g 2 (forall x (forall z (and (n= (fn q x) (fn p x)) (n= (fn g x z) (mul (fn p x) (fn q z))))))))");
  auto Phi = from_esof(s, "p", {"t"});
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"t"}, 2, {{{0}, parse_rational("1/3")}, {{1}, parse_rational("2/3")}});
  // the witnesses q = p and g = p x p need thirds and ninths
  ProbOptions o;
  o.resolution = 9;
  auto v = eval_prob(A, X, Phi, o);
  REQUIRE(v.satisfied());
  CHECK(verify_certificate(A, X, *Phi, *v.certificate));

  auto literal = from_esof(parse_esof("(forall x (or (n= (p x) 0) (rel R x)))"), "p", {"t"});
  Structure B = Structure::plain(2);
  B.relations["R"] = Relation{1, {{1}}};
  CHECK(eval_prob(B, ProbabilisticTeam({"t"}, 2, {{{1}, 1}}), literal).satisfied());
  CHECK(eval_prob(B, X, literal).refuted());

  CHECK_THROWS_AS(from_esof(parse_esof("(forall x (n!= (p x) 0))"), "p", {"t"}), RefusedInput);
  CHECK_THROWS_AS(from_esof(parse_esof("(forall x (exists y (= x y)))"), "p", {"t"}), RefusedInput);
}
