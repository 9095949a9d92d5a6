#include <doctest.h>

#include <random>

#include "../oracles.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"

using namespace teamsem;

namespace {

Rational q(const char* s) { return parse_rational(s); }

// Half of every set row goes to the (!= set 0) side.
Certificate half_split(const ProbabilisticTeam& X, Element zero) {
  Certificate c;
  c.kind = Certificate::Kind::Or;
  c.vars = X.vars();
  const std::size_t set_col = X.index_of("set");
  for (const auto& [row, w] : X.rows())
    if (row[set_col] != zero) c.allocation[row] = w / 2;
  Certificate right;
  right.kind = Certificate::Kind::And;
  right.children = {Certificate{}, Certificate{}};
  c.children = {Certificate{}, right};
  return c;
}

Structure example2_structure() {
  Structure A = Structure::plain(3);
  A.relations["P"] = Relation{1, {{1}}};
  A.relations["Q"] = Relation{1, {{2}}};
  return A;
}

FormulaPtr example2_formula() {
  return parse_formula(
      "(exists (a b) (and (approx (x a) (x b)) (iff (= a 0) (!= b 0))"
      " (exists (gp gq) (and (iff (and (rel P x) (= a 0)) (= gp 0)) (imp (rel Q x) (= gq 0)) (approx (gp) (gq))))))");
}

}  // namespace

TEST_CASE("atoms") {
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"x", "y"}, 2, {{{0, 1}, 1}});
  CHECK_FALSE(check_approx(A, X, {"x"}, {"y"}));
  ProbabilisticTeam prod({"x", "y"}, 2,
                         {{{0, 0}, q("1/6")}, {{0, 1}, q("1/3")}, {{1, 0}, q("1/6")}, {{1, 1}, q("1/3")}});
  CHECK(check_cindep(A, prod, {}, {"y"}, {"x"}));
  ProbabilisticTeam corr({"x", "y"}, 2, {{{0, 0}, q("1/2")}, {{1, 1}, q("1/2")}});
  CHECK_FALSE(check_cindep(A, corr, {}, {"y"}, {"x"}));
  CHECK(check_cindep(A, corr, {"x"}, {"y"}, {"y"}));
  CHECK_FALSE(check_cindep(A, corr, {}, {"y"}, {"y"}));

  auto v = eval_prob(A, corr, parse_formula("(approx (x) (y))"));
  CHECK(v.satisfied());
  auto r = eval_prob(A, X, parse_formula("(and (approx (x) (y)) (= x x))"));
  CHECK(r.refuted());
}

TEST_CASE("atoms agree with the oracle on random teams") {
  std::mt19937 rng(7);
  Structure A = Structure::plain(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<Values, Rational>> rows;
    const int k = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < k; ++i)
      rows.push_back({Values{int(rng() % 3), int(rng() % 3), int(rng() % 3)}, Rational(1 + int(rng() % 3))});
    Rational t = 0;
    for (auto& [r, w] : rows) t += w;
    for (auto& [r, w] : rows) w /= t;
    ProbabilisticTeam X({"x", "y", "z"}, 3, rows);
    CHECK(check_approx(A, X, {"x", "y"}, {"y", "z"}) == oracle::approx(X, {"x", "y"}, {"y", "z"}));
    CHECK(check_cindep(A, X, {"x"}, {"y"}, {"z"}) == oracle::cindep(X, {"x"}, {"y"}, {"z"}));
    CHECK(check_cindep(A, X, {}, {"x", "z"}, {"y"}) == oracle::cindep(X, {}, {"x", "z"}, {"y"}));
  }
}

TEST_CASE("uniformity through a universal quantifier") {
  Structure A = Structure::plain(3);
  ProbabilisticTeam uni({"x"}, 3, {{{0}, q("1/3")}, {{1}, q("1/3")}, {{2}, q("1/3")}});
  ProbabilisticTeam skew({"x"}, 3, {{{0}, q("1/2")}, {{1}, q("1/2")}});
  auto phi = parse_formula("(forall y (approx (x) (y)))");
  CHECK(eval_prob(A, uni, phi).satisfied());
  CHECK(eval_prob(A, skew, phi).refuted());
}

TEST_CASE("example 2") {
  Structure A = example2_structure();
  auto phi = example2_formula();
  ProbabilisticTeam sat({"x"}, 3, {{{1}, q("1/2")}, {{2}, q("1/5")}, {{0}, q("3/10")}});
  ProbOptions o;
  o.resolution = 4;
  auto v = eval_prob(A, sat, phi, o);
  REQUIRE(v.satisfied());
  CHECK(verify_certificate(A, sat, *phi, *v.certificate));

  ProbabilisticTeam unsat({"x"}, 3, {{{1}, q("1/3")}, {{2}, q("1/3")}, {{0}, q("1/3")}});
  CHECK_FALSE(eval_prob(A, unsat, phi, o).satisfied());
}

TEST_CASE("the triangle team and its half split") {
  auto enc = gen_exact_cover(triangle_cover_instance());
  Structure A{enc.domain, {}, {}};
  ProbabilisticTeam X = prob_of_multiteam(enc.team);
  Certificate c = half_split(X, 0);
  CHECK(verify_certificate(A, X, *enc.phi, c));

  // Moving one row's allocation breaks the marginal identity on the right.
  Certificate tampered = c;
  auto it = tampered.allocation.begin();
  it->second = 0;
  CHECK_FALSE(verify_certificate(A, X, *enc.phi, tampered));

  ProbOptions o;
  o.resolution = 2;
  o.max_domain = 8;
  auto v = eval_prob(A, X, enc.phi, o);
  REQUIRE(v.satisfied());
  CHECK(verify_certificate(A, X, *enc.phi, *v.certificate));
}

TEST_CASE("the ten-row figure team rejects the published split") {
  // Domain 0..4 plus set labels; the team of the figure has an element=4 row
  // although 4 is not in the triangle's universe.
  Domain d;
  d.labels = {"0", "1", "2", "3", "4", "S1", "S2", "S3"};
  auto id = [&](const char* l) { return *d.find(l); };
  std::vector<std::pair<Values, Rational>> rows;
  auto add = [&](const char* e, const char* s, const char* l, const char* r) {
    rows.push_back({{id(e), id(l), id(r), id(s)}, q("1/10")});
  };
  add("0", "S1", "1", "2");
  add("0", "S1", "2", "1");
  add("0", "S2", "2", "3");
  add("0", "S2", "3", "2");
  add("0", "S3", "3", "1");
  add("0", "S3", "1", "3");
  add("1", "0", "0", "0");
  add("2", "0", "0", "0");
  add("3", "0", "0", "0");
  add("4", "0", "0", "0");
  ProbabilisticTeam X({"element", "left", "right", "set"}, d.size(), rows);
  Structure A{d, {}, {}};
  CHECK_FALSE(verify_certificate(A, X, *exact_cover_formula(), half_split(X, 0)));
}

TEST_CASE("certificates survive the resolution ladder") {
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"x"}, 2, {{{0}, q("1/2")}, {{1}, q("1/2")}});
  auto phi = parse_formula("(or (= x 0) (= x 1))");
  for (int N : {1, 2, 3, 6}) {
    ProbOptions o;
    o.resolution = N;
    auto v = eval_prob(A, X, phi, o);
    REQUIRE(v.satisfied());
    CHECK(verify_certificate(A, X, *phi, *v.certificate));
  }
}

TEST_CASE("constant distributions") {
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"x"}, 2, {{{0}, q("1/3")}, {{1}, q("2/3")}});
  auto top = parse_formula("(exists y (and (cindep () (x) (y)) (= y y)))");
  auto v = eval_const_dist(A, X, top);
  CHECK(v.satisfied());
  auto copy = parse_formula("(exists y (and (cindep () (x) (y)) (approx (x) (y))))");
  ProbOptions o;
  o.resolution = 3;
  auto c = eval_const_dist(A, X, copy, o);
  REQUIRE(c.satisfied());
  CHECK(verify_certificate(A, X, *copy, *c.certificate));
  CHECK_THROWS(eval_const_dist(A, X, parse_formula("(exists y (= y x))")));
}

TEST_CASE("locality") {
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"x", "y"}, 2, {{{0, 0}, q("1/4")}, {{0, 1}, q("1/4")}, {{1, 1}, q("1/2")}});
  auto phi = parse_formula("(exists z (approx (x) (z)))");
  auto rep = check_locality(A, X, phi, {"x"});
  CHECK(rep.consistent);
  CHECK(rep.full.satisfied());
}

TEST_CASE("bad inputs") {
  Structure A = Structure::plain(2);
  ProbabilisticTeam X({"x"}, 2, {{{0}, 1}});
  CHECK_THROWS_AS(eval_prob(A, X, parse_formula("(= y y)")), DomainError);
  ProbOptions o;
  o.resolution = 0;
  CHECK_THROWS_AS(eval_prob(A, X, parse_formula("(= x x)"), o), DomainError);
  Certificate wrong;
  wrong.kind = Certificate::Kind::Exists;
  CHECK_FALSE(verify_certificate(A, X, *parse_formula("(or (= x x) (= x x))"), wrong));
}
