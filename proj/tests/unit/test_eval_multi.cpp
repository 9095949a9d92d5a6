#include <doctest.h>

#include "../oracles.hpp"
#include "teamsem/eval_multi.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"

using namespace teamsem;

namespace {

MultiOptions wide() {
  MultiOptions o;
  o.max_domain = 12;
  return o;
}

}  // namespace

TEST_CASE("exact-cover encoding") {
  auto enc = gen_exact_cover(sample_cover_instance());
  CHECK(enc.team.size() == 11);
  CHECK(enc.team.cardinality() == 11);
  // S2 = {2} gives a self-loop row
  auto id = [&](const char* l) { return *enc.domain.find(l); };
  CHECK(enc.team.multiplicity({0, id("2"), id("2"), id("S2")}) == 1);
  CHECK(enc.team.multiplicity({id("4"), 0, 0, 0}) == 1);

  auto single = gen_exact_cover({{"1"}, {{"1"}}});
  CHECK(single.team.size() == 2);
  CHECK(eval_multi(Structure{single.domain, {}, {}}, single.team, single.phi));

  CHECK_THROWS_AS(gen_exact_cover({{"1"}, {{"2"}}}), DomainError);
  CHECK_THROWS_AS(gen_exact_cover({{"0", "1"}, {{"1"}}}), DomainError);
  CHECK_THROWS_AS(gen_exact_cover({{"1"}, {{}}}), DomainError);
}

TEST_CASE("four-element instance has a certificate naming its cover") {
  auto inst = sample_cover_instance();
  auto enc = gen_exact_cover(inst);
  Structure A{enc.domain, {}, {}};
  auto cert = eval_multi_with_witness(A, enc.team, enc.phi, wide());
  REQUIRE(cert);
  CHECK(verify_multi_certificate(A, enc.team, *enc.phi, *cert));
  auto cover = cover_from_certificate(enc, *cert);
  CHECK(oracle::is_exact_cover(inst, cover));
  CHECK(cover == std::vector<std::size_t>{1, 2});
}

TEST_CASE("triangle instance is refuted") {
  auto inst = triangle_cover_instance();
  auto enc = gen_exact_cover(inst);
  CHECK(enc.team.size() == 9);
  CHECK(oracle::exact_covers(inst).empty());
  CHECK_FALSE(eval_multi_with_witness(Structure{enc.domain, {}, {}}, enc.team, enc.phi, wide()));
}

TEST_CASE("trivial and structural cases") {
  Structure A = Structure::plain(2);
  Multiteam mX({"x", "y"}, 2, {{{0, 1}, 2}, {{1, 1}, 1}});
  CHECK(eval_multi(A, mX, parse_formula("(= x x)")));
  auto c = eval_multi_with_witness(A, mX, parse_formula("(and (= x x) (= y 1))"));
  REQUIRE(c);
  CHECK(c->kind == MultiCertificate::Kind::And);
  CHECK(c->children.size() == 2);
  CHECK_FALSE(eval_multi_with_witness(A, mX, parse_formula("(= x 1)")));
  CHECK_THROWS_AS(eval_multi(A, mX, parse_formula("(= z z)")), DomainError);
}

TEST_CASE("lax existential chooses sets") {
  Structure A = Structure::plain(2);
  // y must copy x's marginal while avoiding x's value: impossible when x is
  // constant, fine once x takes both values.
  Multiteam one({"x"}, 2, {{{0}, 2}});
  auto phi = parse_formula("(exists y (approx (x) (y)))");
  CHECK(eval_multi(A, one, phi));
  auto psi = parse_formula("(exists y (and (approx (x) (y)) (!= x y)))");
  CHECK_FALSE(eval_multi(A, one, psi));
  Multiteam two({"x"}, 2, {{{0}, 1}, {{1}, 1}});
  auto cert = eval_multi_with_witness(A, two, psi);
  REQUIRE(cert);
  CHECK(verify_multi_certificate(A, two, *psi, *cert));
}

TEST_CASE("caps are refusals") {
  Structure A = Structure::plain(7);
  Multiteam mX({"x"}, 7, {{{0}, 1}});
  CHECK_THROWS_AS(eval_multi(A, mX, parse_formula("(= x x)")), RefusedInput);
}

TEST_CASE("atoms agree with the counting measure") {
  Structure A = Structure::plain(2);
  Multiteam mX({"x", "y"}, 2, {{{0, 0}, 1}, {{0, 1}, 1}, {{1, 0}, 2}, {{1, 1}, 2}});
  const ProbabilisticTeam X = prob_of_multiteam(mX);
  for (const char* atom : {"(cindep () (x) (y))", "(approx (x) (y))", "(cindep (x) (y) (y))"}) {
    auto phi = parse_formula(atom);
    CHECK(eval_multi(A, mX, phi) == eval_prob(A, X, phi).satisfied());
  }
}
