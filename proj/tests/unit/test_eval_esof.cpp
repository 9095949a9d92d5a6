#include <doctest.h>

#include "teamsem/eval_esof.hpp"

using namespace teamsem;
using namespace teamsem::esof;

namespace {

Rational q(const char* s) { return parse_rational(s); }

Structure with_h(const Distribution& h) {
  Structure A = Structure::plain(h.domain_size);
  A.functions["h"] = h;
  return A;
}

}  // namespace

TEST_CASE("numerical terms") {
  Structure A = Structure::plain(2);
  A.functions["f"] = Distribution(1, 2, {q("1/2"), q("1/2")});
  A.functions["g"] = Distribution(1, 2, {q("1/3"), q("2/3")});
  A.functions["k"] = Distribution(2, 2, {q("1/8"), q("1/4"), q("3/8"), q("1/4")});
  CHECK(eval_term(A, {}, *parse_num_term("(sum (x) (f x))")) == 1);
  CHECK(eval_term(A, {{"x", 0}, {"y", 1}}, *parse_num_term("(mul (f x) (g y))")) == q("1/3"));
  CHECK(eval_term(A, {}, *parse_num_term("(sum (x) (sum (y) (k x y)))")) ==
        eval_term(A, {}, *parse_num_term("(sum (x y) (k x y))")));
  CHECK(eval_term(A, {{"y", 1}}, *parse_num_term("(sum (x) (k x y))")) == q("1/2"));
  // arity-0 symbols are the constant 1
  Structure B = Structure::plain(2);
  B.functions["c"] = Distribution::uniform(0, 2);
  CHECK(eval_term(B, {}, *parse_num_term("(c)")) == 1);
  CHECK_THROWS(eval_term(A, {}, *parse_num_term("(sum (x) (zz x))")));
}

TEST_CASE("uniformity sentence") {
  auto phi = uniformity("h", 1);
  auto uni = eval_esof(with_h(Distribution::uniform(1, 3)), *phi);
  CHECK(uni.satisfied());
  CHECK(verify_esof_certificate(with_h(Distribution::uniform(1, 3)), *phi, {}, {}));
  auto skew = eval_esof(with_h(Distribution(1, 3, {q("1/2"), q("1/2"), 0})), *phi);
  // a zero cell is allowed; two equal positive cells are uniform on the support
  CHECK(skew.satisfied());
  CHECK(eval_esof(with_h(Distribution(1, 3, {q("1/2"), q("1/3"), q("1/6")})), *phi).kind == VerdictKind::Refuted);
  CHECK(eval_esof(Structure::plain(3), *exists_fn("f", 1, uniformity("f", 1))).satisfied());
}

TEST_CASE("zero is definable only with two elements") {
  CHECK(eval_esof(Structure::plain(1), *zero_definability()).kind == VerdictKind::Refuted);
  auto two = eval_esof(Structure::plain(2), *zero_definability());
  REQUIRE(two.satisfied());
  CHECK(verify_esof_certificate(Structure::plain(2), *zero_definability(), {}, two.witnesses));
}

TEST_CASE("constant ratios") {
  Structure A = with_h(Distribution::uniform(1, 2));
  auto half = exists("x", constant_ratio(fn("h", {"x"}), 1, 2));
  auto r = eval_esof(A, *half);
  REQUIRE(r.satisfied());
  CHECK(verify_esof_certificate(A, *half, {}, r.witnesses));

  // zeroing one entry of a witness breaks it
  EsofWitnesses broken = r.witnesses;
  bool changed = false;
  for (auto& [key, f] : broken) {
    for (std::size_t i = 0; i < f.cells() && !changed; ++i)
      if (f.table[i] > 0) {
        std::size_t j = (i + 1) % f.cells();
        f.table[j] += f.table[i];
        f.table[i] = 0;
        changed = true;
      }
    if (changed) break;
  }
  REQUIRE(changed);
  CHECK_FALSE(verify_esof_certificate(A, *half, {}, broken));

  EsofOptions o;
  o.resolution = 2;
  CHECK(eval_esof(A, *exists("x", constant_ratio(fn("h", {"x"}), 2, 4)), {}, o).satisfied());
  // 1/3 is not reachable, the search can only report Unknown
  CHECK_FALSE(eval_esof(A, *exists("x", constant_ratio(fn("h", {"x"}), 1, 3))).satisfied());
}

TEST_CASE("witness keys carry quantifier position and context") {
  CHECK(witness_key("g", 2, {{"x", 0}, {"y", 1}}) == "g#2@x=0,y=1");
  Structure A = Structure::plain(2);
  auto phi = parse_esof("(forall x (exists-fn g 1 (n= (g x) 1)))");
  auto r = eval_esof(A, *phi);
  REQUIRE(r.satisfied());
  CHECK(r.witnesses.size() == 2);
  CHECK(verify_esof_certificate(A, *phi, {}, r.witnesses));
  EsofWitnesses partial = r.witnesses;
  partial.erase(partial.begin());
  CHECK_FALSE(verify_esof_certificate(A, *phi, {}, partial));
}

TEST_CASE("function quantifiers on a grid") {
  Structure A = Structure::plain(2);
  auto product = parse_esof("(exists-fn g 1 (exists-fn k 2 (forall (x y) (n= (k x y) (mul (g x) (g y))))))");
  auto r = eval_esof(A, *product);
  REQUIRE(r.satisfied());
  CHECK(verify_esof_certificate(A, *product, {}, r.witnesses));
  auto impossible = parse_esof("(exists-fn g 1 (forall x (n= (g x) 1)))");
  CHECK_FALSE(eval_esof(A, *impossible).satisfied());
}
