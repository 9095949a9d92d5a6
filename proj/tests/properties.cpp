// Fixed-seed property suite. Every case draws from trial_rng(seed, i) so a
// failure names a reproducible trial.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "oracles.hpp"
#include "teamsem/eval_esof.hpp"
#include "teamsem/eval_multi.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"
#include "teamsem/harness.hpp"
#include "teamsem/io.hpp"
#include "teamsem/transform.hpp"

using namespace teamsem;

namespace {

int pick(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Rational total(const ProbabilisticTeam& X) {
  Rational s = 0;
  for (const auto& [row, w] : X.rows()) s += w;
  return s;
}

std::vector<Rational> random_simplex(Rng& rng, int cells, int den) {
  std::vector<Rational> out(cells, 0);
  for (int u = 0; u < den; ++u) out[pick(rng, 0, cells - 1)] += Rational(1) / den;
  return out;
}

Distribution random_distribution(Rng& rng, int arity, int n, int den) {
  return Distribution(arity, n, random_simplex(rng, static_cast<int>(tuple_count(n, arity)), den));
}

Multiteam random_multiteam(Rng& rng, const VarList& vars, int n, int rows, int max_mult) {
  std::vector<std::pair<Values, std::uint64_t>> out;
  for (int r = 0; r < rows; ++r) {
    Values v;
    for (std::size_t i = 0; i < vars.size(); ++i) v.push_back(pick(rng, 0, n - 1));
    out.push_back({v, static_cast<std::uint64_t>(pick(rng, 1, max_mult))});
  }
  return Multiteam(vars, n, out);
}

const VarList kVars{"x0", "x1", "x2"};

}  // namespace

TEST_CASE("weight conservation") {
  for (int i = 0; i < 300; ++i) {
    Rng rng = trial_rng(101, i);
    const int n = pick(rng, 1, 3);
    ProbabilisticTeam X = random_team(rng, kVars, n, 5, 6);
    ProbabilisticTeam Y = random_team(rng, kVars, n, 5, 6);
    REQUIRE(total(X) == 1);
    CHECK(total(scaled_union(X, Y, Rational(pick(rng, 0, 5)) / 5)) == 1);
    CHECK(total(duplicate(X, "q")) == 1);
    CHECK(total(duplicate(X, "x1")) == 1);
    std::map<Values, std::vector<Rational>> F;
    for (const auto& [row, w] : X.rows()) F[row] = random_simplex(rng, n, pick(rng, 1, 4));
    CHECK(total(extend(X, F, "q")) == 1);
    CHECK(total(extend_constant(X, random_distribution(rng, 2, n, 4), {"q", "r"})) == 1);
    CHECK(total(restrict(X, {"x0"})) == 1);
    CHECK(total(restrict(X, {})) == 1);
  }
}

TEST_CASE("fresh quantification preserves old marginals") {
  for (int i = 0; i < 300; ++i) {
    Rng rng = trial_rng(102, i);
    const int n = pick(rng, 1, 3);
    ProbabilisticTeam X = random_team(rng, kVars, n, 5, 6);
    std::map<Values, std::vector<Rational>> F;
    for (const auto& [row, w] : X.rows()) F[row] = random_simplex(rng, n, pick(rng, 1, 4));
    for (const ProbabilisticTeam& Y : {extend(X, F, "q"), duplicate(X, "q")}) {
      CHECK(oracle::marginal(Y, kVars) == oracle::marginal(X, kVars));
      CHECK(restrict(Y, {"x0", "x1", "x2"}) == X);
    }
  }
}

TEST_CASE("atoms match the oracle and the one-sided approx") {
  Structure A2 = Structure::plain(2), A3 = Structure::plain(3);
  for (int i = 0; i < 400; ++i) {
    Rng rng = trial_rng(103, i);
    const int n = pick(rng, 2, 3);
    const Structure& A = n == 2 ? A2 : A3;
    ProbabilisticTeam X = random_team(rng, kVars, n, 6, 6);
    VarList xs{kVars[pick(rng, 0, 2)]}, ys{kVars[pick(rng, 0, 2)]};
    const bool eq = check_approx(A, X, xs, ys);
    CHECK(eq == oracle::approx(X, xs, ys));
    // Pointwise <= over every tuple already forces equality.
    auto mx = oracle::marginal(X, xs), my = oracle::marginal(X, ys);
    bool leq = true;
    for (const auto& [k, w] : mx) leq = leq && w <= (my.count(k) ? my[k] : Rational(0));
    CHECK(eq == leq);
    VarList g;
    if (pick(rng, 0, 1)) g.push_back(kVars[pick(rng, 0, 2)]);
    CHECK(check_cindep(A, X, g, xs, ys) == oracle::cindep(X, g, xs, ys));
  }
}

TEST_CASE("certificate soundness and serialization") {
  Structure A = Structure::plain(2);
  A.relations["R"] = Relation{1, {{1}}};
  const Domain d = Domain::range(2);
  int satisfied = 0;
  for (int i = 0; i < 150; ++i) {
    Rng rng = trial_rng(104, i);
    VarList vars{"x0", "x1"};
    ProbabilisticTeam X = random_team(rng, vars, 2, 3, 4);
    FormulaPtr phi = random_formula(rng, vars, 3, 1);
    ProbOptions o;
    o.resolution = 2;
    o.node_budget = 200'000;
    Verdict v = eval_prob(A, X, phi, o);
    if (!v.satisfied()) continue;
    ++satisfied;
    REQUIRE(v.certificate);
    INFO(print(phi));
    CHECK(verify_certificate(A, X, *phi, *v.certificate));
    Certificate back = io::certificate_from_json(io::to_json(*v.certificate, d), d);
    CHECK(back == *v.certificate);
    CHECK(verify_certificate(A, X, *phi, back));
  }
  CHECK(satisfied > 20);

  for (int i = 0; i < 150; ++i) {
    Rng rng = trial_rng(105, i);
    Multiteam mX = random_multiteam(rng, {"x0", "x1"}, 2, pick(rng, 1, 3), 2);
    FormulaPtr phi = random_formula(rng, {"x0", "x1"}, 2, 1);
    auto c = eval_multi_with_witness(A, mX, phi);
    if (!c) continue;
    CHECK(verify_multi_certificate(A, mX, *phi, *c));
    CHECK(io::multi_certificate_from_json(io::to_json(*c, d), d) == *c);
  }
}

TEST_CASE("resolution monotonicity") {
  Structure A = Structure::plain(2);
  A.relations["R"] = Relation{1, {{0}}};
  for (int i = 0; i < 120; ++i) {
    Rng rng = trial_rng(106, i);
    VarList vars{"x0", "x1"};
    ProbabilisticTeam X = random_team(rng, vars, 2, 3, 3);
    FormulaPtr phi = random_formula(rng, vars, 2, 1);
    ProbOptions o;
    o.resolution = pick(rng, 1, 2);
    o.node_budget = 200'000;
    if (!eval_prob(A, X, phi, o).satisfied()) continue;
    o.resolution *= 2;
    INFO(print(phi));
    CHECK(eval_prob(A, X, phi, o).satisfied());
  }
}

TEST_CASE("sums obey Fubini and total mass") {
  for (int i = 0; i < 200; ++i) {
    Rng rng = trial_rng(107, i);
    const int n = pick(rng, 1, 3);
    Structure A = Structure::plain(n);
    A.functions["f"] = random_distribution(rng, 3, n, pick(rng, 1, 8));
    const Assignment s{{"x", pick(rng, 0, n - 1)}, {"y", pick(rng, 0, n - 1)}, {"z", pick(rng, 0, n - 1)}};
    auto t = [](const char* text) { return *parse_num_term(text); };
    CHECK(eval_term(A, s, t("(sum (x y z) (fn f x y z))")) == 1);
    const Rational joint = eval_term(A, s, t("(sum (x y) (fn f x y z))"));
    CHECK(joint == eval_term(A, s, t("(sum (x) (sum (y) (fn f x y z)))")));
    CHECK(joint == eval_term(A, s, t("(sum (y) (sum (x) (fn f x y z)))")));
    CHECK(eval_term(A, s, t("(sum () (fn f x y z))")) == A.functions["f"].at({s.at("x"), s.at("y"), s.at("z")}));
    CHECK(eval_term(A, s, t("(mul (fn f x y z) 1)")) == eval_term(A, s, t("(fn f x y z)")));
  }
}

TEST_CASE("parse and print round trip") {
  for (int i = 0; i < 500; ++i) {
    Rng rng = trial_rng(108, i);
    FormulaPtr phi = random_formula(rng, kVars, 4, 3);
    const std::string text = print(phi);
    FormulaPtr back = parse_formula(text);
    CHECK_MESSAGE(equal(back, phi), text);
    CHECK(print(back) == text);
    if (i % 5 == 0) {
      EsofPtr psi = to_esof(random_qf_formula(rng, kVars, 2), kVars);
      CHECK(equal(parse_esof(print(psi)), psi));
    }
  }
}

TEST_CASE("multiteam semantics matches the counting measure on atoms") {
  Structure A = Structure::plain(2);
  A.relations["R"] = Relation{1, {{1}}};
  for (int i = 0; i < 300; ++i) {
    Rng rng = trial_rng(109, i);
    Multiteam mX = random_multiteam(rng, kVars, 2, pick(rng, 1, 4), 3);
    FormulaPtr phi = random_qf_formula(rng, kVars, 0);
    CHECK_MESSAGE(eval_multi(A, mX, phi) == eval_prob(A, prob_of_multiteam(mX), phi).satisfied(), print(phi));
  }
}

TEST_CASE("exact-cover reduction agrees with brute force") {
  MultiOptions mo;
  mo.max_domain = 12;
  int positive = 0;
  for (int i = 0; i < 60; ++i) {
    Rng rng = trial_rng(110, i);
    ExactCoverInstance inst;
    const int n = pick(rng, 1, 5);
    for (int a = 1; a <= n; ++a) inst.universe.push_back(std::to_string(a));
    const int m = pick(rng, 1, 4);
    for (int j = 0; j < m; ++j) {
      std::vector<std::string> s;
      for (const auto& a : inst.universe)
        if (pick(rng, 0, 2) == 0) s.push_back(a);
      if (s.empty()) s.push_back(inst.universe[pick(rng, 0, n - 1)]);
      std::shuffle(s.begin(), s.end(), rng);
      inst.sets.push_back(s);
    }
    auto enc = gen_exact_cover(inst);
    Structure A{enc.domain, {}, {}};
    auto cert = eval_multi_with_witness(A, enc.team, enc.phi, mo);
    const bool has_cover = !oracle::exact_covers(inst).empty();
    CHECK(cert.has_value() == has_cover);
    if (cert) {
      ++positive;
      CHECK(oracle::is_exact_cover(inst, cover_from_certificate(enc, *cert)));
    }
  }
  CHECK(positive > 5);
}

TEST_CASE("random network tables keep the local Markov property") {
  for (int i = 0; i < 100; ++i) {
    Rng rng = trial_rng(111, i);
    BayesSpec spec = burglary_bayes_spec();
    for (auto& v : spec.variables)
      for (auto& [given, probs] : v.table) {
        const int den = pick(rng, 1, 10);
        const int k = pick(rng, 0, den);
        probs = {Rational(k) / den, Rational(den - k) / den};
      }
    ProbabilisticTeam J = gen_bayes_joint(spec);
    CHECK(oracle::cindep(J, {"cat", "thief"}, {"guard"}, {"alarm"}));
    CHECK(check_cindep(Structure::plain(2), J, {"thief", "cat"}, {"guard"}, {"alarm"}));
  }
}

// Small sentences over a unary distribution p and a unary relation R,
// mixing first-order and function quantifiers in any order.
EsofPtr random_sentence(Rng& rng) {
  using namespace esof;
  VarList scope;
  bool have_g = false;
  auto var = [&] { return scope[pick(rng, 0, static_cast<int>(scope.size()) - 1)]; };
  auto unary = [&] { return fn(have_g && pick(rng, 0, 1) ? "g" : "p", {var()}); };
  auto term = [&]() -> NumTermPtr {
    switch (pick(rng, 0, 3)) {
      case 0: return mul(unary(), fn("p", {var()}));
      case 1: return sum({"s"}, fn(have_g ? "g" : "p", {"s"}));
      case 2: return zero();
      default: return unary();
    }
  };
  auto atom = [&]() -> EsofPtr {
    switch (pick(rng, 0, 4)) {
      case 0: return eq(Term::var(var()), Term::var(var()));
      case 1: return rel("R", {Term::var(var())});
      case 2: return num_neq(unary(), term());
      default: return num_eq(unary(), term());
    }
  };
  std::vector<std::function<EsofPtr(EsofPtr)>> wrap;
  const int depth = pick(rng, 1, 2);
  const int g_at = pick(rng, -1, depth);
  for (int k = 0; k <= depth; ++k) {
    if (k == g_at) {
      have_g = true;
      wrap.push_back([](EsofPtr b) { return exists_fn("g", 1, b); });
    }
    if (k == depth) break;
    const std::string x = k == 0 ? "x" : "y";
    scope.push_back(x);
    wrap.push_back(pick(rng, 0, 1) ? std::function<EsofPtr(EsofPtr)>([x](EsofPtr b) { return forall(x, b); })
                                   : [x](EsofPtr b) { return exists(x, b); });
  }
  EsofPtr body = pick(rng, 0, 1) ? conj(atom(), atom()) : disj(atom(), atom());
  for (auto it = wrap.rbegin(); it != wrap.rend(); ++it) body = (*it)(body);
  return body;
}

TEST_CASE("ESOf normal form preserves meaning") {
  int compared = 0;
  for (int i = 0; i < 50; ++i) {
    Rng rng = trial_rng(112, i);
    const int n = pick(rng, 2, 3);
    Structure A = random_structure(rng, n);
    A.functions["p"] = random_distribution(rng, 1, n, pick(rng, 1, 2));
    EsofPtr phi = random_sentence(rng);
    EsofPtr nf = normalize_esof(phi);
    INFO(print(phi));
    CHECK_FALSE(check_normal_form(*nf));
    CHECK(print(normalize_esof(phi)) == print(nf));
    EsofOptions o;
    o.resolution = 2;
    o.node_budget = 200'000;
    auto a = eval_esof(A, *phi, {}, o), b = eval_esof(A, *nf, {}, o);
    if (a.decided() && b.decided()) {
      ++compared;
      CHECK(a.kind == b.kind);
    }
  }
  MESSAGE("compared " << compared << " of 50");
  CHECK(compared >= 15);
}
