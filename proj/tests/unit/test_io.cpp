#include <doctest.h>

#include "../oracles.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"
#include "teamsem/io.hpp"

using namespace teamsem;
using io::Json;

TEST_CASE("team files round trip") {
  auto j = Json::parse(R"({"variables":["y","x"], "domain":["a","b",7],
      "rows":[{"values":["a",7],"weight":"3/10"}, {"values":["b","b"],"weight":"7/10"}]})");
  Domain d;
  ProbabilisticTeam X = io::team_from_json(j, d);
  CHECK(d.labels == std::vector<std::string>{"a", "b", "7"});
  CHECK(X.vars() == VarList{"x", "y"});
  CHECK(X.weight({2, 0}) == parse_rational("3/10"));
  Domain d2;
  CHECK(io::team_from_json(io::to_json(X, d), d2) == X);
  CHECK(d2 == d);
}

TEST_CASE("malformed files are domain errors") {
  Domain d;
  CHECK_THROWS_AS(io::team_from_json(Json::parse(R"({"variables":["x"],"rows":[]})"), d), DomainError);
  CHECK_THROWS_AS(io::team_from_json(Json::parse(R"({"variables":["x"],"domain":["a"],
      "rows":[{"values":["a"],"weight":0.5}]})"), d), DomainError);
  CHECK_THROWS_AS(io::team_from_json(Json::parse(R"({"variables":["x"],"domain":["a"],
      "rows":[{"values":["c"],"weight":"1"}]})"), d), DomainError);
  CHECK_THROWS_AS(io::team_from_json(Json::parse(R"({"variables":["x"],"domain":["a"]})"), d), DomainError);
  CHECK_THROWS_AS(io::domain_from_json(Json::parse(R"(["a","a"])")), DomainError);
  CHECK_THROWS_AS(io::read_text("/nonexistent/file.json"), DomainError);
}

TEST_CASE("multiteams and structures") {
  Domain d;
  Multiteam mX = io::multiteam_from_json(
      Json::parse(R"({"variables":["x"],"domain":[0,1],"rows":[{"values":[0],"mult":2},{"values":[1],"mult":1}]})"), d);
  CHECK(mX.cardinality() == 3);
  Domain d2;
  CHECK(io::multiteam_from_json(io::to_json(mX, d), d2) == mX);

  Structure A = io::structure_from_json(Json::parse(R"({"domain":[0,1],
      "relations":{"R":[[1]], "E":{"arity":2,"tuples":[]}},
      "functions":{"f":{"arity":1,"table":[{"args":[1],"value":"1"}]}}})"));
  CHECK(A.holds("R", {1}));
  CHECK(A.relations.at("E").arity == 2);
  CHECK(A.functions.at("f").at({0}) == 0);
  Structure B = io::structure_from_json(io::to_json(A));
  CHECK(B.relations.at("R").tuples == A.relations.at("R").tuples);
  CHECK(B.functions.at("f") == A.functions.at("f"));
  CHECK_THROWS_AS(io::structure_from_json(Json::parse(R"({"domain":[0,1],
      "functions":{"f":{"arity":1,"table":[{"args":[1],"value":"1/2"}]}}})")), DomainError);
}

TEST_CASE("certificates round trip") {
  auto enc = gen_exact_cover(triangle_cover_instance());
  Structure A{enc.domain, {}, {}};
  ProbabilisticTeam X = prob_of_multiteam(enc.team);
  ProbOptions o;
  o.resolution = 2;
  o.max_domain = 8;
  auto v = eval_prob(A, X, enc.phi, o);
  REQUIRE(v.satisfied());
  Certificate back = io::certificate_from_json(io::to_json(*v.certificate, enc.domain), enc.domain);
  CHECK(verify_certificate(A, X, *enc.phi, back));

  auto sample = gen_exact_cover(sample_cover_instance());
  MultiOptions mo;
  mo.max_domain = 12;
  Structure P{sample.domain, {}, {}};
  auto mc = eval_multi_with_witness(P, sample.team, sample.phi, mo);
  REQUIRE(mc);
  MultiCertificate mback = io::multi_certificate_from_json(io::to_json(*mc, sample.domain), sample.domain);
  CHECK(mback == *mc);
}

TEST_CASE("bayes joint") {
  BayesSpec spec = burglary_bayes_spec();
  ProbabilisticTeam J = gen_bayes_joint(spec);
  CHECK(J.size() == 11);
  // vars sorted: alarm cat guard thief; T is element 0
  CHECK(J.weight({0, 0, 0, 0}) == parse_rational("72/10000"));
  CHECK(oracle::cindep(J, {"cat", "thief"}, {"guard"}, {"alarm"}));

  BayesSpec coin;
  coin.domain.labels = {"H", "T"};
  coin.variables.push_back({"c", {}, {{{}, {parse_rational("1/2"), parse_rational("1/2")}}}});
  CHECK(gen_bayes_joint(coin).size() == 2);

  BayesSpec det = burglary_bayes_spec();
  for (auto& v : det.variables)
    for (auto& [given, probs] : v.table) probs = {0, 1};
  ProbabilisticTeam one = gen_bayes_joint(det);
  CHECK(one.size() == 1);
  CHECK(one.weight({1, 1, 1, 1}) == 1);

  BayesSpec cyclic = burglary_bayes_spec();
  cyclic.variables[0].parents = {"alarm"};
  cyclic.variables[0].table = {{{"T"}, {1, 0}}, {{"F"}, {1, 0}}};
  CHECK_THROWS_AS(gen_bayes_joint(cyclic), DomainError);
  BayesSpec bad = burglary_bayes_spec();
  bad.variables[1].table.begin()->second = {parse_rational("1/2"), parse_rational("1/3")};
  CHECK_THROWS_AS(gen_bayes_joint(bad), DomainError);
}

TEST_CASE("instance files") {
  auto inst = io::exact_cover_from_json(Json::parse(R"({"universe":[1,2,3,4],"sets":[[1,2,3],[2],[1,3,4]]})"));
  CHECK(inst.sets.size() == 3);
  CHECK(gen_exact_cover(inst).team == gen_exact_cover(sample_cover_instance()).team);
  CHECK_THROWS_AS(io::exact_cover_from_json(Json::parse(R"({"universe":[1],"sets":[[2]]})")), DomainError);

  auto spec = io::bayes_spec_from_json(Json::parse(R"({"domain":["T","F"],"variables":[
      {"name":"a","parents":[],"table":[{"given":[],"probs":["1/4","3/4"]}]},
      {"name":"b","parents":["a"],"table":[{"given":["T"],"probs":["1","0"]},{"given":["F"],"probs":["0","1"]}]}]})"));
  ProbabilisticTeam J = gen_bayes_joint(spec);
  CHECK(J.size() == 2);
  CHECK(J.weight({0, 0}) == parse_rational("1/4"));
}
