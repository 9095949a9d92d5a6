#pragma once

#include <json.hpp>

#include "teamsem/eval_esof.hpp"
#include "teamsem/eval_multi.hpp"
#include "teamsem/eval_prob.hpp"
#include "teamsem/generators.hpp"
#include "teamsem/model.hpp"

namespace teamsem::io {

using Json = nlohmann::json;

/// Labels may be written as JSON strings or integers.
Domain domain_from_json(const Json& j);
Json to_json(const Domain& d);

/// {"variables":[...], "domain":[...], "rows":[{"values":[...], "weight":"3/10"}]}
/// The file's own domain wins; `fallback` is used when it has none.
ProbabilisticTeam team_from_json(const Json& j, Domain& domain, const Domain* fallback = nullptr);
Json to_json(const ProbabilisticTeam& X, const Domain& d);

/// Same layout with an integer "mult" per row.
Multiteam multiteam_from_json(const Json& j, Domain& domain, const Domain* fallback = nullptr);
Json to_json(const Multiteam& mX, const Domain& d);

/// {"domain":[...], "relations":{"R":[[...],...]}, "functions":{"f":{"arity":k,
/// "table":[{"args":[...], "value":"p/q"}]}}}; unlisted table cells are 0.
Structure structure_from_json(const Json& j);
Json to_json(const Structure& A);

Json to_json(const Certificate& c, const Domain& d);
Certificate certificate_from_json(const Json& j, const Domain& d);

Json to_json(const MultiCertificate& c, const Domain& d);
MultiCertificate multi_certificate_from_json(const Json& j, const Domain& d);

Json to_json(const EsofWitnesses& w, const Domain& d);
EsofWitnesses witnesses_from_json(const Json& j, const Domain& d);

Json to_json(const Distribution& f, const Domain& d);
Distribution distribution_from_json(const Json& j, const Domain& d);

/// {"universe":[...], "sets":[[...],...]}
ExactCoverInstance exact_cover_from_json(const Json& j);
Json to_json(const ExactCoverInstance& inst);

/// {"domain":["T","F"], "variables":[{"name":"cat", "parents":["thief"],
///   "table":[{"given":["T"], "probs":["1/10","9/10"]}, ...]}, ...]}
BayesSpec bayes_spec_from_json(const Json& j);

/// Reads a whole file (or stdin for "-").
std::string read_text(const std::string& path);

}  // namespace teamsem::io
