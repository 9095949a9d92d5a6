#include "teamsem/io.hpp"

#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

namespace teamsem::io {

namespace {

std::string label_of(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  throw DomainError("domain labels must be strings or integers, got " + j.dump());
}

Element element_of(const Domain& d, const Json& j) {
  const std::string l = label_of(j);
  auto e = d.find(l);
  if (!e) throw DomainError("'" + l + "' is not an element of the domain");
  return *e;
}

Values values_of(const Domain& d, const Json& j) {
  Values out;
  for (const auto& v : j) out.push_back(element_of(d, v));
  return out;
}

Json labels(const Domain& d, const Values& vs) {
  Json out = Json::array();
  for (Element e : vs) out.push_back(d.label(e));
  return out;
}

Rational rational_of(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(mpz_class(j.get<long>()));
  throw DomainError("probabilities must be written as \"p/q\" strings, got " + j.dump());
}

VarList vars_of(const Json& j) {
  VarList out;
  for (const auto& v : j) out.push_back(v.get<std::string>());
  return out;
}

template <class F>
auto guarded(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw DomainError(std::string("malformed JSON: ") + e.what());
  }
}

const Domain& pick_domain(const Json& j, Domain& domain, const Domain* fallback) {
  if (j.contains("domain")) {
    domain = domain_from_json(j.at("domain"));
  } else if (fallback) {
    domain = *fallback;
  } else {
    throw DomainError("team file has no domain and none was supplied");
  }
  return domain;
}

const char* kind_name(Certificate::Kind k) {
  switch (k) {
    case Certificate::Kind::Leaf: return "leaf";
    case Certificate::Kind::And: return "and";
    case Certificate::Kind::Or: return "or";
    case Certificate::Kind::Exists: return "exists";
    case Certificate::Kind::Forall: return "forall";
  }
  return "leaf";
}

Certificate::Kind kind_of(const std::string& s) {
  if (s == "leaf") return Certificate::Kind::Leaf;
  if (s == "and") return Certificate::Kind::And;
  if (s == "or") return Certificate::Kind::Or;
  if (s == "exists") return Certificate::Kind::Exists;
  if (s == "forall") return Certificate::Kind::Forall;
  throw DomainError("unknown certificate node kind '" + s + "'");
}

// Both certificate kinds share the node-kind enumerators by name.
MultiCertificate::Kind multi_kind(Certificate::Kind k) { return static_cast<MultiCertificate::Kind>(static_cast<int>(k)); }
Certificate::Kind plain_kind(MultiCertificate::Kind k) { return static_cast<Certificate::Kind>(static_cast<int>(k)); }

}  // namespace

Domain domain_from_json(const Json& j) {
  return guarded([&] {
    Domain d;
    for (const auto& l : j) d.labels.push_back(label_of(l));
    if (d.labels.empty()) throw DomainError("domain must be nonempty");
    std::set<std::string> seen(d.labels.begin(), d.labels.end());
    if (seen.size() != d.labels.size()) throw DomainError("domain labels repeat");
    return d;
  });
}

Json to_json(const Domain& d) { return Json(d.labels); }

ProbabilisticTeam team_from_json(const Json& j, Domain& domain, const Domain* fallback) {
  return guarded([&] {
    const Domain& d = pick_domain(j, domain, fallback);
    std::vector<std::pair<Values, Rational>> rows;
    for (const auto& r : j.at("rows")) rows.emplace_back(values_of(d, r.at("values")), rational_of(r.at("weight")));
    return ProbabilisticTeam(vars_of(j.at("variables")), d.size(), rows);
  });
}

Json to_json(const ProbabilisticTeam& X, const Domain& d) {
  Json rows = Json::array();
  for (const auto& [row, w] : X.rows()) rows.push_back({{"values", labels(d, row)}, {"weight", to_string(w)}});
  return {{"variables", X.vars()}, {"domain", to_json(d)}, {"rows", rows}};
}

Multiteam multiteam_from_json(const Json& j, Domain& domain, const Domain* fallback) {
  return guarded([&] {
    const Domain& d = pick_domain(j, domain, fallback);
    std::vector<std::pair<Values, std::uint64_t>> rows;
    for (const auto& r : j.at("rows")) {
      const auto m = r.at("mult").get<long long>();
      if (m < 0) throw DomainError("multiplicities must be nonnegative");
      rows.emplace_back(values_of(d, r.at("values")), static_cast<std::uint64_t>(m));
    }
    return Multiteam(vars_of(j.at("variables")), d.size(), rows);
  });
}

Json to_json(const Multiteam& mX, const Domain& d) {
  Json rows = Json::array();
  for (const auto& [row, m] : mX.rows()) rows.push_back({{"values", labels(d, row)}, {"mult", m}});
  return {{"variables", mX.vars()}, {"domain", to_json(d)}, {"rows", rows}};
}

Distribution distribution_from_json(const Json& j, const Domain& d) {
  return guarded([&] {
    const int arity = j.at("arity").get<int>();
    if (arity < 0) throw DomainError("negative arity");
    Distribution f(arity, d.size(), std::vector<Rational>(tuple_count(d.size(), arity), 0));
    for (const auto& cell : j.at("table")) {
      const Values args = values_of(d, cell.at("args"));
      if (static_cast<int>(args.size()) != arity) throw DomainError("table entry with wrong arity");
      f.table[f.index(args)] = rational_of(cell.at("value"));
    }
    f.validate();
    return f;
  });
}

Json to_json(const Distribution& f, const Domain& d) {
  Json table = Json::array();
  for (std::size_t i = 0; i < f.cells(); ++i)
    if (f.table[i] != 0) table.push_back({{"args", labels(d, f.args_of(i))}, {"value", to_string(f.table[i])}});
  return {{"arity", f.arity}, {"table", table}};
}

Structure structure_from_json(const Json& j) {
  return guarded([&] {
    Structure A;
    A.domain = domain_from_json(j.at("domain"));
    if (j.contains("relations")) {
      for (const auto& [name, spec] : j.at("relations").items()) {
        Relation r;
        const Json& tuples = spec.is_object() ? spec.at("tuples") : spec;
        r.arity = spec.is_object() ? spec.at("arity").get<int>() : -1;
        for (const auto& t : tuples) {
          Values v = values_of(A.domain, t);
          if (r.arity < 0) r.arity = static_cast<int>(v.size());
          if (static_cast<int>(v.size()) != r.arity) throw DomainError("relation '" + name + "' has mixed arities");
          r.tuples.insert(std::move(v));
        }
        if (r.arity < 0) throw DomainError("relation '" + name + "' is empty; give {\"arity\":k,\"tuples\":[]}");
        A.relations.emplace(name, std::move(r));
      }
    }
    if (j.contains("functions"))
      for (const auto& [name, spec] : j.at("functions").items())
        A.functions.emplace(name, distribution_from_json(spec, A.domain));
    A.validate();
    return A;
  });
}

Json to_json(const Structure& A) {
  Json rels = Json::object(), fns = Json::object();
  for (const auto& [name, r] : A.relations) {
    Json tuples = Json::array();
    for (const auto& t : r.tuples) tuples.push_back(labels(A.domain, t));
    rels[name] = {{"arity", r.arity}, {"tuples", tuples}};
  }
  for (const auto& [name, f] : A.functions) fns[name] = to_json(f, A.domain);
  return {{"domain", to_json(A.domain)}, {"relations", rels}, {"functions", fns}};
}

Json to_json(const Certificate& c, const Domain& d) {
  Json out = {{"kind", kind_name(c.kind)}};
  if (!c.vars.empty()) out["vars"] = c.vars;
  if (c.kind == Certificate::Kind::Or) {
    Json alloc = Json::array();
    for (const auto& [row, w] : c.allocation) alloc.push_back({{"values", labels(d, row)}, {"weight", to_string(w)}});
    out["allocation"] = alloc;
  }
  if (c.kind == Certificate::Kind::Exists) {
    Json choice = Json::array();
    for (const auto& [row, dist] : c.choice) {
      Json ps = Json::array();
      for (const auto& p : dist) ps.push_back(to_string(p));
      choice.push_back({{"values", labels(d, row)}, {"dist", ps}});
    }
    out["choice"] = choice;
  }
  if (!c.children.empty()) {
    out["children"] = Json::array();
    for (const auto& ch : c.children) out["children"].push_back(to_json(ch, d));
  }
  return out;
}

Certificate certificate_from_json(const Json& j, const Domain& d) {
  return guarded([&] {
    Certificate c;
    c.kind = kind_of(j.at("kind").get<std::string>());
    if (j.contains("vars")) c.vars = vars_of(j.at("vars"));
    if (j.contains("allocation"))
      for (const auto& e : j.at("allocation")) c.allocation[values_of(d, e.at("values"))] = rational_of(e.at("weight"));
    if (j.contains("choice"))
      for (const auto& e : j.at("choice")) {
        std::vector<Rational> dist;
        for (const auto& p : e.at("dist")) dist.push_back(rational_of(p));
        c.choice[values_of(d, e.at("values"))] = std::move(dist);
      }
    if (j.contains("children"))
      for (const auto& ch : j.at("children")) c.children.push_back(certificate_from_json(ch, d));
    return c;
  });
}

Json to_json(const MultiCertificate& c, const Domain& d) {
  Json out = {{"kind", kind_name(plain_kind(c.kind))}};
  if (!c.vars.empty()) out["vars"] = c.vars;
  if (c.kind == MultiCertificate::Kind::Or) {
    Json left = Json::array();
    for (const auto& [row, n] : c.left) left.push_back({{"values", labels(d, row)}, {"count", n}});
    out["left"] = left;
  }
  if (c.kind == MultiCertificate::Kind::Exists) {
    Json choice = Json::array();
    for (const auto& [key, set] : c.choice)
      choice.push_back({{"values", labels(d, key.first)}, {"copy", key.second}, {"set", labels(d, set)}});
    out["choice"] = choice;
  }
  if (!c.children.empty()) {
    out["children"] = Json::array();
    for (const auto& ch : c.children) out["children"].push_back(to_json(ch, d));
  }
  return out;
}

MultiCertificate multi_certificate_from_json(const Json& j, const Domain& d) {
  return guarded([&] {
    MultiCertificate c;
    c.kind = multi_kind(kind_of(j.at("kind").get<std::string>()));
    if (j.contains("vars")) c.vars = vars_of(j.at("vars"));
    if (j.contains("left"))
      for (const auto& e : j.at("left")) c.left[values_of(d, e.at("values"))] = e.at("count").get<std::uint64_t>();
    if (j.contains("choice"))
      for (const auto& e : j.at("choice"))
        c.choice[{values_of(d, e.at("values")), e.at("copy").get<std::uint64_t>()}] = values_of(d, e.at("set"));
    if (j.contains("children"))
      for (const auto& ch : j.at("children")) c.children.push_back(multi_certificate_from_json(ch, d));
    return c;
  });
}

Json to_json(const EsofWitnesses& w, const Domain& d) {
  Json out = Json::object();
  for (const auto& [key, f] : w) out[key] = to_json(f, d);
  return out;
}

EsofWitnesses witnesses_from_json(const Json& j, const Domain& d) {
  return guarded([&] {
    EsofWitnesses w;
    for (const auto& [key, spec] : j.items()) w.emplace(key, distribution_from_json(spec, d));
    return w;
  });
}

ExactCoverInstance exact_cover_from_json(const Json& j) {
  return guarded([&] {
    ExactCoverInstance inst;
    for (const auto& a : j.at("universe")) inst.universe.push_back(label_of(a));
    for (const auto& s : j.at("sets")) {
      inst.sets.emplace_back();
      for (const auto& a : s) inst.sets.back().push_back(label_of(a));
    }
    inst.validate();
    return inst;
  });
}

Json to_json(const ExactCoverInstance& inst) { return {{"universe", inst.universe}, {"sets", inst.sets}}; }

BayesSpec bayes_spec_from_json(const Json& j) {
  return guarded([&] {
    BayesSpec spec;
    spec.domain = domain_from_json(j.at("domain"));
    for (const auto& v : j.at("variables")) {
      BayesVariable var;
      var.name = v.at("name").get<std::string>();
      if (v.contains("parents")) var.parents = vars_of(v.at("parents"));
      for (const auto& row : v.at("table")) {
        std::vector<std::string> given;
        if (row.contains("given"))
          for (const auto& l : row.at("given")) given.push_back(label_of(l));
        std::vector<Rational> probs;
        for (const auto& p : row.at("probs")) probs.push_back(rational_of(p));
        if (!var.table.emplace(given, probs).second) throw DomainError("table of '" + var.name + "' repeats a row");
      }
      spec.variables.push_back(std::move(var));
    }
    spec.validate();
    return spec;
  });
}

std::string read_text(const std::string& path) {
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace teamsem::io
