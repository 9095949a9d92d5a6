#include "teamsem/generators.hpp"

#include <algorithm>
#include <set>

namespace teamsem {

void ExactCoverInstance::validate() const {
  std::set<std::string> elems;
  for (const auto& a : universe) {
    if (a == "0" || (a.size() > 1 && a[0] == 'S' && std::all_of(a.begin() + 1, a.end(), ::isdigit)))
      throw DomainError("universe label '" + a + "' is reserved by the encoding");
    if (!elems.insert(a).second) throw DomainError("universe element '" + a + "' repeats");
  }
  if (elems.empty()) throw DomainError("empty universe");
  for (std::size_t j = 0; j < sets.size(); ++j) {
    if (sets[j].empty()) throw DomainError("set " + std::to_string(j + 1) + " is empty");
    std::set<std::string> seen;
    for (const auto& a : sets[j]) {
      if (!elems.count(a)) throw DomainError("set " + std::to_string(j + 1) + " mentions '" + a + "' outside the universe");
      if (!seen.insert(a).second) throw DomainError("set " + std::to_string(j + 1) + " lists '" + a + "' twice");
    }
  }
}

FormulaPtr exact_cover_formula() {
  return parse_formula("(or (!= set 0) (and (approx (element) (left)) (approx (set right) (set left))))");
}

ExactCoverEncoding gen_exact_cover(const ExactCoverInstance& inst) {
  inst.validate();
  ExactCoverEncoding enc;
  enc.domain.labels.push_back("0");
  for (const auto& a : inst.universe) enc.domain.labels.push_back(a);
  enc.first_set = enc.domain.size();
  for (std::size_t j = 0; j < inst.sets.size(); ++j) enc.domain.labels.push_back("S" + std::to_string(j + 1));

  auto id = [&](const std::string& l) { return *enc.domain.find(l); };
  const Element zero = 0;
  // Columns in the order element, left, right, set.
  std::vector<std::pair<Values, std::uint64_t>> rows;
  for (std::size_t j = 0; j < inst.sets.size(); ++j) {
    const auto& s = inst.sets[j];
    const Element set = id("S" + std::to_string(j + 1));
    for (std::size_t i = 0; i < s.size(); ++i)
      rows.push_back({{zero, id(s[i]), id(s[(i + 1) % s.size()]), set}, 1});
  }
  for (const auto& a : inst.universe) rows.push_back({{id(a), zero, zero, zero}, 1});
  enc.team = Multiteam({"element", "left", "right", "set"}, enc.domain.size(), rows);
  enc.phi = exact_cover_formula();
  return enc;
}

std::vector<std::size_t> cover_from_certificate(const ExactCoverEncoding& enc, const MultiCertificate& cert) {
  if (cert.kind != MultiCertificate::Kind::Or) throw DomainError("certificate root is not a disjunction");
  const VarList& vars = cert.vars.empty() ? enc.team.vars() : cert.vars;
  const auto pos = std::find(vars.begin(), vars.end(), "set");
  if (pos == vars.end()) throw DomainError("certificate does not range over 'set'");
  const std::size_t set_col = pos - vars.begin();

  std::vector<int> side(enc.domain.size(), -1);
  for (const auto& [row, m] : enc.team.rows()) {
    const Element s = row[set_col];
    if (s == 0) continue;
    auto it = cert.left.find(row);
    const int right = (it == cert.left.end() || it->second == 0) ? 1 : 0;
    if (side[s] >= 0 && side[s] != right)
      throw DomainError("certificate splits the rows of " + enc.domain.label(s));
    side[s] = right;
  }
  std::vector<std::size_t> cover;
  for (Element s = enc.first_set; s < enc.domain.size(); ++s)
    if (side[s] == 1) cover.push_back(s - enc.first_set);
  return cover;
}

ExactCoverInstance sample_cover_instance() {
  return {{"1", "2", "3", "4"}, {{"1", "2", "3"}, {"2"}, {"1", "3", "4"}}};
}

ExactCoverInstance triangle_cover_instance() {
  return {{"1", "2", "3"}, {{"1", "2"}, {"2", "3"}, {"3", "1"}}};
}

void BayesSpec::validate() const {
  const int n = domain.size();
  if (n == 0) throw DomainError("empty domain");
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (!index.emplace(variables[i].name, i).second) throw DomainError("variable '" + variables[i].name + "' repeats");

  // Kahn's algorithm for acyclicity.
  std::vector<int> indegree(variables.size(), 0);
  std::vector<std::vector<std::size_t>> children(variables.size());
  for (std::size_t i = 0; i < variables.size(); ++i)
    for (const auto& p : variables[i].parents) {
      auto it = index.find(p);
      if (it == index.end()) throw DomainError("parent '" + p + "' of '" + variables[i].name + "' is not a variable");
      children[it->second].push_back(i);
      ++indegree[i];
    }
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < variables.size(); ++i)
    if (indegree[i] == 0) queue.push_back(i);
  for (std::size_t k = 0; k < queue.size(); ++k)
    for (auto c : children[queue[k]])
      if (--indegree[c] == 0) queue.push_back(c);
  if (queue.size() != variables.size()) throw DomainError("parent relation is cyclic");

  for (const auto& v : variables) {
    const std::size_t combos = tuple_count(n, static_cast<int>(v.parents.size()));
    if (v.table.size() != combos)
      throw DomainError("table of '" + v.name + "' has " + std::to_string(v.table.size()) + " rows, expected " +
                        std::to_string(combos));
    for (const auto& [given, probs] : v.table) {
      if (given.size() != v.parents.size()) throw DomainError("table row of '" + v.name + "' has wrong parent count");
      for (const auto& l : given)
        if (!domain.find(l)) throw DomainError("table row of '" + v.name + "' mentions unknown value '" + l + "'");
      if (static_cast<int>(probs.size()) != n) throw DomainError("table row of '" + v.name + "' has wrong length");
      Rational sum = 0;
      for (const auto& p : probs) {
        if (p < 0) throw DomainError("negative probability in table of '" + v.name + "'");
        sum += p;
      }
      if (sum != 1) throw DomainError("table row of '" + v.name + "' sums to " + to_string(sum));
    }
  }
}

ProbabilisticTeam gen_bayes_joint(const BayesSpec& spec) {
  spec.validate();
  const int n = spec.domain.size();
  const int k = static_cast<int>(spec.variables.size());
  VarList vars;
  for (const auto& v : spec.variables) vars.push_back(v.name);

  std::vector<std::vector<std::size_t>> parent_pos(k);
  for (int i = 0; i < k; ++i)
    for (const auto& p : spec.variables[i].parents)
      parent_pos[i].push_back(std::find(vars.begin(), vars.end(), p) - vars.begin());

  std::vector<std::pair<Values, Rational>> rows;
  const std::size_t total = tuple_count(n, k);
  for (std::size_t t = 0; t < total; ++t) {
    const Values row = tuple_at(n, k, t);
    Rational w = 1;
    for (int i = 0; i < k && w != 0; ++i) {
      std::vector<std::string> given;
      for (auto p : parent_pos[i]) given.push_back(spec.domain.label(row[p]));
      w *= spec.variables[i].table.at(given)[row[i]];
    }
    rows.emplace_back(row, w);
  }
  return ProbabilisticTeam(vars, n, rows);
}

BayesSpec burglary_bayes_spec() {
  auto r = [](const char* s) { return parse_rational(s); };
  auto bern = [&](const char* p) { return std::vector<Rational>{r(p), 1 - r(p)}; };
  BayesSpec spec;
  spec.domain.labels = {"T", "F"};
  spec.variables.push_back({"thief", {}, {{{}, bern("1/10")}}});
  spec.variables.push_back({"cat", {"thief"}, {{{"T"}, bern("1/10")}, {{"F"}, bern("6/10")}}});
  spec.variables.push_back({"guard",
                            {"thief", "cat"},
                            {{{"T", "T"}, bern("8/10")}, {{"T", "F"}, bern("7/10")},
                             {{"F", "T"}, bern("0")}, {{"F", "F"}, bern("0")}}});
  spec.variables.push_back({"alarm",
                            {"thief", "cat"},
                            {{{"T", "T"}, bern("9/10")}, {{"T", "F"}, bern("8/10")},
                             {{"F", "T"}, bern("1/10")}, {{"F", "F"}, bern("0")}}});
  return spec;
}

}  // namespace teamsem
