#include "teamsem/model.hpp"

#include <algorithm>
#include <numeric>

namespace teamsem {

namespace {

// Permutation taking positions of `given` to positions of sorted(given).
std::pair<VarList, std::vector<std::size_t>> sort_vars(const VarList& given) {
  std::vector<std::size_t> order(given.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return given[a] < given[b]; });
  VarList sorted;
  for (std::size_t i : order) {
    if (!sorted.empty() && sorted.back() == given[i])
      throw DomainError("duplicate variable '" + given[i] + "'");
    sorted.push_back(given[i]);
  }
  return {sorted, order};
}

void check_values(const Values& row, std::size_t width, int n) {
  if (row.size() != width) throw DomainError("row width does not match variable list");
  for (Element e : row)
    if (e < 0 || e >= n) throw DomainError("value outside the value domain");
}

std::size_t insert_position(const VarList& vars, const std::string& x) {
  return static_cast<std::size_t>(std::lower_bound(vars.begin(), vars.end(), x) - vars.begin());
}

void require_same_domains(const ProbabilisticTeam& Y, const ProbabilisticTeam& Z) {
  if (Y.vars() != Z.vars() || Y.domain_size() != Z.domain_size())
    throw DomainError("teams do not share variable and value domains");
}

}  // namespace

Domain Domain::range(int n) {
  Domain d;
  for (int i = 0; i < n; ++i) d.labels.push_back(std::to_string(i));
  return d;
}

std::optional<Element> Domain::find(std::string_view label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return static_cast<Element>(i);
  return std::nullopt;
}

std::size_t tuple_count(int domain_size, int n) {
  std::size_t c = 1;
  for (int i = 0; i < n; ++i) c *= static_cast<std::size_t>(domain_size);
  return c;
}

Values tuple_at(int domain_size, int n, std::size_t index) {
  Values v(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    v[static_cast<std::size_t>(i)] = static_cast<Element>(index % static_cast<std::size_t>(domain_size));
    index /= static_cast<std::size_t>(domain_size);
  }
  return v;
}

Distribution::Distribution(int arity_, int domain_size_, std::vector<Rational> table_)
    : arity(arity_), domain_size(domain_size_), table(std::move(table_)) {
  if (table.size() != tuple_count(domain_size, arity))
    throw DomainError("distribution table has the wrong number of cells");
}

Distribution Distribution::uniform(int arity, int domain_size) {
  std::size_t c = tuple_count(domain_size, arity);
  return Distribution(arity, domain_size, std::vector<Rational>(c, Rational(1, static_cast<unsigned long>(c))));
}

Distribution Distribution::dirac(int domain_size, const Values& at) {
  int arity = static_cast<int>(at.size());
  Distribution d(arity, domain_size, std::vector<Rational>(tuple_count(domain_size, arity), 0));
  d.table[d.index(at)] = 1;
  return d;
}

std::size_t Distribution::index(const Values& args) const {
  if (static_cast<int>(args.size()) != arity) throw DomainError("distribution arity mismatch");
  std::size_t i = 0;
  for (Element e : args) {
    if (e < 0 || e >= domain_size) throw DomainError("distribution argument outside domain");
    i = i * static_cast<std::size_t>(domain_size) + static_cast<std::size_t>(e);
  }
  return i;
}

Values Distribution::args_of(std::size_t i) const { return tuple_at(domain_size, arity, i); }

void Distribution::validate() const {
  if (table.size() != tuple_count(domain_size, arity))
    throw DomainError("distribution table has the wrong number of cells");
  Rational sum = 0;
  for (const auto& v : table) {
    if (v < 0) throw DomainError("negative probability");
    sum += v;
  }
  if (sum != 1) throw DomainError("distribution does not sum to 1 (sum " + to_string(sum) + ")");
}

// ---- ProbabilisticTeam ----

ProbabilisticTeam::ProbabilisticTeam(VarList vars, int domain_size,
                                     const std::vector<std::pair<Values, Rational>>& rows) {
  if (domain_size < 1) throw DomainError("value domain must be nonempty");
  auto [sorted, order] = sort_vars(vars);
  Rows merged;
  for (const auto& [row, w] : rows) {
    check_values(row, vars.size(), domain_size);
    if (w < 0) throw DomainError("negative weight");
    Values r(row.size());
    for (std::size_t i = 0; i < order.size(); ++i) r[i] = row[order[i]];
    merged[r] += w;
  }
  *this = from_sorted(std::move(sorted), domain_size, std::move(merged));
}

ProbabilisticTeam ProbabilisticTeam::from_sorted(VarList sorted_vars, int domain_size, Rows rows) {
  ProbabilisticTeam t;
  t.vars_ = std::move(sorted_vars);
  t.domain_size_ = domain_size;
  Rational sum = 0;
  for (auto it = rows.begin(); it != rows.end();) {
    if (it->second < 0) throw DomainError("negative weight");
    if (it->second == 0) {
      it = rows.erase(it);
      continue;
    }
    sum += it->second;
    ++it;
  }
  if (!rows.empty() && sum != 1)
    throw DomainError("team weights sum to " + to_string(sum) + ", not 1");
  t.rows_ = std::move(rows);
  return t;
}

ProbabilisticTeam ProbabilisticTeam::unit(int domain_size) {
  return from_sorted({}, domain_size, Rows{{Values{}, Rational(1)}});
}

ProbabilisticTeam ProbabilisticTeam::empty_over(VarList vars, int domain_size) {
  auto [sorted, order] = sort_vars(vars);
  return from_sorted(std::move(sorted), domain_size, {});
}

bool ProbabilisticTeam::has_var(const std::string& v) const {
  return std::binary_search(vars_.begin(), vars_.end(), v);
}

std::size_t ProbabilisticTeam::index_of(const std::string& v) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
  if (it == vars_.end() || *it != v) throw DomainError("unknown variable '" + v + "'");
  return static_cast<std::size_t>(it - vars_.begin());
}

Rational ProbabilisticTeam::weight(const Values& row) const {
  auto it = rows_.find(row);
  return it == rows_.end() ? Rational(0) : it->second;
}

Assignment ProbabilisticTeam::assignment(const Values& row) const {
  Assignment a;
  for (std::size_t i = 0; i < vars_.size(); ++i) a[vars_[i]] = row.at(i);
  return a;
}

mpz_class ProbabilisticTeam::denominator_lcm() const {
  mpz_class l = 1;
  for (const auto& [row, w] : rows_) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), w.get_den_mpz_t());
  return l;
}

// ---- Multiteam ----

Multiteam::Multiteam(VarList vars, int domain_size,
                     const std::vector<std::pair<Values, std::uint64_t>>& rows) {
  if (domain_size < 1) throw DomainError("value domain must be nonempty");
  auto [sorted, order] = sort_vars(vars);
  Rows merged;
  for (const auto& [row, m] : rows) {
    check_values(row, vars.size(), domain_size);
    Values r(row.size());
    for (std::size_t i = 0; i < order.size(); ++i) r[i] = row[order[i]];
    merged[r] += m;
  }
  *this = from_sorted(std::move(sorted), domain_size, std::move(merged));
}

Multiteam Multiteam::from_sorted(VarList sorted_vars, int domain_size, Rows rows) {
  Multiteam t;
  t.vars_ = std::move(sorted_vars);
  t.domain_size_ = domain_size;
  std::erase_if(rows, [](const auto& kv) { return kv.second == 0; });
  t.rows_ = std::move(rows);
  return t;
}

std::uint64_t Multiteam::cardinality() const {
  std::uint64_t c = 0;
  for (const auto& [row, m] : rows_) c += m;
  return c;
}

bool Multiteam::has_var(const std::string& v) const {
  return std::binary_search(vars_.begin(), vars_.end(), v);
}

std::size_t Multiteam::index_of(const std::string& v) const {
  auto it = std::lower_bound(vars_.begin(), vars_.end(), v);
  if (it == vars_.end() || *it != v) throw DomainError("unknown variable '" + v + "'");
  return static_cast<std::size_t>(it - vars_.begin());
}

std::uint64_t Multiteam::multiplicity(const Values& row) const {
  auto it = rows_.find(row);
  return it == rows_.end() ? 0 : it->second;
}

// ---- Structure ----

bool Structure::holds(const std::string& rel, const Values& args) const {
  auto it = relations.find(rel);
  if (it == relations.end()) throw DomainError("uninterpreted relation '" + rel + "'");
  if (static_cast<int>(args.size()) != it->second.arity)
    throw DomainError("relation '" + rel + "' used with the wrong arity");
  return it->second.tuples.count(args) > 0;
}

void Structure::validate() const {
  if (domain.size() < 1) throw DomainError("structure domain must be nonempty");
  for (const auto& [name, r] : relations)
    for (const auto& t : r.tuples) {
      if (static_cast<int>(t.size()) != r.arity) throw DomainError("relation '" + name + "' has a tuple of the wrong arity");
      for (Element e : t)
        if (e < 0 || e >= domain.size()) throw DomainError("relation '" + name + "' mentions an element outside the domain");
    }
  for (const auto& [name, f] : functions) {
    if (f.domain_size != domain.size()) throw DomainError("function '" + name + "' is over a different domain");
    f.validate();
  }
}

// ---- operations ----

Rational marginal_weight(const ProbabilisticTeam& X, const VarList& vars, const Values& vals) {
  if (vars.size() != vals.size()) throw DomainError("variable and value tuples differ in length");
  std::vector<std::size_t> idx;
  for (const auto& v : vars) idx.push_back(X.index_of(v));
  return marginal_weight_if(X, [&](const Values& row) {
    for (std::size_t i = 0; i < idx.size(); ++i)
      if (row[idx[i]] != vals[i]) return false;
    return true;
  });
}

ProbabilisticTeam scaled_union(const ProbabilisticTeam& Y, const ProbabilisticTeam& Z, const Rational& k) {
  if (k < 0 || k > 1) throw DomainError("scaling factor outside [0,1]");
  const bool y_bare = Y.empty() && Y.vars().empty();
  const bool z_bare = Z.empty() && Z.vars().empty();
  if (!y_bare && !z_bare) require_same_domains(Y, Z);
  const auto& shape = y_bare ? Z : Y;
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, w] : Y.rows()) rows[row] += k * w;
  for (const auto& [row, w] : Z.rows()) rows[row] += (1 - k) * w;
  return ProbabilisticTeam::from_sorted(shape.vars(), shape.domain_size(), std::move(rows));
}

ProbabilisticTeam duplicate(const ProbabilisticTeam& X, const std::string& x) {
  const int n = X.domain_size();
  std::map<Values, std::vector<Rational>> F;
  std::vector<Rational> uniform(static_cast<std::size_t>(n), Rational(1, static_cast<unsigned long>(n)));
  for (const auto& [row, w] : X.rows()) F.emplace(row, uniform);
  return extend(X, F, x);
}

ProbabilisticTeam extend(const ProbabilisticTeam& X,
                         const std::map<Values, std::vector<Rational>>& F,
                         const std::string& x) {
  const int n = X.domain_size();
  const bool fresh = !X.has_var(x);
  VarList vars = X.vars();
  std::size_t pos = insert_position(vars, x);
  if (fresh) vars.insert(vars.begin() + static_cast<std::ptrdiff_t>(pos), x);
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, w] : X.rows()) {
    auto it = F.find(row);
    if (it == F.end()) throw DomainError("choice function undefined on a row");
    const auto& d = it->second;
    if (static_cast<int>(d.size()) != n) throw DomainError("choice distribution has the wrong size");
    Rational sum = 0;
    for (const auto& p : d) {
      if (p < 0) throw DomainError("negative probability in choice distribution");
      sum += p;
    }
    if (sum != 1) throw DomainError("choice distribution does not sum to 1");
    for (int a = 0; a < n; ++a) {
      if (d[static_cast<std::size_t>(a)] == 0) continue;
      Values r = row;
      if (fresh) r.insert(r.begin() + static_cast<std::ptrdiff_t>(pos), a);
      else r[pos] = a;
      rows[r] += w * d[static_cast<std::size_t>(a)];
    }
  }
  return ProbabilisticTeam::from_sorted(std::move(vars), n, std::move(rows));
}

ProbabilisticTeam extend_constant(const ProbabilisticTeam& X, const Distribution& d, const VarList& xs) {
  if (static_cast<int>(xs.size()) != d.arity || d.domain_size != X.domain_size())
    throw DomainError("constant distribution does not fit the variable tuple");
  d.validate();
  for (const auto& v : xs)
    if (X.has_var(v)) throw DomainError("variable '" + v + "' is not fresh");
  VarList all = X.vars();
  all.insert(all.end(), xs.begin(), xs.end());
  auto [sorted, order] = sort_vars(all);
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, w] : X.rows())
    for (std::size_t c = 0; c < d.cells(); ++c) {
      if (d.table[c] == 0) continue;
      Values joined = row;
      Values args = d.args_of(c);
      joined.insert(joined.end(), args.begin(), args.end());
      Values r(joined.size());
      for (std::size_t i = 0; i < order.size(); ++i) r[i] = joined[order[i]];
      rows[r] += w * d.table[c];
    }
  return ProbabilisticTeam::from_sorted(std::move(sorted), X.domain_size(), std::move(rows));
}

ProbabilisticTeam restrict(const ProbabilisticTeam& X, const std::set<std::string>& V) {
  VarList kept;
  std::vector<std::size_t> idx;
  for (const auto& v : V) {
    idx.push_back(X.index_of(v));
    kept.push_back(v);
  }
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, w] : X.rows()) {
    Values r;
    for (std::size_t i : idx) r.push_back(row[i]);
    rows[r] += w;
  }
  return ProbabilisticTeam::from_sorted(std::move(kept), X.domain_size(), std::move(rows));
}

ProbabilisticTeam prob_of_multiteam(const Multiteam& mX) {
  std::uint64_t total = mX.cardinality();
  ProbabilisticTeam::Rows rows;
  for (const auto& [row, m] : mX.rows())
    rows[row] = Rational(mpz_class(std::to_string(m)), mpz_class(std::to_string(total)));
  for (auto& [row, w] : rows) w.canonicalize();
  return ProbabilisticTeam::from_sorted(mX.vars(), mX.domain_size(), std::move(rows));
}

Multiteam disjoint_union(const Multiteam& mY, const Multiteam& mZ) {
  const bool y_bare = mY.empty() && mY.vars().empty();
  const bool z_bare = mZ.empty() && mZ.vars().empty();
  if (!y_bare && !z_bare && (mY.vars() != mZ.vars() || mY.domain_size() != mZ.domain_size()))
    throw DomainError("multiteams do not share variable and value domains");
  const auto& shape = y_bare ? mZ : mY;
  Multiteam::Rows rows = mY.rows();
  for (const auto& [row, m] : mZ.rows()) rows[row] += m;
  return Multiteam::from_sorted(shape.vars(), shape.domain_size(), std::move(rows));
}

std::vector<std::pair<Values, std::uint64_t>> canonical_set(const Multiteam& mX) {
  std::vector<std::pair<Values, std::uint64_t>> out;
  for (const auto& [row, m] : mX.rows())
    for (std::uint64_t i = 1; i <= m; ++i) out.emplace_back(row, i);
  return out;
}

Multiteam mduplicate(const Multiteam& mX, const std::string& x) {
  const bool fresh = !mX.has_var(x);
  VarList vars = mX.vars();
  std::size_t pos = insert_position(vars, x);
  if (fresh) vars.insert(vars.begin() + static_cast<std::ptrdiff_t>(pos), x);
  Multiteam::Rows rows;
  for (const auto& [row, m] : mX.rows())
    for (int a = 0; a < mX.domain_size(); ++a) {
      Values r = row;
      if (fresh) r.insert(r.begin() + static_cast<std::ptrdiff_t>(pos), a);
      else r[pos] = a;
      rows[r] += m;
    }
  return Multiteam::from_sorted(std::move(vars), mX.domain_size(), std::move(rows));
}

Multiteam mextend(const Multiteam& mX,
                  const std::map<std::pair<Values, std::uint64_t>, std::vector<Element>>& F,
                  const std::string& x) {
  const bool fresh = !mX.has_var(x);
  VarList vars = mX.vars();
  std::size_t pos = insert_position(vars, x);
  if (fresh) vars.insert(vars.begin() + static_cast<std::ptrdiff_t>(pos), x);
  Multiteam::Rows rows;
  for (const auto& copy : canonical_set(mX)) {
    auto it = F.find(copy);
    if (it == F.end()) throw DomainError("choice function undefined on a canonical copy");
    std::set<Element> chosen(it->second.begin(), it->second.end());
    if (chosen.empty()) throw DomainError("choice function picks the empty set");
    for (Element b : chosen) {
      if (b < 0 || b >= mX.domain_size()) throw DomainError("choice outside the value domain");
      Values r = copy.first;
      if (fresh) r.insert(r.begin() + static_cast<std::ptrdiff_t>(pos), b);
      else r[pos] = b;
      rows[r] += 1;
    }
  }
  return Multiteam::from_sorted(std::move(vars), mX.domain_size(), std::move(rows));
}

}  // namespace teamsem
