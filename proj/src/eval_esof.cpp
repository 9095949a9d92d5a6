#include "teamsem/eval_esof.hpp"

#include <memory>
#include <unordered_map>

#include "kernel.hpp"
#include "search_util.hpp"

namespace teamsem {

using detail::Budget;
using detail::BudgetExceeded;
using detail::term_value;
using detail::Wide;

std::string witness_key(const std::string& fn, std::size_t node_index, const Assignment& s) {
  std::string key = fn + "#" + std::to_string(node_index) + "@";
  bool first = true;
  for (const auto& [x, a] : s) {
    if (!first) key += ",";
    first = false;
    key += x + "=" + std::to_string(a);
  }
  return key;
}

namespace {

std::size_t cell_index(int n, const VarList& args, const Assignment& s) {
  std::size_t idx = 0;
  for (const auto& x : args) {
    auto it = s.find(x);
    if (it == s.end()) throw DomainError("unassigned variable '" + x + "' in a numerical term");
    idx = idx * static_cast<std::size_t>(n) + static_cast<std::size_t>(it->second);
  }
  return idx;
}

std::unordered_map<const EsofFormula*, std::size_t> preorder(const EsofFormula& phi) {
  std::unordered_map<const EsofFormula*, std::size_t> out;
  std::vector<const EsofFormula*> stack{&phi};
  while (!stack.empty()) {
    const EsofFormula* f = stack.back();
    stack.pop_back();
    out.emplace(f, out.size());
    if (f->right) stack.push_back(f->right.get());
    if (f->left) stack.push_back(f->left.get());
  }
  return out;
}

bool literal_holds(const Structure& A, const EsofFormula& f, const Assignment& s) {
  switch (f.op) {
    case EsofOp::Eq: return term_value(A, f.args[0], s) == term_value(A, f.args[1], s);
    case EsofOp::Neq: return term_value(A, f.args[0], s) != term_value(A, f.args[1], s);
    default: {
      Values vals;
      for (const auto& t : f.args) vals.push_back(term_value(A, t, s));
      return A.holds(f.name, vals) == (f.op == EsofOp::Rel);
    }
  }
}

class Scoped {
 public:
  Scoped(Assignment& s, const std::string& x) : s_(s), x_(x) {
    auto it = s.find(x);
    if (it != s.end()) saved_ = it->second;
  }
  ~Scoped() {
    if (saved_) s_[x_] = *saved_;
    else s_.erase(x_);
  }

 private:
  Assignment& s_;
  std::string x_;
  std::optional<Element> saved_;
};

// ---- exact evaluation ----

using ExactScope = std::map<std::string, std::vector<const Distribution*>>;

Rational exact_term(const Structure& A, Assignment& s, const NumTerm& t, const ExactScope& scope) {
  switch (t.op) {
    case NumOp::Zero: return 0;
    case NumOp::One: return 1;
    case NumOp::Fn: {
      auto it = scope.find(t.name);
      if (it == scope.end() || it->second.empty())
        throw DomainError("function symbol '" + t.name + "' is not interpreted");
      const Distribution& d = *it->second.back();
      if (static_cast<std::size_t>(d.arity) != t.args.size())
        throw DomainError("function symbol '" + t.name + "' applied with the wrong arity");
      if (d.arity == 0) return 1;
      return d.table.at(cell_index(A.size(), t.args, s));
    }
    case NumOp::Mul: return exact_term(A, s, *t.left, scope) * exact_term(A, s, *t.right, scope);
    case NumOp::Sum: {
      std::vector<std::unique_ptr<Scoped>> guards;
      for (const auto& x : t.args) guards.push_back(std::make_unique<Scoped>(s, x));
      Rational total = 0;
      const std::size_t count = tuple_count(A.size(), static_cast<int>(t.args.size()));
      for (std::size_t i = 0; i < count; ++i) {
        Values tup = tuple_at(A.size(), static_cast<int>(t.args.size()), i);
        for (std::size_t k = 0; k < t.args.size(); ++k) s[t.args[k]] = tup[k];
        total += exact_term(A, s, *t.left, scope);
      }
      return total;
    }
    case NumOp::IllSorted: break;
  }
  throw DomainError("first-order variable '" + t.name + "' used as a numerical term");
}

ExactScope structure_scope(const Structure& A) {
  ExactScope scope;
  for (const auto& [name, d] : A.functions) scope[name].push_back(&d);
  return scope;
}

class Verifier {
 public:
  Verifier(const Structure& A, const EsofFormula& phi, const EsofWitnesses& w)
      : A_(A), index_(preorder(phi)), w_(w), scope_(structure_scope(A)) {}

  bool eval(const EsofFormula& f, Assignment& s) {
    switch (f.op) {
      case EsofOp::Eq:
      case EsofOp::Neq:
      case EsofOp::Rel:
      case EsofOp::NegRel: return literal_holds(A_, f, s);
      case EsofOp::NumEq:
      case EsofOp::NumNeq:
        return (exact_term(A_, s, *f.lhs, scope_) == exact_term(A_, s, *f.rhs, scope_)) ==
               (f.op == EsofOp::NumEq);
      case EsofOp::And: return eval(*f.left, s) && eval(*f.right, s);
      case EsofOp::Or: return eval(*f.left, s) || eval(*f.right, s);
      case EsofOp::Exists:
      case EsofOp::Forall: {
        const bool want = f.op == EsofOp::Exists;
        Scoped guard(s, f.name);
        for (Element a = 0; a < A_.size(); ++a) {
          s[f.name] = a;
          if (eval(*f.left, s) == want) return want;
        }
        return !want;
      }
      case EsofOp::ExistsFn: {
        auto it = w_.find(witness_key(f.name, index_.at(&f), s));
        if (it == w_.end()) return false;
        const Distribution& d = it->second;
        if (d.arity != f.arity || d.domain_size != A_.size()) return false;
        d.validate();
        scope_[f.name].push_back(&d);
        const bool ok = eval(*f.left, s);
        scope_[f.name].pop_back();
        return ok;
      }
    }
    return false;
  }

 private:
  const Structure& A_;
  std::unordered_map<const EsofFormula*, std::size_t> index_;
  const EsofWitnesses& w_;
  ExactScope scope_;
};

// ---- grid search ----

enum class Tri { False, True, Unknown };

Tri tri_not(Tri t) {
  return t == Tri::True ? Tri::False : t == Tri::False ? Tri::True : Tri::Unknown;
}

// Values are numerators over D^degree; unknown cells range over [0, remaining].
struct Interval {
  Wide lo = 0, hi = 0;
};

struct Slot {
  int arity = 0;
  std::vector<Wide> cells;  // -1 marks an unassigned cell
  Wide remaining = 0;
  std::size_t unknown = 0;
};

constexpr Wide kWideLimit = Wide(1) << 100;

Wide checked_mul(Wide a, Wide b) {
  if (a != 0 && b > kWideLimit / a) throw RefusedInput("numerical term exceeds the exact integer range");
  return a * b;
}

Wide checked_add(Wide a, Wide b) {
  if (a > kWideLimit - b) throw RefusedInput("numerical term exceeds the exact integer range");
  return a + b;
}

class Search {
 public:
  Search(const Structure& A, const EsofFormula& phi, const EsofOptions& opts, Wide D)
      : A_(A), opts_(opts), D_(D), budget_(opts.node_budget), index_(preorder(phi)) {
    for (const auto& [name, d] : A.functions) {
      auto slot = std::make_unique<Slot>();
      slot->arity = d.arity;
      for (const auto& v : d.table) {
        Rational scaled = v * Rational(mpz_class(static_cast<long>(D)));
        slot->cells.push_back(static_cast<Wide>(scaled.get_num().get_si()));
      }
      scope_[name].push_back(slot.get());
      owned_.push_back(std::move(slot));
    }
  }

  std::uint64_t nodes() const { return budget_.used(); }

  Tri eval(const EsofFormula& f, Assignment& s, EsofWitnesses* out) {
    switch (f.op) {
      case EsofOp::Eq:
      case EsofOp::Neq:
      case EsofOp::Rel:
      case EsofOp::NegRel: return literal_holds(A_, f, s) ? Tri::True : Tri::False;
      case EsofOp::NumEq:
      case EsofOp::NumNeq: {
        Tri eq = compare(f, s);
        return f.op == EsofOp::NumEq ? eq : tri_not(eq);
      }
      case EsofOp::And: {
        EsofWitnesses wl, wr;
        Tri l = eval(*f.left, s, out ? &wl : nullptr);
        if (l == Tri::False) return Tri::False;
        Tri r = eval(*f.right, s, out ? &wr : nullptr);
        if (r == Tri::False) return Tri::False;
        if (l == Tri::True && r == Tri::True) {
          if (out) {
            out->insert(wl.begin(), wl.end());
            out->insert(wr.begin(), wr.end());
          }
          return Tri::True;
        }
        return Tri::Unknown;
      }
      case EsofOp::Or: {
        Tri l = eval(*f.left, s, out);
        if (l == Tri::True) return Tri::True;
        Tri r = eval(*f.right, s, out);
        if (r == Tri::True) return Tri::True;
        return (l == Tri::False && r == Tri::False) ? Tri::False : Tri::Unknown;
      }
      case EsofOp::Exists:
      case EsofOp::Forall: return quantifier(f, s, out);
      case EsofOp::ExistsFn: return partial_ > 0 ? Tri::Unknown : block(f, s, out);
    }
    return Tri::Unknown;
  }

 private:
  Tri quantifier(const EsofFormula& f, Assignment& s, EsofWitnesses* out) {
    const bool exists = f.op == EsofOp::Exists;
    Scoped guard(s, f.name);
    EsofWitnesses collected;
    bool unknown = false;
    for (Element a = 0; a < A_.size(); ++a) {
      budget_.tick();
      s[f.name] = a;
      EsofWitnesses w;
      Tri t = eval(*f.left, s, out ? &w : nullptr);
      if (exists && t == Tri::True) {
        if (out) out->insert(w.begin(), w.end());
        return Tri::True;
      }
      if (!exists && t == Tri::False) return Tri::False;
      if (t == Tri::Unknown) unknown = true;
      if (!exists && out) collected.insert(w.begin(), w.end());
    }
    if (unknown) return Tri::Unknown;
    if (!exists && out) out->insert(collected.begin(), collected.end());
    return exists ? Tri::False : Tri::True;
  }

  int degree(const NumTerm& t) {
    switch (t.op) {
      case NumOp::Fn: return 1;
      case NumOp::Mul: return degree(*t.left) + degree(*t.right);
      case NumOp::Sum: return degree(*t.left);
      default: return 0;
    }
  }

  Wide power(int k) {
    Wide p = 1;
    for (int i = 0; i < k; ++i) p = checked_mul(p, D_);
    return p;
  }

  Tri compare(const EsofFormula& f, Assignment& s) {
    Interval a = term(*f.lhs, s), b = term(*f.rhs, s);
    const int da = degree(*f.lhs), db = degree(*f.rhs);
    if (da < db) {
      const Wide p = power(db - da);
      a = {checked_mul(a.lo, p), checked_mul(a.hi, p)};
    } else if (db < da) {
      const Wide p = power(da - db);
      b = {checked_mul(b.lo, p), checked_mul(b.hi, p)};
    }
    if (a.lo == a.hi && b.lo == b.hi) return a.lo == b.lo ? Tri::True : Tri::False;
    if (a.hi < b.lo || b.hi < a.lo) return Tri::False;
    return Tri::Unknown;
  }

  Interval term(const NumTerm& t, Assignment& s) {
    switch (t.op) {
      case NumOp::Zero: return {0, 0};
      case NumOp::One: return {1, 1};
      case NumOp::Fn: {
        auto it = scope_.find(t.name);
        if (it == scope_.end() || it->second.empty())
          throw DomainError("function symbol '" + t.name + "' is not interpreted");
        const Slot& slot = *it->second.back();
        if (static_cast<std::size_t>(slot.arity) != t.args.size())
          throw DomainError("function symbol '" + t.name + "' applied with the wrong arity");
        if (slot.arity == 0) return {D_, D_};
        const Wide v = slot.cells[cell_index(A_.size(), t.args, s)];
        if (v >= 0) return {v, v};
        if (slot.unknown == 1) return {slot.remaining, slot.remaining};
        return {0, slot.remaining};
      }
      case NumOp::Mul: {
        Interval a = term(*t.left, s), b = term(*t.right, s);
        return {checked_mul(a.lo, b.lo), checked_mul(a.hi, b.hi)};
      }
      case NumOp::Sum: {
        std::vector<std::unique_ptr<Scoped>> guards;
        for (const auto& x : t.args) guards.push_back(std::make_unique<Scoped>(s, x));
        Interval total;
        const int k = static_cast<int>(t.args.size());
        const std::size_t count = tuple_count(A_.size(), k);
        for (std::size_t i = 0; i < count; ++i) {
          Values tup = tuple_at(A_.size(), k, i);
          for (std::size_t j = 0; j < t.args.size(); ++j) s[t.args[j]] = tup[j];
          Interval v = term(*t.left, s);
          total = {checked_add(total.lo, v.lo), checked_add(total.hi, v.hi)};
        }
        return total;
      }
      case NumOp::IllSorted: break;
    }
    throw DomainError("first-order variable '" + t.name + "' used as a numerical term");
  }

  // A maximal run of function quantifiers is searched as one block of cells.
  Tri block(const EsofFormula& f, Assignment& s, EsofWitnesses* out) {
    std::vector<const EsofFormula*> quants;
    const EsofFormula* body = &f;
    while (body->op == EsofOp::ExistsFn) {
      quants.push_back(body);
      body = body->left.get();
    }
    std::vector<std::unique_ptr<Slot>> slots;
    std::vector<std::pair<Slot*, std::size_t>> order;
    std::size_t total_cells = 0;
    for (const auto* q : quants) {
      auto slot = std::make_unique<Slot>();
      slot->arity = q->arity;
      if (q->arity > 0) {
        const std::size_t n = tuple_count(A_.size(), q->arity);
        total_cells += n;
        if (total_cells > opts_.max_cells) throw RefusedInput("too many function cells in one quantifier block");
        slot->cells.assign(n, -1);
        slot->remaining = D_;
        slot->unknown = n;
        for (std::size_t i = 0; i < n; ++i) order.emplace_back(slot.get(), i);
      }
      scope_[q->name].push_back(slot.get());
      slots.push_back(std::move(slot));
    }

    EsofWitnesses inner;
    Tri result = Tri::Unknown;
    ++partial_;
    if (order.empty()) {
      --partial_;
      result = eval(*body, s, out ? &inner : nullptr);
      ++partial_;
    } else if (eval(*body, s, nullptr) == Tri::False) {
      result = Tri::False;
    } else if (dfs(*body, s, order, 0, out ? &inner : nullptr)) {
      result = Tri::True;
    }
    --partial_;

    if (result == Tri::True && out) {
      for (std::size_t i = 0; i < quants.size(); ++i) {
        std::vector<Rational> table;
        if (quants[i]->arity == 0) {
          table.push_back(1);
        } else {
          for (Wide c : slots[i]->cells) {
            Rational v(mpz_class(static_cast<long>(c)), mpz_class(static_cast<long>(D_)));
            v.canonicalize();
            table.push_back(v);
          }
        }
        (*out)[witness_key(quants[i]->name, index_.at(quants[i]), s)] =
            Distribution(quants[i]->arity, A_.size(), std::move(table));
      }
      out->insert(inner.begin(), inner.end());
    }
    for (const auto* q : quants) scope_[q->name].pop_back();
    return result;
  }

  bool dfs(const EsofFormula& body, Assignment& s, const std::vector<std::pair<Slot*, std::size_t>>& order,
           std::size_t k, EsofWitnesses* out) {
    budget_.tick();
    if (k == order.size()) {
      --partial_;
      EsofWitnesses w;
      Tri t = eval(body, s, out ? &w : nullptr);
      ++partial_;
      if (t != Tri::True) return false;
      if (out) *out = std::move(w);
      return true;
    }
    Slot& slot = *order[k].first;
    const std::size_t cell = order[k].second;
    // Dirac-first: the largest admissible value is tried first and the last
    // cell of each function is forced.
    const Wide hi = slot.remaining;
    const Wide lo = slot.unknown == 1 ? hi : 0;
    for (Wide v = hi; v >= lo; --v) {
      slot.cells[cell] = v;
      slot.remaining -= v;
      --slot.unknown;
      bool alive = k + 1 == order.size() || eval(body, s, nullptr) != Tri::False;
      bool found = alive && dfs(body, s, order, k + 1, out);
      ++slot.unknown;
      slot.remaining += v;
      slot.cells[cell] = -1;
      if (found) {
        slot.cells[cell] = v;
        slot.remaining -= v;
        --slot.unknown;
        return true;
      }
    }
    return false;
  }

  const Structure& A_;
  EsofOptions opts_;
  Wide D_;
  Budget budget_;
  std::unordered_map<const EsofFormula*, std::size_t> index_;
  std::map<std::string, std::vector<Slot*>> scope_;
  std::vector<std::unique_ptr<Slot>> owned_;
  int partial_ = 0;
};

void check_free(const EsofFormula& phi, const Assignment& s) {
  for (const auto& x : free_vars(phi))
    if (!s.count(x)) throw DomainError("free variable '" + x + "' is not assigned");
}

}  // namespace

Rational eval_term(const Structure& A, const Assignment& s, const NumTerm& t, const EsofWitnesses& extra) {
  ExactScope scope = structure_scope(A);
  for (const auto& [name, d] : extra) {
    d.validate();
    scope[name].push_back(&d);
  }
  Assignment local = s;
  return exact_term(A, local, t, scope);
}

EsofResult eval_esof(const Structure& A, const EsofFormula& phi, const Assignment& s, const EsofOptions& opts) {
  A.validate();
  if (A.size() > opts.max_domain) throw RefusedInput("domain larger than the configured maximum");
  if (opts.resolution < 1) throw DomainError("resolution must be positive");
  check_free(phi, s);

  mpz_class l = 1;
  for (const auto& [name, d] : A.functions)
    for (const auto& v : d.table) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.get_den_mpz_t());
  mpz_class D = l * opts.resolution;
  if (D > (1L << 24)) throw RefusedInput("grid denominator too large");

  EsofResult res;
  res.resolution = opts.resolution;
  Search search(A, phi, opts, static_cast<Wide>(D.get_si()));
  Assignment local = s;
  try {
    Tri t = search.eval(phi, local, &res.witnesses);
    res.kind = t == Tri::True ? VerdictKind::Satisfied : t == Tri::False ? VerdictKind::Refuted : VerdictKind::Unknown;
  } catch (const BudgetExceeded&) {
    res.kind = VerdictKind::Unknown;
  }
  if (res.kind != VerdictKind::Satisfied) res.witnesses.clear();
  res.nodes = search.nodes();
  return res;
}

bool verify_esof_certificate(const Structure& A, const EsofFormula& phi, const Assignment& s,
                             const EsofWitnesses& witnesses) {
  try {
    check_free(phi, s);
    Verifier v(A, phi, witnesses);
    Assignment local = s;
    return v.eval(phi, local);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace teamsem
