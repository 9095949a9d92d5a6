#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "search_util.hpp"

namespace teamsem::detail {

/// Integer feasibility over bounded variables with linear equalities.
/// Solutions are visited depth first, variable 0 first, each variable from
/// its upper bound down; bounds propagation prunes dead branches.
class LinearSystem {
 public:
  using Term = std::pair<std::size_t, std::int64_t>;

  std::size_t add_var(std::int64_t lo, std::int64_t hi);
  /// sum(coef * var) == rhs; duplicate variables are merged.
  void add_eq(std::vector<Term> terms, std::int64_t rhs);
  std::size_t vars() const { return lo_.size(); }

  /// Calls visit on each solution until it returns true. Returns whether
  /// visit accepted a solution.
  bool enumerate(const std::function<bool(const std::vector<std::int64_t>&)>& visit, Budget& budget) const;

 private:
  struct Eq {
    std::vector<Term> terms;
    std::int64_t rhs;
  };
  std::vector<std::int64_t> lo_, hi_;
  std::vector<Eq> eqs_;
  std::vector<std::vector<std::size_t>> watch_;

  bool propagate(std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi) const;
  bool search(std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi,
              const std::function<bool(const std::vector<std::int64_t>&)>& visit, Budget& budget) const;
};

}  // namespace teamsem::detail
