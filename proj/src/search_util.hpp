#pragma once

#include <cstdint>
#include <exception>
#include <vector>

namespace teamsem::detail {

struct BudgetExceeded : std::exception {
  const char* what() const noexcept override { return "search budget exhausted"; }
};

class Budget {
 public:
  explicit Budget(std::uint64_t limit) : limit_(limit) {}
  void tick() {
    if (++used_ > limit_) throw BudgetExceeded{};
  }
  std::uint64_t used() const { return used_; }

 private:
  std::uint64_t limit_;
  std::uint64_t used_ = 0;
};

/// Lexicographic counter over digits 0..max[i]; the last digit moves fastest.
class Odometer {
 public:
  explicit Odometer(std::vector<std::int64_t> max) : max_(std::move(max)), digits_(max_.size(), 0) {}
  std::int64_t operator[](std::size_t i) const { return digits_[i]; }
  std::size_t size() const { return digits_.size(); }
  bool next() {
    for (std::size_t i = digits_.size(); i-- > 0;) {
      if (digits_[i] < max_[i]) {
        ++digits_[i];
        return true;
      }
      digits_[i] = 0;
    }
    return false;
  }

 private:
  std::vector<std::int64_t> max_;
  std::vector<std::int64_t> digits_;
};

/// Number of ways to write m as an ordered sum of k nonnegative parts,
/// saturating at `cap`.
std::uint64_t composition_count(std::int64_t m, std::size_t k, std::uint64_t cap);

/// All compositions of m into k parts, the first part largest first.
std::vector<std::vector<std::int64_t>> compositions(std::int64_t m, std::size_t k);

}  // namespace teamsem::detail
