#include "search_util.hpp"

namespace teamsem::detail {

std::uint64_t composition_count(std::int64_t m, std::size_t k, std::uint64_t cap) {
  if (k == 0) return m == 0 ? 1 : 0;
  // C(m+k-1, k-1) computed incrementally; each prefix product is itself a
  // binomial coefficient, so the division is exact.
  unsigned __int128 c = 1;
  for (std::size_t i = 1; i < k; ++i) {
    c = c * static_cast<unsigned __int128>(m + static_cast<std::int64_t>(i)) / i;
    if (c >= cap) return cap;
  }
  return static_cast<std::uint64_t>(c);
}

namespace {

void fill(std::int64_t m, std::size_t k, std::vector<std::int64_t>& cur, std::vector<std::vector<std::int64_t>>& out) {
  if (cur.size() + 1 == k) {
    cur.push_back(m);
    out.push_back(cur);
    cur.pop_back();
    return;
  }
  for (std::int64_t first = m; first >= 0; --first) {
    cur.push_back(first);
    fill(m - first, k, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<std::vector<std::int64_t>> compositions(std::int64_t m, std::size_t k) {
  std::vector<std::vector<std::int64_t>> out;
  if (k == 0) {
    if (m == 0) out.emplace_back();
    return out;
  }
  std::vector<std::int64_t> cur;
  fill(m, k, cur, out);
  return out;
}

}  // namespace teamsem::detail
