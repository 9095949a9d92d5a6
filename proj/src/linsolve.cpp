#include "linsolve.hpp"

#include <algorithm>
#include <map>

namespace teamsem::detail {

namespace {

using Wide = __int128;

Wide floor_div(Wide a, Wide b) {
  Wide q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

Wide ceil_div(Wide a, Wide b) { return -floor_div(-a, b); }

}  // namespace

std::size_t LinearSystem::add_var(std::int64_t lo, std::int64_t hi) {
  lo_.push_back(lo);
  hi_.push_back(hi);
  watch_.emplace_back();
  return lo_.size() - 1;
}

void LinearSystem::add_eq(std::vector<Term> terms, std::int64_t rhs) {
  std::map<std::size_t, std::int64_t> merged;
  for (const auto& [v, c] : terms) merged[v] += c;
  Eq e{{}, rhs};
  for (const auto& [v, c] : merged)
    if (c != 0) e.terms.emplace_back(v, c);
  for (const auto& [v, c] : e.terms) watch_[v].push_back(eqs_.size());
  eqs_.push_back(std::move(e));
}

bool LinearSystem::propagate(std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi) const {
  std::vector<char> queued(eqs_.size(), 1);
  std::vector<std::size_t> queue(eqs_.size());
  for (std::size_t i = 0; i < eqs_.size(); ++i) queue[i] = i;
  while (!queue.empty()) {
    const std::size_t ei = queue.back();
    queue.pop_back();
    queued[ei] = 0;
    const Eq& e = eqs_[ei];
    Wide mn = 0, mx = 0;
    for (const auto& [v, c] : e.terms) {
      const Wide a = static_cast<Wide>(c) * lo[v], b = static_cast<Wide>(c) * hi[v];
      mn += std::min(a, b);
      mx += std::max(a, b);
    }
    if (e.rhs < mn || e.rhs > mx) return false;
    for (const auto& [v, c] : e.terms) {
      const Wide a = static_cast<Wide>(c) * lo[v], b = static_cast<Wide>(c) * hi[v];
      const Wide rest_min = mn - std::min(a, b), rest_max = mx - std::max(a, b);
      // c * x in [rhs - rest_max, rhs - rest_min]
      Wide l = e.rhs - rest_max, h = e.rhs - rest_min;
      Wide nl, nh;
      if (c > 0) {
        nl = ceil_div(l, c);
        nh = floor_div(h, c);
      } else {
        nl = ceil_div(h, c);
        nh = floor_div(l, c);
      }
      bool changed = false;
      if (nl > lo[v]) {
        lo[v] = static_cast<std::int64_t>(nl);
        changed = true;
      }
      if (nh < hi[v]) {
        hi[v] = static_cast<std::int64_t>(nh);
        changed = true;
      }
      if (lo[v] > hi[v]) return false;
      if (changed)
        for (auto other : watch_[v])
          if (!queued[other]) {
            queued[other] = 1;
            queue.push_back(other);
          }
    }
  }
  return true;
}

bool LinearSystem::search(std::vector<std::int64_t>& lo, std::vector<std::int64_t>& hi,
                          const std::function<bool(const std::vector<std::int64_t>&)>& visit, Budget& budget) const {
  budget.tick();
  std::size_t pick = lo.size();
  for (std::size_t v = 0; v < lo.size(); ++v)
    if (lo[v] < hi[v]) {
      pick = v;
      break;
    }
  if (pick == lo.size()) return visit(lo);
  for (std::int64_t val = hi[pick]; val >= lo[pick]; --val) {
    std::vector<std::int64_t> l2 = lo, h2 = hi;
    l2[pick] = h2[pick] = val;
    if (!propagate(l2, h2)) continue;
    if (search(l2, h2, visit, budget)) return true;
  }
  return false;
}

bool LinearSystem::enumerate(const std::function<bool(const std::vector<std::int64_t>&)>& visit,
                             Budget& budget) const {
  std::vector<std::int64_t> lo = lo_, hi = hi_;
  if (!propagate(lo, hi)) return false;
  return search(lo, hi, visit, budget);
}

}  // namespace teamsem::detail
