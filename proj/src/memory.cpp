#include "ovp/memory.hpp"

#include <stdexcept>

namespace ovp {

std::string MemoryState::to_string() const {
  std::string out(static_cast<std::size_t>(n), '0');
  for (int j = 0; j < n; ++j) {
    if (has(j)) out[static_cast<std::size_t>(n - 1 - j)] = '1';
  }
  return out;
}

MemoryState MemoryState::parse(std::string_view text) {
  if (text.empty() || text.size() > static_cast<std::size_t>(kMaxTargets)) {
    throw std::invalid_argument("memory state must have 1.." +
                                std::to_string(kMaxTargets) + " bits: '" +
                                std::string(text) + "'");
  }
  MemoryState p{0u, static_cast<int>(text.size())};
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '0' && c != '1') {
      throw std::invalid_argument("memory state must be a bit string: '" +
                                  std::string(text) + "'");
    }
    if (c == '1') p.bits |= 1u << (text.size() - 1 - i);
  }
  return p;
}

bool is_final(MemoryState p) { return p.is_final(); }

std::vector<MemoryState> successors(MemoryState p) {
  const std::uint32_t free = MemoryState::full(p.n).bits & ~p.bits;
  std::vector<MemoryState> out;
  // Nonempty subsets of the free mask, walked downward, then reversed.
  for (std::uint32_t sub = free; sub != 0; sub = (sub - 1) & free) {
    out.push_back({p.bits | sub, p.n});
  }
  std::vector<MemoryState> sorted(out.rbegin(), out.rend());
  return sorted;
}

bool is_successor(MemoryState p, MemoryState q) {
  return p.n == q.n && (q.bits & p.bits) == p.bits && q.bits != p.bits &&
         (q.bits >> q.n) == 0;
}

int chi(int j, MemoryState p, MemoryState q) {
  return p.has(j) == q.has(j) ? 0 : 1;
}

LatticeOrder backward_levels(int n) {
  if (n < 1 || n > kMaxTargets) {
    throw std::out_of_range("number of targets must be in 1.." +
                            std::to_string(kMaxTargets));
  }
  LatticeOrder order;
  order.n = n;
  order.levels.resize(static_cast<std::size_t>(n) + 1);
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    const int level = n - std::popcount(mask);
    order.levels[static_cast<std::size_t>(level)].push_back({mask, n});
  }
  return order;
}

}  // namespace ovp
