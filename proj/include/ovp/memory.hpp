#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ovp {

inline constexpr int kMaxTargets = 12;

/// The switching variable p in {0,1}^N. Bit j set means target j (0-based)
/// has been visited or discarded.
struct MemoryState {
  std::uint32_t bits = 0;
  int n = 0;

  static MemoryState empty(int n) { return {0u, n}; }
  static MemoryState full(int n) { return {(1u << n) - 1u, n}; }

  bool has(int j) const { return (bits >> j) & 1u; }
  int popcount() const { return std::popcount(bits); }
  int zeros() const { return n - popcount(); }
  bool is_final() const { return bits == (1u << n) - 1u; }
  MemoryState with(int j) const { return {bits | (1u << j), n}; }

  /// Bit string with the highest-index target first, e.g. "0101".
  std::string to_string() const;
  /// Inverse of to_string(); throws std::invalid_argument on bad input.
  static MemoryState parse(std::string_view text);

  friend bool operator==(MemoryState, MemoryState) = default;
};

bool is_final(MemoryState p);

/// I_p: all strict supersets of p, in ascending mask order. Empty iff p is final.
std::vector<MemoryState> successors(MemoryState p);

/// True iff q is in I_p.
bool is_successor(MemoryState p, MemoryState q);

/// 0 if bit j agrees in p and q, 1 otherwise.
int chi(int j, MemoryState p, MemoryState q);

/// Levels of the lattice in backward processing order: level k holds the
/// states with popcount N - k, ascending by mask.
struct LatticeOrder {
  int n = 0;
  std::vector<std::vector<MemoryState>> levels;
};

LatticeOrder backward_levels(int n);

}  // namespace ovp
