#pragma once

#include <cstdint>
#include <random>

namespace mvshrink {

// splitmix64 step, used only to spread seeds.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic stream for one replication. Streams derived from distinct
// (seed, cell, rep) triples are independent for Monte Carlo purposes, so
// results do not depend on scheduling order.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t cell,
                                   std::uint64_t rep) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ mix64(cell + 0x1000000001ULL));
  s = mix64(s ^ mix64(rep + 0x2000000003ULL));
  return std::mt19937_64(s);
}

}  // namespace mvshrink
