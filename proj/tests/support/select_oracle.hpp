#pragma once

// Brute-force world selection: every size-l subset via bitmasks, partition
// by restricted tuple, objective Σ s·log2 s over ascending block sizes.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace select_oracle {

struct Best {
   double objective = 0;
   std::vector<int> worlds;
};

inline double objective(const std::vector<std::vector<std::string>>& tuples, const std::vector<int>& worlds)
{
   std::map<std::vector<std::string>, std::size_t> blocks;
   for (const auto& t : tuples) {
      std::vector<std::string> key;
      for (int w : worlds) key.push_back(t[w]);
      ++blocks[key];
   }
   std::vector<std::size_t> sizes;
   for (const auto& [_, n] : blocks) sizes.push_back(n);
   std::sort(sizes.begin(), sizes.end());
   double total = 0;
   for (std::size_t s : sizes)
      if (s > 1) total += static_cast<double>(s) * std::log2(static_cast<double>(s));
   return total;
}

/// Minimum over all subsets; among minimizers, the lexicographically
/// smallest ascending index tuple.
inline Best minimum(const std::vector<std::vector<std::string>>& tuples, int k, int l)
{
   Best best;
   bool found = false;
   for (unsigned mask = 0; mask < (1u << k); ++mask) {
      if (__builtin_popcount(mask) != l) continue;
      std::vector<int> worlds;
      for (int w = 0; w < k; ++w)
         if (mask >> w & 1u) worlds.push_back(w);
      const double obj = objective(tuples, worlds);
      if (!found || obj < best.objective || (obj == best.objective && worlds < best.worlds)) {
         found = true;
         best.objective = obj;
         best.worlds = worlds;
      }
   }
   return best;
}

} // namespace select_oracle
