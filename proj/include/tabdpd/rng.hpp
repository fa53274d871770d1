#pragma once

#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace tabdpd {

/// SplitMix64 generator. Sampling helpers are implemented here rather than
/// with <random> distributions so sequences match across standard libraries.
class Rng {
public:
   using result_type = std::uint64_t;

   explicit Rng(std::uint64_t seed = 0) : state_(seed) {}

   static constexpr result_type min() { return 0; }
   static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

   result_type operator()() { return next(); }

   std::uint64_t next()
   {
      std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      return z ^ (z >> 31);
   }

   /// Uniform integer in [0, n) by rejection; n must be positive.
   std::uint64_t uniform_index(std::uint64_t n)
   {
      const std::uint64_t limit = max() - max() % n;
      std::uint64_t x;
      do {
         x = next();
      } while (x >= limit);
      return x % n;
   }

   /// Uniform double in [0, 1) with 53 random bits.
   double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

   template <class T>
   void shuffle(std::vector<T>& v)
   {
      for (std::size_t i = v.size(); i > 1; --i) {
         const std::size_t j = uniform_index(i);
         using std::swap;
         swap(v[i - 1], v[j]);
      }
   }

private:
   std::uint64_t state_;
};

inline std::uint64_t mix64(std::uint64_t x)
{
   x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
   x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
   return x ^ (x >> 31);
}

/// FNV-1a, used to fold stream names into seeds.
inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
   for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
   }
   return h;
}

/// Independent stream derived from a root seed, a name and an index, e.g.
/// stream_seed(seed, "worlds", 3).
inline std::uint64_t stream_seed(std::uint64_t root, std::string_view name, std::uint64_t index = 0)
{
   return mix64(mix64(root ^ fnv1a(name)) + 0x9e3779b97f4a7c15ULL * (index + 1));
}

inline Rng stream(std::uint64_t root, std::string_view name, std::uint64_t index = 0)
{
   return Rng(stream_seed(root, name, index));
}

} // namespace tabdpd
