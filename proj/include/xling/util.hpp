#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace xling {

// Deterministic RNG. mt19937_64 output is fixed by the standard and all
// derived transforms below are hand-rolled, so identical seeds give
// identical streams on every platform.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    unsigned __int128 m = static_cast<unsigned __int128>(gen_()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      std::uint64_t threshold = -n % n;
      while (lo < threshold) {
        m = static_cast<unsigned __int128>(gen_()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  // Box-Muller, standard normal.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Shortest decimal form that parses back to the exact same double. All
// text serialization goes through this so artifacts round-trip bit-exactly
// and are byte-stable across runs.
std::string format_double(double x);

// Strict double parse of the whole string (decimal or scientific).
// Returns false on trailing garbage or empty input.
bool parse_double(std::string_view s, double& out);

bool parse_size(std::string_view s, std::size_t& out);

std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace xling
