#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace intact {

// splitmix64 finalizer; used both as a bit mixer and as a tiny PRNG step.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_bytes(std::string_view s) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Counter-based seed fan-out: every consumer of randomness derives its own
// stream seed from (parent seed, tag, indices...). Reordering or skipping
// runs does not perturb any other run's stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  return splitmix64(seed ^ hash_bytes(tag));
}
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t i) {
  return splitmix64(derive_seed(seed, tag) ^ splitmix64(i));
}
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t i, std::uint64_t j) {
  return splitmix64(derive_seed(seed, tag, i) ^ splitmix64(~j));
}

// Deterministic random stream. mt19937_64 has a fully specified output
// sequence; the uniform/normal transforms are written out here so results
// do not depend on the standard library's distribution implementations.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : eng_(seed) {}

  // in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * kInv53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // standard normal via Box-Muller (one value per pair of uniforms)
  double normal() {
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * kInv53;  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // in {0, 1, ..., n-1}, by rejection on the high bits
  std::uint64_t uniform_int(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = eng_();
    } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  Eigen::VectorXd normal_vector(Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index c = 0; c < cols; ++c)
      for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = normal();
    return m;
  }

  // Fisher-Yates; spelled out so the permutation is engine-defined only.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kPi = 3.14159265358979323846;
  std::mt19937_64 eng_;
};

}  // namespace intact
