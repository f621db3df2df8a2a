#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace topodiff {

// Error taxonomy, mapped to CLI exit codes in tools/.
struct ConfigError : std::runtime_error {  // exit 2
  explicit ConfigError(const std::string& m) : std::runtime_error(m) {}
};
struct DataError : std::runtime_error {  // exit 3
  explicit DataError(const std::string& m) : std::runtime_error(m) {}
};
struct NumericError : std::runtime_error {  // exit 4
  explicit NumericError(const std::string& m) : std::runtime_error(m) {}
};
// API misuse (stale caches, oversized oracle inputs). Not reachable from the CLI.
struct UsageError : std::logic_error {
  explicit UsageError(const std::string& m) : std::logic_error(m) {}
};

struct Pixel {
  int row = -1;
  int col = -1;
  bool valid() const { return row >= 0 && col >= 0; }
  bool operator==(const Pixel& o) const { return row == o.row && col == o.col; }
};

// Dense H x W image of doubles, row-major. Carrier for phantom images,
// extracted signals and filtrations.
struct ScalarField {
  int rows = 0;
  int cols = 0;
  std::vector<double> v;

  ScalarField() = default;
  ScalarField(int r, int c, double fill = 0.0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

  double& at(int r, int c) { return v[size_t(r) * cols + c]; }
  double at(int r, int c) const { return v[size_t(r) * cols + c]; }
  size_t size() const { return v.size(); }
  bool same_shape(const ScalarField& o) const { return rows == o.rows && cols == o.cols; }
};

struct BinaryMask {
  int rows = 0;
  int cols = 0;
  std::vector<uint8_t> v;

  BinaryMask() = default;
  BinaryMask(int r, int c, uint8_t fill = 0) : rows(r), cols(c), v(size_t(r) * c, fill) {}

  uint8_t& at(int r, int c) { return v[size_t(r) * cols + c]; }
  uint8_t at(int r, int c) const { return v[size_t(r) * cols + c]; }
  size_t count() const {
    size_t n = 0;
    for (uint8_t x : v) n += x;
    return n;
  }
  bool empty_mask() const { return count() == 0; }
  bool same_shape(const BinaryMask& o) const { return rows == o.rows && cols == o.cols; }
};

// Deterministic RNG: the engine is std::mt19937_64 (fully specified by the
// standard); the value transforms are hand-rolled so streams are identical
// across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  // uniform in [0, 1)
  double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // inclusive range
  int uniform_int(int lo, int hi) {
    return lo + int(eng_() % uint64_t(hi - lo + 1));
  }
  uint64_t next_u64() { return eng_(); }

  // Box-Muller, one spare cached
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = double((eng_() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    double u2 = double(eng_() >> 11) * 0x1.0p-53;
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }
  float normalf() { return float(normal()); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

inline uint64_t fnv1a(const void* data, size_t n, uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a(const std::string& s, uint64_t h = 1469598103934665603ull) {
  return fnv1a(s.data(), s.size(), h);
}

std::string hex_u64(uint64_t x);

}  // namespace topodiff
