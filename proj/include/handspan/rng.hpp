#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace handspan {

// Deterministic splittable generator (splitmix64 core). All randomness in the
// library flows from a single base seed; subsystems derive independent streams
// with Rng::stream(tag) so results replay exactly regardless of call order
// elsewhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  // random unit quaternion (x, y, z, w), uniform on SO(3)
  void unit_quaternion(double q[4]) {
    const double u1 = uniform(), u2 = uniform(), u3 = uniform();
    const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
    const double t2 = 2.0 * 3.14159265358979323846 * u2;
    const double t3 = 2.0 * 3.14159265358979323846 * u3;
    q[0] = a * std::sin(t2);
    q[1] = a * std::cos(t2);
    q[2] = b * std::sin(t3);
    q[3] = b * std::cos(t3);
  }

  // Derived stream: hash of current seed and a tag. Does not advance *this.
  Rng stream(std::string_view tag) const {
    std::uint64_t h = state_ ^ 0xcbf29ce484222325ull;
    for (char c : tag) {
      h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
      h *= 0x100000001b3ull;
    }
    return Rng(h);
  }

  Rng stream(std::uint64_t n) const {
    Rng r(state_ ^ (0x9e3779b97f4a7c15ull * (n + 1)));
    r.next_u64();
    return r;
  }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

}  // namespace handspan
