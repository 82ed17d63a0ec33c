#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sdfuse {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Rgb = Eigen::Vector3d;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box, lo[k] < hi[k] on every axis.
struct Aabb {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  bool valid() const { return lo.x() < hi.x() && lo.y() < hi.y() && lo.z() < hi.z(); }
  Vec3 extent() const { return hi - lo; }
  Vec3 center() const { return 0.5 * (lo + hi); }
  double diagonal() const { return extent().norm(); }

  bool contains(const Vec3& p) const {
    return p.x() >= lo.x() && p.x() <= hi.x() && p.y() >= lo.y() && p.y() <= hi.y() &&
           p.z() >= lo.z() && p.z() <= hi.z();
  }
  bool contains_strict(const Vec3& p) const {
    return p.x() > lo.x() && p.x() < hi.x() && p.y() > lo.y() && p.y() < hi.y() &&
           p.z() > lo.z() && p.z() < hi.z();
  }
  Vec3 clamp_point(const Vec3& p) const { return p.cwiseMax(lo).cwiseMin(hi); }
  double exterior_distance(const Vec3& p) const { return (p - clamp_point(p)).norm(); }

  Aabb expanded(double pad) const { return {lo.array() - pad, hi.array() + pad}; }
  void grow(const Vec3& p) { lo = lo.cwiseMin(p); hi = hi.cwiseMax(p); }

  static Aabb intersection(const Aabb& a, const Aabb& b) {
    return {a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi)};
  }
  static bool overlap_positive(const Aabb& a, const Aabb& b) {
    return intersection(a, b).valid();
  }
};

/// Derives an independent stream seed from a base seed and a tag.
/// FNV-1a over the tag feeding two splitmix64 finalization rounds.
uint64_t substream(uint64_t seed, std::string_view tag, uint64_t a = 0, uint64_t b = 0);

/// Deterministic random source. All distributions are hand-rolled so that
/// streams are reproducible independent of the standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(seed) {}

  uint64_t bits() { return gen_(); }
  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  /// Uniform integer in [0,n).
  uint64_t index(uint64_t n) { return gen_() % n; }
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform direction on the unit sphere.
  Vec3 unit_vector();
  /// Uniform rotation (quaternion method).
  Mat3 rotation();

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Compensated (Kahan) accumulator; used wherever a reduction must not
/// depend on how partial results were produced.
struct KahanSum {
  double sum = 0.0;
  double c = 0.0;
  void add(double x) {
    double y = x - c;
    double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
};

/// Execution policy for the data-parallel kernels. Serial and parallel
/// paths produce bit-identical results; the serial path is the reference.
enum class Exec { serial, parallel };

std::string str_printf(const char* fmt, ...);

}  // namespace sdfuse
