#include "sdfuse/common.hpp"

#include <cstdarg>
#include <cstdio>
#include <vector>

namespace sdfuse {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t substream(uint64_t seed, std::string_view tag, uint64_t a, uint64_t b) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  h = splitmix64(h ^ splitmix64(seed));
  h = splitmix64(h ^ splitmix64(a + 0x9e3779b97f4a7c15ull * (b + 1)));
  return h;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  // avoid log(0)
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  double r = std::sqrt(-2.0 * std::log(u1));
  double phi = 2.0 * M_PI * u2;
  spare_ = r * std::sin(phi);
  has_spare_ = true;
  return r * std::cos(phi);
}

Vec3 Rng::unit_vector() {
  // Marsaglia rejection on the disk.
  for (;;) {
    double a = uniform(-1.0, 1.0);
    double b = uniform(-1.0, 1.0);
    double s = a * a + b * b;
    if (s >= 1.0 || s == 0.0) continue;
    double t = 2.0 * std::sqrt(1.0 - s);
    return {a * t, b * t, 1.0 - 2.0 * s};
  }
}

Mat3 Rng::rotation() {
  // Uniform quaternion from four normals.
  double q[4];
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (double& qi : q) {
      qi = normal();
      n2 += qi * qi;
    }
  } while (n2 == 0.0);
  double inv = 1.0 / std::sqrt(n2);
  Eigen::Quaterniond quat(q[0] * inv, q[1] * inv, q[2] * inv, q[3] * inv);
  return quat.toRotationMatrix();
}

std::string str_printf(const char* fmt, ...) {
  va_list args;
  va_start(args, fmt);
  va_list args2;
  va_copy(args2, args);
  int n = std::vsnprintf(nullptr, 0, fmt, args);
  va_end(args);
  std::string out(static_cast<size_t>(n), '\0');
  std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
  va_end(args2);
  return out;
}

}  // namespace sdfuse
