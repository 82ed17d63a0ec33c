#pragma once

#include <filesystem>
#include <vector>

#include "sdfuse/common.hpp"

namespace sdfuse {

/// RGB image, channels in [0,1], row-major, pixel (0,0) top-left.
struct Image3 {
  int width = 0, height = 0;
  std::vector<Rgb> pixels;

  Image3() = default;
  Image3(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, Rgb::Zero()) {}
  Rgb& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

/// Single-channel image in [0,1].
struct Image1 {
  int width = 0, height = 0;
  std::vector<double> pixels;

  Image1() = default;
  Image1(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h, 0.0) {}
  double& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

/// Boolean pixel mask.
struct MaskImage {
  int width = 0, height = 0;
  std::vector<uint8_t> on;

  MaskImage() = default;
  MaskImage(int w, int h) : width(w), height(h), on(static_cast<size_t>(w) * h, 0) {}
  bool at(int x, int y) const { return on[static_cast<size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool v) { on[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
  size_t count() const;
};

/// 8-bit binary PPM (P6).
void write_ppm(const Image3& img, const std::filesystem::path& path);
/// 16-bit binary PPM (P6 with maxval 65535, big-endian samples as in PNG).
void write_ppm16(const Image3& img, const std::filesystem::path& path);
/// 8-bit binary PGM (P5); values clamped to [0,1].
void write_pgm(const Image1& img, const std::filesystem::path& path);
void write_pgm(const MaskImage& mask, const std::filesystem::path& path);

/// 10*log10(1/MSE) over [0,1] channels, capped at 99 dB for MSE < 1e-10.
/// With a mask, only masked pixels enter the mean. Throws on size mismatch
/// or an empty mask.
double psnr(const Image3& a, const Image3& b, const MaskImage* mask = nullptr);

/// Mean SSIM over pixels and channels, 11x11 Gaussian window (sigma 1.5)
/// renormalized at borders, K1=0.01, K2=0.03, dynamic range 1.
double ssim(const Image3& a, const Image3& b);

}  // namespace sdfuse
