#include "sdfuse/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace sdfuse {

size_t MaskImage::count() const {
  size_t n = 0;
  for (uint8_t v : on) n += v != 0;
  return n;
}

namespace {

uint8_t quant8(double v) {
  return static_cast<uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
}

uint16_t quant16(double v) {
  return static_cast<uint16_t>(std::lround(65535.0 * std::clamp(v, 0.0, 1.0)));
}

std::ofstream open_binary(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open for writing: " + path.string());
  return os;
}

}  // namespace

void write_ppm(const Image3& img, const std::filesystem::path& path) {
  std::ofstream os = open_binary(path);
  os << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 3);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgb& c = img.at(x, y);
      row[3 * x + 0] = quant8(c.x());
      row[3 * x + 1] = quant8(c.y());
      row[3 * x + 2] = quant8(c.z());
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw Error("write failed: " + path.string());
}

void write_ppm16(const Image3& img, const std::filesystem::path& path) {
  std::ofstream os = open_binary(path);
  os << "P6\n" << img.width << " " << img.height << "\n65535\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width) * 6);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const Rgb& c = img.at(x, y);
      for (int k = 0; k < 3; ++k) {
        uint16_t q = quant16(c[k]);
        row[6 * x + 2 * k] = static_cast<uint8_t>(q >> 8);     // big-endian
        row[6 * x + 2 * k + 1] = static_cast<uint8_t>(q & 0xff);
      }
    }
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw Error("write failed: " + path.string());
}

void write_pgm(const Image1& img, const std::filesystem::path& path) {
  std::ofstream os = open_binary(path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<uint8_t> row(static_cast<size_t>(img.width));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) row[x] = quant8(img.at(x, y));
    os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!os) throw Error("write failed: " + path.string());
}

void write_pgm(const MaskImage& mask, const std::filesystem::path& path) {
  Image1 img(mask.width, mask.height);
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x) img.at(x, y) = mask.at(x, y) ? 1.0 : 0.0;
  write_pgm(img, path);
}

double psnr(const Image3& a, const Image3& b, const MaskImage* mask) {
  if (a.width != b.width || a.height != b.height)
    throw Error("psnr: image dimensions do not match");
  if (mask && (mask->width != a.width || mask->height != a.height))
    throw Error("psnr: mask dimensions do not match");
  KahanSum se;
  size_t n = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      if (mask && !mask->at(x, y)) continue;
      Rgb d = a.at(x, y) - b.at(x, y);
      se.add(d.squaredNorm());
      ++n;
    }
  if (n == 0) throw Error("psnr: empty mask");
  double mse = se.sum / (3.0 * static_cast<double>(n));
  if (mse < 1e-10) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

namespace {

constexpr int kSsimRadius = 5;  // 11x11 window

const std::vector<double>& ssim_kernel() {
  static const std::vector<double> k = [] {
    std::vector<double> v(2 * kSsimRadius + 1);
    double sigma = 1.5;
    for (int i = -kSsimRadius; i <= kSsimRadius; ++i)
      v[i + kSsimRadius] = std::exp(-0.5 * i * i / (sigma * sigma));
    return v;
  }();
  return k;
}

}  // namespace

double ssim(const Image3& a, const Image3& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error("ssim: image dimensions do not match");
  const double c1 = 0.01 * 0.01;
  const double c2 = 0.03 * 0.03;
  const auto& kern = ssim_kernel();

  KahanSum total;
  size_t count = 0;
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < a.height; ++y) {
      for (int x = 0; x < a.width; ++x) {
        double wsum = 0, mu_a = 0, mu_b = 0;
        for (int dy = -kSsimRadius; dy <= kSsimRadius; ++dy) {
          int yy = y + dy;
          if (yy < 0 || yy >= a.height) continue;
          for (int dx = -kSsimRadius; dx <= kSsimRadius; ++dx) {
            int xx = x + dx;
            if (xx < 0 || xx >= a.width) continue;
            double w = kern[dy + kSsimRadius] * kern[dx + kSsimRadius];
            wsum += w;
            mu_a += w * a.at(xx, yy)[ch];
            mu_b += w * b.at(xx, yy)[ch];
          }
        }
        mu_a /= wsum;
        mu_b /= wsum;
        double var_a = 0, var_b = 0, cov = 0;
        for (int dy = -kSsimRadius; dy <= kSsimRadius; ++dy) {
          int yy = y + dy;
          if (yy < 0 || yy >= a.height) continue;
          for (int dx = -kSsimRadius; dx <= kSsimRadius; ++dx) {
            int xx = x + dx;
            if (xx < 0 || xx >= a.width) continue;
            double w = kern[dy + kSsimRadius] * kern[dx + kSsimRadius] / wsum;
            double da = a.at(xx, yy)[ch] - mu_a;
            double db = b.at(xx, yy)[ch] - mu_b;
            var_a += w * da * da;
            var_b += w * db * db;
            cov += w * da * db;
          }
        }
        double v = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                   ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
        total.add(v);
        ++count;
      }
    }
  }
  return total.sum / static_cast<double>(count);
}

}  // namespace sdfuse
