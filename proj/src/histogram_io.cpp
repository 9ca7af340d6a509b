#include "tgrd/histogram.h"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace tgrd {

Histogram finalize_accum(const Accum& a, std::span<const int> slot_param, int nparams,
                         double scale, double t0, double dt, double c) {
  Histogram h(a.height, a.width, a.frames, nparams);
  h.t0 = t0;
  h.dt = dt;
  h.c = c;
  const size_t n = a.plane_size();
  for (size_t i = 0; i < n; ++i) h.intensity[i] = a.intensity[i] * scale;
  for (int s = 0; s < a.nslots; ++s) {
    const int p = slot_param[s];
    double* dst = h.grad.data() + p * n;
    const double* src = a.slots.data() + s * n;
    for (size_t i = 0; i < n; ++i) dst[i] += src[i] * scale;
  }
  return h;
}

namespace {

constexpr char kMagic[4] = {'T', 'G', 'R', 'D'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  return v;
}

void write_plane_f32(std::ofstream& out, const double* src, size_t n) {
  std::vector<float> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = static_cast<float>(src[i]);
  out.write(reinterpret_cast<const char*>(buf.data()), n * sizeof(float));
}

void read_plane_f32(std::ifstream& in, double* dst, size_t n) {
  std::vector<float> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), n * sizeof(float));
  for (size_t i = 0; i < n; ++i) dst[i] = buf[i];
}

}  // namespace

void write_tgrd(const std::string& path, const Histogram& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put<uint32_t>(out, kVersion);
  put<uint32_t>(out, static_cast<uint32_t>(h.height));
  put<uint32_t>(out, static_cast<uint32_t>(h.width));
  put<uint32_t>(out, static_cast<uint32_t>(h.frames));
  put<uint32_t>(out, static_cast<uint32_t>(h.nparams));
  put<double>(out, h.t0);
  put<double>(out, h.dt);
  put<double>(out, h.c);
  const size_t n = h.plane_size();
  write_plane_f32(out, h.intensity.data(), n);
  for (int p = 0; p < h.nparams; ++p) write_plane_f32(out, h.grad.data() + p * n, n);
  if (!out) throw std::runtime_error("write failed: " + path);
}

Histogram read_tgrd(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error(path + ": not a TGRD file");
  const uint32_t version = get<uint32_t>(in);
  if (version != kVersion)
    throw std::runtime_error(path + ": unsupported version " + std::to_string(version));
  const uint32_t H = get<uint32_t>(in), W = get<uint32_t>(in);
  const uint32_t F = get<uint32_t>(in), d = get<uint32_t>(in);
  Histogram h(static_cast<int>(H), static_cast<int>(W), static_cast<int>(F),
              static_cast<int>(d));
  h.t0 = get<double>(in);
  h.dt = get<double>(in);
  h.c = get<double>(in);
  const size_t n = h.plane_size();
  read_plane_f32(in, h.intensity.data(), n);
  for (uint32_t p = 0; p < d; ++p) read_plane_f32(in, h.grad.data() + p * n, n);
  if (!in) throw std::runtime_error(path + ": truncated file");
  return h;
}

void write_csv(const std::string& path, const Histogram& h) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "y,x,frame,intensity";
  for (int p = 0; p < h.nparams; ++p) out << ",grad" << p;
  out << "\n";
  char buf[64];
  for (int y = 0; y < h.height; ++y)
    for (int x = 0; x < h.width; ++x)
      for (int l = 0; l < h.frames; ++l) {
        out << y << ',' << x << ',' << l;
        std::snprintf(buf, sizeof(buf), ",%.9g", h.at(y, x, l));
        out << buf;
        for (int p = 0; p < h.nparams; ++p) {
          std::snprintf(buf, sizeof(buf), ",%.9g", h.grad_at(p, y, x, l));
          out << buf;
        }
        out << '\n';
      }
}

namespace {

void write_png_rgb(const std::string& path, int w, int h, const std::vector<uint8_t>& rgb) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    std::fclose(fp);
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("PNG write failed: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y)
    rows[y] = const_cast<png_bytep>(rgb.data() + static_cast<size_t>(y) * w * 3);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

uint8_t tonemap_u8(double v) {
  v = std::clamp(v, 0.0, 1.0);
  return static_cast<uint8_t>(std::lround(255.0 * std::pow(v, 1.0 / 2.2)));
}

}  // namespace

void write_frame_pngs(const std::string& dir, const std::string& prefix, const Histogram& h,
                      int plane) {
  std::filesystem::create_directories(dir);
  const size_t n = h.plane_size();
  const double* src = plane < 0 ? h.intensity.data() : h.grad.data() + plane * n;
  double peak = 0.0;
  for (size_t i = 0; i < n; ++i) peak = std::max(peak, std::abs(src[i]));
  if (peak <= 0.0) peak = 1.0;
  std::vector<uint8_t> rgb(static_cast<size_t>(h.width) * h.height * 3);
  for (int l = 0; l < h.frames; ++l) {
    for (int y = 0; y < h.height; ++y)
      for (int x = 0; x < h.width; ++x) {
        const double v = src[h.idx(y, x, l)];
        uint8_t r, g, b;
        if (plane < 0) {
          r = g = b = tonemap_u8(v / peak);
        } else {
          // Diverging: negative blue, positive red, zero white.
          const double a = std::clamp(v / peak, -1.0, 1.0);
          const uint8_t other = tonemap_u8(1.0 - std::abs(a));
          r = a >= 0.0 ? 255 : other;
          b = a <= 0.0 ? 255 : other;
          g = other;
        }
        uint8_t* px = &rgb[(static_cast<size_t>(y) * h.width + x) * 3];
        px[0] = r;
        px[1] = g;
        px[2] = b;
      }
    char name[64];
    std::snprintf(name, sizeof(name), "%s_%04d.png", prefix.c_str(), l);
    write_png_rgb((std::filesystem::path(dir) / name).string(), h.width, h.height, rgb);
  }
}

}  // namespace tgrd
