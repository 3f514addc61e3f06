#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>

#include <jpeglib.h>

#include "gspot/error.hpp"
#include "gspot/synth.hpp"
#include "synth_internal.hpp"

namespace gspot {

namespace {

constexpr double kFocalPx = 525.0;  // at 640 px width
constexpr int kWallMm = 3800;

struct Bone {
  JointId a;
  JointId b;
  double radius_m;
};

constexpr Bone kBones[] = {
    {JointId::HipCenter, JointId::ShoulderCenter, 0.15}, {JointId::ShoulderCenter, JointId::Head, 0.06},
    {JointId::ShoulderLeft, JointId::ShoulderRight, 0.08}, {JointId::ShoulderLeft, JointId::ElbowLeft, 0.05},
    {JointId::ElbowLeft, JointId::HandLeft, 0.045},       {JointId::ShoulderRight, JointId::ElbowRight, 0.05},
    {JointId::ElbowRight, JointId::HandRight, 0.045},     {JointId::HipLeft, JointId::KneeLeft, 0.08},
    {JointId::KneeLeft, JointId::AnkleLeft, 0.06},         {JointId::HipRight, JointId::KneeRight, 0.08},
    {JointId::KneeRight, JointId::AnkleRight, 0.06},
};

void splat(std::vector<std::uint16_t>& depth_mm, std::vector<std::uint8_t>& owner, int w, int h,
           double f, Vec3 c, double r, std::uint8_t pid) {
  if (c.z <= 0.1) return;
  const double cu = w / 2.0 + f * c.x / c.z;
  const double cv = h / 2.0 - f * c.y / c.z;
  const double rp = f * r / c.z;
  const int u0 = std::max(0, static_cast<int>(std::floor(cu - rp)));
  const int u1 = std::min(w - 1, static_cast<int>(std::ceil(cu + rp)));
  const int v0 = std::max(0, static_cast<int>(std::floor(cv - rp)));
  const int v1 = std::min(h - 1, static_cast<int>(std::ceil(cv + rp)));
  for (int v = v0; v <= v1; ++v) {
    for (int u = u0; u <= u1; ++u) {
      const double du = (u - cu) / rp;
      const double dv = (v - cv) / rp;
      const double q = du * du + dv * dv;
      if (q > 1.0) continue;
      const int d = static_cast<int>(std::lround((c.z - r * std::sqrt(1.0 - q)) * 1000.0));
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (d < depth_mm[i]) {
        depth_mm[i] = static_cast<std::uint16_t>(std::clamp(d, 1, kMaxDepthMm));
        owner[i] = pid;
      }
    }
  }
}

}  // namespace

DepthFrame render_depth(std::span<const Skeleton> bodies, std::uint64_t timestamp_ms,
                        std::uint16_t width, std::uint16_t height) {
  if (width == 0 || height == 0) throw RangeError("depth frame dimensions must be positive");
  const int w = width;
  const int h = height;
  const double f = kFocalPx * w / 640.0;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<std::uint16_t> depth(n, kWallMm);
  std::vector<std::uint8_t> owner(n, 0);
  // Floor plane 1.2 m below the sensor, visible in the lower rows.
  for (int v = h / 2 + 1; v < h; ++v) {
    const double ray_y = (v - h / 2.0) / f;
    const int d = std::min(kWallMm, static_cast<int>(1200.0 / ray_y));
    std::fill_n(depth.begin() + static_cast<std::ptrdiff_t>(v) * w, w, static_cast<std::uint16_t>(d));
  }
  for (const auto& body : bodies) {
    const std::uint8_t pid = static_cast<std::uint8_t>(body.player_id & kMaxPlayerId);
    for (const auto& bone : kBones) {
      const Vec3 a = body[bone.a].position();
      const Vec3 b = body[bone.b].position();
      const double len = (b - a).norm();
      const int steps = std::max(1, static_cast<int>(std::ceil(len / (0.5 * bone.radius_m))));
      for (int k = 0; k <= steps; ++k)
        splat(depth, owner, w, h, f, lerp(a, b, static_cast<double>(k) / steps), bone.radius_m, pid);
    }
    splat(depth, owner, w, h, f, body[JointId::Head].position(), 0.11, pid);
  }
  DepthFrame frame;
  frame.timestamp_ms = timestamp_ms;
  frame.width = width;
  frame.height = height;
  frame.pixels.resize(n);
  for (std::size_t i = 0; i < n; ++i) frame.pixels[i] = pack_depth_pixel(depth[i], owner[i]);
  return frame;
}

namespace detail {

std::vector<std::uint8_t> flat_jpeg(std::uint16_t width, std::uint16_t height, std::uint8_t gray) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, int>, std::vector<std::uint8_t>> cache;
  std::lock_guard lock(mu);
  const auto key = std::make_tuple(int{width}, int{height}, int{gray});
  if (auto it = cache.find(key); it != cache.end()) return it->second;

  jpeg_compress_struct cinfo{};
  jpeg_error_mgr jerr{};
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buf = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buf, &size);
  cinfo.image_width = width;
  cinfo.image_height = height;
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, 75, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  std::vector<JSAMPLE> row(static_cast<std::size_t>(width) * 3, gray);
  while (cinfo.next_scanline < cinfo.image_height) {
    JSAMPROW ptr = row.data();
    jpeg_write_scanlines(&cinfo, &ptr, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buf, buf + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buf);
  cache.emplace(key, out);
  return out;
}

}  // namespace detail

}  // namespace gspot
