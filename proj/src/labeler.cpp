#include "corridornav/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace corridornav {

namespace {

constexpr int kMinComponentArea = 3;  // "above 2 px area"

struct Blob {
  int area = 0;
  double weight = 0.0;  // sum of red excess, for the subpixel centroid
  double wu = 0.0;
  double wv = 0.0;
  size_t first_pixel = 0;  // deterministic tie-break

  Vec2 centroid() const { return {wu / weight, wv / weight}; }
};

// Red excess of a pixel; positive only inside marker blobs. Weighting the
// centroid by it recovers the coverage-blended marker center to a fraction
// of a pixel.
inline double redness(const uint8_t* px) {
  return static_cast<double>(px[2]) - static_cast<double>(std::max(px[0], px[1]));
}

std::vector<Blob> find_blobs(const Frame& frame) {
  const int w = frame.width, h = frame.height;
  std::vector<uint8_t> mask(static_cast<size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const uint8_t* px = frame.at(x, y);
      mask[static_cast<size_t>(y) * w + x] = is_marker_red(px[0], px[1], px[2]) ? 1 : 0;
    }

  std::vector<Blob> blobs;
  std::vector<size_t> stack;
  for (size_t start = 0; start < mask.size(); ++start) {
    if (mask[start] != 1) continue;
    Blob blob;
    blob.first_pixel = start;
    stack.assign(1, start);
    mask[start] = 2;
    while (!stack.empty()) {
      const size_t idx = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(idx % w), y = static_cast<int>(idx / w);
      blob.area += 1;
      const double wt = std::max(1.0, redness(frame.at(x, y)));
      blob.weight += wt;
      blob.wu += wt * (x + 0.5);
      blob.wv += wt * (y + 0.5);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          const size_t nidx = static_cast<size_t>(ny) * w + nx;
          if (mask[nidx] == 1) {
            mask[nidx] = 2;
            stack.push_back(nidx);
          }
        }
    }
    blobs.push_back(blob);
  }
  return blobs;
}

}  // namespace

std::optional<ImageLine> detect_markers(const Frame& frame) {
  std::vector<Blob> blobs = find_blobs(frame);
  blobs.erase(std::remove_if(blobs.begin(), blobs.end(),
                             [](const Blob& b) { return b.area < kMinComponentArea; }),
              blobs.end());
  if (blobs.size() < 2) return std::nullopt;
  std::sort(blobs.begin(), blobs.end(), [](const Blob& a, const Blob& b) {
    if (a.area != b.area) return a.area > b.area;
    return a.first_pixel < b.first_pixel;
  });
  Vec2 a = blobs[0].centroid();
  Vec2 b = blobs[1].centroid();
  if (a.v < b.v) std::swap(a, b);  // p1 is the lower image point
  return ImageLine{a, b};
}

std::optional<double> angle_from_markers(const Vec2& p1, const Vec2& p2) {
  Vec2 lo = p1, hi = p2;
  if (lo.v < hi.v) std::swap(lo, hi);
  const double dv = lo.v - hi.v;  // >= 0, the flipped-v rise
  const double du = lo.u - hi.u;
  if (std::abs(dv) < 1e-12 && std::abs(du) < 1e-12) return std::nullopt;
  if (std::abs(dv) < 1e-12) return 0.0;  // horizontal line, canonical 0
  // Measured so a line leaning like the CBL seen from the left of it
  // (receding up-left in the image) comes out acute.
  return std::atan2(dv, du);
}

std::optional<double> distance_from_markers(const Vec2& p1, const Vec2& p2,
                                            int image_width, int image_height) {
  if (std::abs(p1.v - p2.v) < 1e-12) return std::nullopt;
  const double mid_row = image_height / 2.0;
  const double u = p1.u + (p2.u - p1.u) * (mid_row - p1.v) / (p2.v - p1.v);
  return std::clamp(u / image_width, 0.0, 1.0);
}

std::optional<LabelPair> label_sample(const Frame& bisector_frame) {
  const auto line = detect_markers(bisector_frame);
  if (!line) return std::nullopt;
  const auto angle = angle_from_markers(line->p1, line->p2);
  if (!angle) return std::nullopt;
  if (std::abs(line->p1.v - line->p2.v) < 1e-12) return std::nullopt;
  // Range check on the raw midline crossing before the op-level clamp.
  const double mid_row = bisector_frame.height / 2.0;
  const double raw_u = line->p1.u + (line->p2.u - line->p1.u) *
                                        (mid_row - line->p1.v) / (line->p2.v - line->p1.v);
  const double raw_dist = raw_u / bisector_frame.width;
  if (raw_dist < 0.0 || raw_dist > 1.0) return std::nullopt;
  if (*angle < 0.0 || *angle > M_PI) return std::nullopt;
  return LabelPair{*angle, raw_dist};
}

}  // namespace corridornav
