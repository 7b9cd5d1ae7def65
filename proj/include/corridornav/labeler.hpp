#pragma once

#include <optional>

#include "corridornav/render.hpp"

namespace corridornav {

// The two supervision targets recovered from a bisector frame.
struct LabelPair {
  double angle = 0.0;     // radians, [0, pi]
  double distance = 0.0;  // unit interval
};

// Centroids of the two largest marker-red connected components (8-way),
// each above 2 px area, ordered with the lower image point (larger v) first.
// nullopt = MarkersNotFound.
std::optional<ImageLine> detect_markers(const Frame& frame);

// Angle of the infinite line p1-p2 against the bottom image boundary in
// [0, pi], with the v axis flipped to standard orientation. A vertical line
// gives pi/2; the angle is measured so that the configuration produced by a
// UAV left of the CBL comes out acute. nullopt = DegenerateLine.
std::optional<double> angle_from_markers(const Vec2& p1, const Vec2& p2);

// u of the line p1-p2 at the vertical-midline row, normalized by image width
// and clamped to [0, 1]. nullopt = DegenerateLine (points coincide or the
// line is parallel to the midline row).
std::optional<double> distance_from_markers(const Vec2& p1, const Vec2& p2,
                                            int image_width, int image_height);

// Full pipeline on one bisector frame. nullopt = sample discarded
// (MarkersNotFound, DegenerateLine, or a recovered value out of range
// before clamping).
std::optional<LabelPair> label_sample(const Frame& bisector_frame);

}  // namespace corridornav
