#pragma once

// Post-processing of detected 2D line segments: merge near-collinear abutting
// fragments, then drop short segments.

#include <span>
#include <vector>

#include "plkcalib/geometry.hpp"

namespace plkcalib::preprocess {

struct MergeConfig {
  double merge_dist_px = 5.0;
  double merge_angle_deg = 2.0;
  double min_length_px = 20.0;

  void validate() const;
};

struct SegmentSet {
  std::vector<LineSegment2D> segments;
  MergeConfig config;
};

/// Acute angle between the undirected segment directions, degrees in [0, 90].
double undirected_angle_deg(const LineSegment2D& a, const LineSegment2D& b);

/// Smallest distance over the four endpoint pairs.
double min_endpoint_distance(const LineSegment2D& a, const LineSegment2D& b);

/// True iff some endpoint pair is closer than merge_dist_px and the segments
/// differ in direction by less than merge_angle_deg.
bool should_merge(const LineSegment2D& a, const LineSegment2D& b, const MergeConfig& cfg = {});

/// Replaces each connected component of the should_merge graph by a single
/// segment spanning the extremal endpoint projections onto the component's
/// principal axis, repeats until stable, then removes segments shorter than
/// min_length_px. The output is sorted, so it does not depend on input order.
SegmentSet merge_all(const SegmentSet& set);

}  // namespace plkcalib::preprocess
