#include "plkcalib/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include <Eigen/Eigenvalues>

namespace plkcalib::preprocess {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

bool lex_less(const Vec2& a, const Vec2& b) {
  return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
}

bool segment_less(const LineSegment2D& a, const LineSegment2D& b) {
  return std::make_tuple(a.start().x(), a.start().y(), a.end().x(), a.end().y()) <
         std::make_tuple(b.start().x(), b.start().y(), b.end().x(), b.end().y());
}

LineSegment2D merge_cluster(const std::vector<const LineSegment2D*>& members) {
  std::vector<Vec2> pts;
  pts.reserve(2 * members.size());
  for (const auto* s : members) {
    pts.push_back(s->start());
    pts.push_back(s->end());
  }
  // Fixed summation order makes the result independent of member order.
  std::sort(pts.begin(), pts.end(), lex_less);

  Vec2 centroid = Vec2::Zero();
  for (const auto& p : pts) centroid += p;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix2d scatter = Eigen::Matrix2d::Zero();
  for (const auto& p : pts) scatter += (p - centroid) * (p - centroid).transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(scatter);
  Vec2 axis = es.eigenvectors().col(1);
  if (axis.x() < 0.0 || (axis.x() == 0.0 && axis.y() < 0.0)) axis = -axis;

  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -tmin;
  for (const auto& p : pts) {
    const double t = (p - centroid).dot(axis);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
  }
  return {centroid + tmin * axis, centroid + tmax * axis};
}

/// One union-find pass. Returns true if any component had more than one member.
bool merge_pass(std::vector<LineSegment2D>& segs, const MergeConfig& cfg) {
  const std::size_t n = segs.size();
  DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (should_merge(segs[i], segs[j], cfg)) sets.unite(i, j);
    }
  }
  std::vector<std::vector<const LineSegment2D*>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[sets.find(i)].push_back(&segs[i]);

  bool merged = false;
  std::vector<LineSegment2D> out;
  out.reserve(n);
  for (const auto& c : clusters) {
    if (c.empty()) continue;
    if (c.size() == 1) {
      out.push_back(*c.front());
    } else {
      out.push_back(merge_cluster(c));
      merged = true;
    }
  }
  std::sort(out.begin(), out.end(), segment_less);
  segs = std::move(out);
  return merged;
}

}  // namespace

void MergeConfig::validate() const {
  if (!(merge_dist_px > 0.0) || !(merge_angle_deg > 0.0) || !(min_length_px > 0.0)) {
    throw CalibError(ErrorCode::InvalidConfig, "merge thresholds must be positive");
  }
}

double undirected_angle_deg(const LineSegment2D& a, const LineSegment2D& b) {
  const double c = std::min(1.0, std::abs(a.direction().dot(b.direction())));
  return rad2deg(std::acos(c));
}

double min_endpoint_distance(const LineSegment2D& a, const LineSegment2D& b) {
  return std::min({(a.start() - b.start()).norm(), (a.start() - b.end()).norm(),
                   (a.end() - b.start()).norm(), (a.end() - b.end()).norm()});
}

bool should_merge(const LineSegment2D& a, const LineSegment2D& b, const MergeConfig& cfg) {
  return min_endpoint_distance(a, b) < cfg.merge_dist_px &&
         undirected_angle_deg(a, b) < cfg.merge_angle_deg;
}

SegmentSet merge_all(const SegmentSet& set) {
  set.config.validate();
  SegmentSet out{set.segments, set.config};
  std::sort(out.segments.begin(), out.segments.end(), segment_less);

  // Merged extents can bring new neighbours into range; iterate to a fixed
  // point so a second call is a no-op.
  constexpr int kMaxPasses = 1000;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    if (!merge_pass(out.segments, out.config)) break;
  }

  std::erase_if(out.segments, [&](const LineSegment2D& s) {
    return s.length() < out.config.min_length_px;
  });
  return out;
}

}  // namespace plkcalib::preprocess
