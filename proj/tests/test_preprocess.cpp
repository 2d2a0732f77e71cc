#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "plkcalib/preprocess.hpp"

namespace plkcalib::preprocess {
namespace {

LineSegment2D seg(double u0, double v0, double u1, double v1) { return {{u0, v0}, {u1, v1}}; }

// Segment of `length` starting at `start`, direction `deg` from the u axis.
LineSegment2D polar(const Vec2& start, double deg, double length) {
  const double a = deg2rad(deg);
  return {start, start + length * Vec2(std::cos(a), std::sin(a))};
}

bool same_endpoints(const LineSegment2D& s, const Vec2& a, const Vec2& b, double tol) {
  return ((s.start() - a).norm() < tol && (s.end() - b).norm() < tol) ||
         ((s.start() - b).norm() < tol && (s.end() - a).norm() < tol);
}

SegmentSet make_set(std::vector<LineSegment2D> segs) { return {std::move(segs), {}}; }

TEST(ShouldMerge, AbuttingCollinearFragments) {
  EXPECT_TRUE(should_merge(seg(0, 0, 50, 0), seg(53, 0, 100, 0)));
}

TEST(ShouldMerge, AngleCriterionFails) {
  EXPECT_FALSE(should_merge(seg(0, 0, 50, 0), polar({53, 0}, 5.0, 50)));
}

TEST(ShouldMerge, DistanceCriterionFails) {
  EXPECT_FALSE(should_merge(seg(0, 0, 50, 0), seg(60, 0, 100, 0)));
}

TEST(ShouldMerge, UndirectedAngle) {
  EXPECT_TRUE(should_merge(seg(0, 0, 50, 0), seg(100, 0, 52, 0)));
  EXPECT_NEAR(undirected_angle_deg(seg(0, 0, 1, 0), seg(0, 0, -1, 0.01)), rad2deg(std::atan(0.01)), 1e-12);
}

TEST(ShouldMerge, DistanceThresholdBoundary) {
  const auto a = seg(0, 0, 100, 0);
  EXPECT_TRUE(should_merge(a, seg(104.9, 0, 200, 0)));
  EXPECT_FALSE(should_merge(a, seg(105.1, 0, 200, 0)));
}

TEST(ShouldMerge, AngleThresholdBoundary) {
  const auto a = seg(0, 0, 100, 0);
  EXPECT_TRUE(should_merge(a, polar({101, 0}, 1.9, 100)));
  EXPECT_FALSE(should_merge(a, polar({101, 0}, 2.1, 100)));
}

TEST(ShouldMerge, UsesClosestEndpointPair) {
  EXPECT_DOUBLE_EQ(min_endpoint_distance(seg(0, 0, 10, 0), seg(30, 0, 13, 0)), 3.0);
}

TEST(MergeAll, EmptySet) { EXPECT_TRUE(merge_all(make_set({})).segments.empty()); }

TEST(MergeAll, TwoFragmentsBecomeExtremalSpan) {
  const auto out = merge_all(make_set({seg(0, 0, 30, 0), seg(33, 0, 60, 0)}));
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_TRUE(same_endpoints(out.segments[0], {0, 0}, {60, 0}, 1e-9));
}

TEST(MergeAll, ExtremalProjectionOracleForTiltedLine) {
  const Vec2 d = Vec2(3.0, 4.0).normalized();
  const Vec2 o(100.0, 50.0);
  const auto out = merge_all(make_set({LineSegment2D(o, o + 40.0 * d),
                                       LineSegment2D(o + 42.0 * d, o + 90.0 * d),
                                       LineSegment2D(o + 93.0 * d, o + 130.0 * d)}));
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_TRUE(same_endpoints(out.segments[0], o, o + 130.0 * d, 1e-9));
}

TEST(MergeAll, ChainsMergeTransitively) {
  // a-c are 36 px apart, but a-b and b-c each abut.
  const auto out = merge_all(make_set({seg(0, 0, 30, 0), seg(32, 0, 64, 0), seg(66, 0, 100, 0)}));
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_NEAR(out.segments[0].length(), 100.0, 1e-9);
}

TEST(MergeAll, IsolatedShortSegmentRemoved) {
  EXPECT_TRUE(merge_all(make_set({seg(10, 10, 25, 10)})).segments.empty());
}

TEST(MergeAll, LengthThresholdBoundary) {
  const auto out = merge_all(make_set({seg(0, 0, 19, 0), seg(0, 100, 21, 100)}));
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_NEAR(out.segments[0].length(), 21.0, 1e-12);
}

TEST(MergeAll, ShortFragmentsSurviveJointly) {
  const auto out = merge_all(make_set({seg(0, 0, 12, 0), seg(14, 0, 26, 0)}));
  ASSERT_EQ(out.segments.size(), 1u);
  EXPECT_NEAR(out.segments[0].length(), 26.0, 1e-9);
}

TEST(MergeAll, MergeBoundaryCorpora) {
  EXPECT_EQ(merge_all(make_set({seg(0, 0, 100, 0), seg(104.9, 0, 200, 0)})).segments.size(), 1u);
  EXPECT_EQ(merge_all(make_set({seg(0, 0, 100, 0), seg(105.1, 0, 200, 0)})).segments.size(), 2u);
  EXPECT_EQ(merge_all(make_set({seg(0, 0, 100, 0), polar({101, 0}, 1.9, 100)})).segments.size(), 1u);
  EXPECT_EQ(merge_all(make_set({seg(0, 0, 100, 0), polar({101, 0}, 2.1, 100)})).segments.size(), 2u);
}

TEST(MergeConfig, Validation) {
  MergeConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.merge_angle_deg = 0.0;
  EXPECT_THROW(cfg.validate(), CalibError);
  cfg = {};
  cfg.min_length_px = -1.0;
  EXPECT_THROW(cfg.validate(), CalibError);
}

// Fragmented corpus: `lines` long lines, each cut into pieces with small gaps
// and sub-threshold angular jitter, plus some short clutter.
struct Corpus {
  std::vector<LineSegment2D> segments;
  std::vector<std::vector<std::size_t>> groups;
};

Corpus fragmented_corpus(unsigned seed, int lines) {
  std::mt19937 eng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Corpus c;
  for (int i = 0; i < lines; ++i) {
    const double angle = 180.0 * U(eng);
    Vec2 cursor(600.0 * i + 50.0, 80.0 + 300.0 * U(eng));
    std::vector<std::size_t> group;
    const int pieces = 2 + static_cast<int>(3 * U(eng));
    for (int k = 0; k < pieces; ++k) {
      const double jitter = 0.6 * (U(eng) - 0.5);
      const auto s = polar(cursor, angle + jitter, 25.0 + 40.0 * U(eng));
      group.push_back(c.segments.size());
      c.segments.push_back(s);
      const double a = deg2rad(angle);
      cursor = s.end() + (1.0 + 2.0 * U(eng)) * Vec2(std::cos(a), std::sin(a));
    }
    c.groups.push_back(group);
  }
  for (int k = 0; k < 5; ++k) {
    const Vec2 p(600.0 * lines + 100.0 * k, 40.0 * k);
    c.segments.push_back(polar(p, 37.0 * k, 10.0 + k));
  }
  return c;
}

TEST(MergeAllProperties, FragmentedCorpusYieldsFewerLongerSegments) {
  const auto corpus = fragmented_corpus(1, 6);
  const auto out = merge_all(make_set(corpus.segments));
  EXPECT_EQ(out.segments.size(), corpus.groups.size());
  for (const auto& s : out.segments) EXPECT_GT(s.length(), 50.0);
}

TEST(MergeAllProperties, Idempotent) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto once = merge_all(make_set(fragmented_corpus(seed, 5).segments));
    const auto twice = merge_all(once);
    EXPECT_EQ(once.segments, twice.segments) << "seed " << seed;
  }
}

TEST(MergeAllProperties, OrderIndependent) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    auto segs = fragmented_corpus(seed, 5).segments;
    const auto reference = merge_all(make_set(segs));
    std::mt19937 eng(seed + 1000);
    for (int trial = 0; trial < 5; ++trial) {
      std::shuffle(segs.begin(), segs.end(), eng);
      for (auto& s : segs) {
        if (eng() % 2) s = LineSegment2D(s.end(), s.start());
      }
      EXPECT_EQ(merge_all(make_set(segs)).segments, reference.segments) << "seed " << seed;
    }
  }
}

TEST(MergeAllProperties, CountLengthAndDirectionBounds) {
  for (unsigned seed = 0; seed < 20; ++seed) {
    const auto corpus = fragmented_corpus(seed, 5);
    const auto out = merge_all(make_set(corpus.segments));
    const MergeConfig cfg;
    EXPECT_LE(out.segments.size(), corpus.segments.size());
    for (const auto& s : out.segments) EXPECT_GE(s.length(), cfg.min_length_px);
    for (const auto& group : corpus.groups) {
      // The merged segment is the output closest to the group's first fragment.
      const auto& first = corpus.segments[group.front()];
      const auto it = std::min_element(out.segments.begin(), out.segments.end(),
                                       [&](const LineSegment2D& a, const LineSegment2D& b) {
                                         return min_endpoint_distance(a, first) <
                                                min_endpoint_distance(b, first);
                                       });
      ASSERT_NE(it, out.segments.end());
      for (const auto idx : group) {
        EXPECT_LT(undirected_angle_deg(*it, corpus.segments[idx]), cfg.merge_angle_deg);
      }
    }
  }
}

}  // namespace
}  // namespace plkcalib::preprocess
