#include <gtest/gtest.h>

#include <random>

#include "dds/groundtruth.hpp"
#include "test_util.hpp"

using namespace dds;

namespace {

SegmentationMap seg_from(int h, int w, std::vector<int> labels) {
    SegmentationMap s{LabelGrid(h, w, 0), std::nullopt};
    s.labels.data = std::move(labels);
    return s;
}

BinaryMap map_from(int h, int w, std::vector<std::uint8_t> v) {
    BinaryMap m(h, w, 0);
    m.data = std::move(v);
    return m;
}

SegmentationMap disk_seg(int size, int cy, int cx, int r, int label) {
    SegmentationMap s{LabelGrid(size, size, 0), std::nullopt};
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            if ((y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r) s.labels.at(y, x) = label;
        }
    }
    return s;
}

}  // namespace

TEST(SemanticBoundaries, TwoByTwo) {
    const auto gt = semantic_boundaries(seg_from(2, 2, {1, 2, 0, 0}), 2);
    EXPECT_EQ(gt.per_class[0].data, (std::vector<std::uint8_t>{1, 0, 0, 0}));
    EXPECT_EQ(gt.per_class[1].data, (std::vector<std::uint8_t>{0, 1, 0, 0}));
    EXPECT_EQ(gt.union_map.data, (std::vector<std::uint8_t>{1, 1, 0, 0}));
    EXPECT_EQ(gt.thickness, Thickness::Thick);
}

TEST(SemanticBoundaries, UniformMapHasNoEdges) {
    for (int label : {0, 1}) {
        const auto gt = semantic_boundaries(seg_from(3, 3, std::vector<int>(9, label)), 1);
        EXPECT_EQ(count_on(gt.union_map), 0u);
    }
}

TEST(SemanticBoundaries, ImageBorderIsNotABoundary) {
    SegmentationMap s = seg_from(5, 5, std::vector<int>(25, 1));
    s.labels.at(2, 2) = 0;
    const auto gt = semantic_boundaries(s, 1);
    EXPECT_EQ(count_on(gt.per_class[0]), 8u);
    EXPECT_EQ(gt.per_class[0].at(0, 0), 0);
}

TEST(SemanticBoundaries, ThickDiskRing) {
    const auto gt = semantic_boundaries(disk_seg(21, 10, 10, 6, 1), 1);
    // Every boundary pixel lies on the disk and touches the outside.
    for (int y = 0; y < 21; ++y) {
        for (int x = 0; x < 21; ++x) {
            const int d2 = (y - 10) * (y - 10) + (x - 10) * (x - 10);
            if (gt.per_class[0].at(y, x)) {
                EXPECT_LE(d2, 36);
                EXPECT_GE(d2, 16);
            }
        }
    }
    EXPECT_EQ(count_components(gt.per_class[0]), 1);
}

TEST(SemanticBoundaries, AdjacentClassesBothGetEdges) {
    SegmentationMap s = seg_from(4, 4, std::vector<int>(16, 1));
    for (int y = 0; y < 4; ++y) s.labels.at(y, 2) = s.labels.at(y, 3) = 2;
    const auto gt = semantic_boundaries(s, 2);
    for (int y = 0; y < 4; ++y) {
        EXPECT_EQ(gt.per_class[0].at(y, 1), 1);
        EXPECT_EQ(gt.per_class[1].at(y, 2), 1);
        EXPECT_EQ(gt.per_class[0].at(y, 0), 0);
    }
}

TEST(SemanticBoundaries, LabelPermutationPermutesMaps) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> d(0, 3);
    SegmentationMap s{LabelGrid(12, 12, 0), std::nullopt};
    for (auto& v : s.labels.data) v = d(rng);
    const int perm[4] = {0, 3, 1, 2};
    SegmentationMap p = s;
    for (auto& v : p.labels.data) v = perm[v];
    const auto a = semantic_boundaries(s, 3);
    const auto b = semantic_boundaries(p, 3);
    for (int k = 1; k <= 3; ++k) EXPECT_EQ(a.per_class[k - 1], b.per_class[perm[k] - 1]);
    EXPECT_EQ(a.union_map, b.union_map);
}

TEST(SemanticBoundaries, RejectsBadLabels) {
    EXPECT_THROW(semantic_boundaries(seg_from(1, 2, {0, 3}), 2), std::out_of_range);
    EXPECT_THROW(semantic_boundaries(seg_from(1, 2, {-1, 0}), 2), std::out_of_range);
    SegmentationMap s = seg_from(1, 2, {0, 1});
    s.ignore = BinaryMap(2, 2, 0);
    EXPECT_THROW(semantic_boundaries(s, 1), std::out_of_range);
}

TEST(Thin, ThickBarBecomesLine) {
    BinaryMap m(7, 12, 0);
    for (int y = 2; y <= 4; ++y) {
        for (int x = 1; x <= 10; ++x) m.at(y, x) = 1;
    }
    const BinaryMap t = thin(m);
    EXPECT_TRUE(is_unit_width(t));
    EXPECT_EQ(count_components(t), 1);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t.data[i]) EXPECT_TRUE(m.data[i]);
    }
    for (int x = 3; x <= 8; ++x) EXPECT_EQ(t.at(2, x) + t.at(4, x), 0) << x;
}

TEST(Thin, SinglePixelAndLineAreFixed) {
    const BinaryMap dot = map_from(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
    EXPECT_EQ(thin(dot), dot);
    BinaryMap diag(6, 6, 0);
    for (int i = 0; i < 6; ++i) diag.at(i, i) = 1;
    EXPECT_EQ(thin(diag), diag);
}

TEST(Thin, TwoByTwoBlockKeepsOnePixel) {
    const BinaryMap block = map_from(4, 4, {0, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 0});
    const BinaryMap t = thin(block);
    EXPECT_GE(count_on(t), 1u);
    EXPECT_TRUE(is_unit_width(t));
    EXPECT_EQ(count_components(t), 1);
}

TEST(Thin, RingKeepsItsHole) {
    BinaryMap ring(16, 16, 0);
    for (int y = 0; y < 16; ++y) {
        for (int x = 0; x < 16; ++x) {
            const int d2 = (y - 8) * (y - 8) + (x - 8) * (x - 8);
            ring.at(y, x) = d2 <= 36 && d2 >= 9;
        }
    }
    const BinaryMap t = thin(ring);
    EXPECT_TRUE(is_unit_width(t));
    EXPECT_EQ(count_components(t), 1);
    EXPECT_EQ(t.at(8, 8), 0);
    EXPECT_GE(count_on(t), 16u);
}

TEST(Thin, RandomBlobsUnitWidthIdempotentSubset) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 60; ++trial) {
        const BinaryMap m = fixtures::random_blobs(24, 24, rng);
        const BinaryMap t = thin(m);
        EXPECT_TRUE(is_unit_width(t));
        EXPECT_EQ(thin(t), t);
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t.data[i]) ASSERT_TRUE(m.data[i]);
        }
        EXPECT_LE(count_components(t), count_components(m));
        if (count_on(m) > 0) EXPECT_GT(count_on(t), 0u);
    }
}

TEST(Thin, GroundTruthUnionRebuilt) {
    const auto thick = semantic_boundaries(disk_seg(20, 9, 9, 6, 2), 2);
    const auto t = thin(thick);
    EXPECT_EQ(t.thickness, Thickness::Thin);
    EXPECT_EQ(t.union_map, binary_union(t));
    EXPECT_EQ(count_on(t.per_class[0]), 0u);
    EXPECT_EQ(binary_edge_target(thick), thin(thick.union_map));
}

TEST(Downsample, TopLeftSamples) {
    SegmentationMap s = seg_from(4, 4, {1, 2, 3, 0, 2, 2, 0, 0, 3, 3, 1, 1, 3, 3, 1, 1});
    const auto d = downsample_protocol(s, 2);
    EXPECT_EQ(d.labels.data, (std::vector<int>{1, 3, 3, 1}));
    EXPECT_THROW(downsample_protocol(s, 3), std::invalid_argument);
    EXPECT_THROW(downsample_protocol(s, 0), std::invalid_argument);
    EXPECT_EQ(downsample_protocol(s, 1).labels, s.labels);
}

TEST(Downsample, CheckerboardBlocksStayConsistent) {
    // 2x2 blocks of alternating classes: downsampling gives a per-pixel
    // checkerboard whose boundaries are re-derived, not resampled.
    SegmentationMap s{LabelGrid(8, 8, 0), std::nullopt};
    for (int y = 0; y < 8; ++y) {
        for (int x = 0; x < 8; ++x) s.labels.at(y, x) = 1 + ((y / 2 + x / 2) % 2);
    }
    const auto d = downsample_protocol(s, 2);
    for (int y = 0; y < 4; ++y) {
        for (int x = 0; x < 4; ++x) EXPECT_EQ(d.labels.at(y, x), 1 + (y + x) % 2);
    }
    const auto gt = semantic_boundaries(d, 2);
    EXPECT_EQ(count_on(gt.union_map), 16u);
}

TEST(Downsample, IgnoreMaskFollows) {
    SegmentationMap s = seg_from(2, 2, {1, 1, 1, 1});
    s.ignore = map_from(2, 2, {1, 0, 0, 0});
    const auto d = downsample_protocol(s, 2);
    ASSERT_TRUE(d.ignore);
    EXPECT_EQ(d.ignore->at(0, 0), 1);
}

TEST(Components, Counts) {
    EXPECT_EQ(count_components(map_from(3, 3, {1, 0, 1, 0, 0, 0, 1, 0, 1})), 4);
    EXPECT_EQ(count_components(map_from(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1})), 1);
    EXPECT_EQ(count_components(BinaryMap(3, 3, 0)), 0);
}
