#pragma once

#include <cstddef>
#include <vector>

#include "dds/grid.hpp"

namespace dds {

/// Maximum-cardinality matching on a bipartite graph (Hopcroft-Karp).
/// Left vertices are 0..left-1, right vertices 0..right-1.
class BipartiteMatcher {
   public:
    BipartiteMatcher(std::size_t left, std::size_t right);

    void add_edge(std::size_t u, std::size_t v);
    std::size_t solve();

    /// Right partner of left vertex u after solve(), or npos.
    std::size_t partner_of_left(std::size_t u) const { return match_left_[u]; }
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

   private:
    bool bfs();
    bool dfs(std::size_t u);

    std::size_t left_;
    std::size_t right_;
    std::vector<std::vector<std::size_t>> adj_;
    std::vector<std::size_t> match_left_;
    std::vector<std::size_t> match_right_;
    std::vector<int> dist_;
    std::vector<std::size_t> it_;
};

struct MatchCounts {
    std::size_t tp_pred = 0;
    std::size_t fp = 0;
    std::size_t tp_gt = 0;
    std::size_t fn = 0;

    std::size_t predicted() const { return tp_pred + fp; }
    std::size_t ground_truth() const { return tp_gt + fn; }
    MatchCounts& operator+=(const MatchCounts& o) {
        tp_pred += o.tp_pred;
        fp += o.fp;
        tp_gt += o.tp_gt;
        fn += o.fn;
        return *this;
    }
    bool operator==(const MatchCounts&) const = default;
};

/// Matches on-pixels of `pred` to on-pixels of `gt` one-to-one, allowing a
/// pair when their Euclidean distance is <= radius_px, and maximizing the
/// number of matched pairs. Throws std::invalid_argument on dim mismatch.
MatchCounts match_edges_radius(const BinaryMap& pred, const BinaryMap& gt,
                               double radius_px);

/// Matching radius in pixels for a tolerance expressed as a fraction of the
/// image diagonal.
double tolerance_radius(double tolerance, int height, int width);

}  // namespace dds
