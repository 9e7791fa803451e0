#include "dds/matching.hpp"

#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

namespace dds {

BipartiteMatcher::BipartiteMatcher(std::size_t left, std::size_t right)
    : left_(left), right_(right), adj_(left) {}

void BipartiteMatcher::add_edge(std::size_t u, std::size_t v) {
    if (u >= left_ || v >= right_) throw std::out_of_range("matcher edge out of range");
    adj_[u].push_back(v);
}

bool BipartiteMatcher::bfs() {
    std::queue<std::size_t> q;
    bool found = false;
    for (std::size_t u = 0; u < left_; ++u) {
        if (match_left_[u] == npos) {
            dist_[u] = 0;
            q.push(u);
        } else {
            dist_[u] = -1;
        }
    }
    while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop();
        for (std::size_t v : adj_[u]) {
            const std::size_t w = match_right_[v];
            if (w == npos) {
                found = true;
            } else if (dist_[w] < 0) {
                dist_[w] = dist_[u] + 1;
                q.push(w);
            }
        }
    }
    return found;
}

bool BipartiteMatcher::dfs(std::size_t u) {
    for (std::size_t& i = it_[u]; i < adj_[u].size(); ++i) {
        const std::size_t v = adj_[u][i];
        const std::size_t w = match_right_[v];
        if (w == npos || (dist_[w] == dist_[u] + 1 && dfs(w))) {
            match_left_[u] = v;
            match_right_[v] = u;
            ++i;
            return true;
        }
    }
    dist_[u] = -1;
    return false;
}

std::size_t BipartiteMatcher::solve() {
    match_left_.assign(left_, npos);
    match_right_.assign(right_, npos);
    dist_.assign(left_, -1);
    std::size_t matched = 0;
    while (bfs()) {
        it_.assign(left_, 0);
        for (std::size_t u = 0; u < left_; ++u) {
            if (match_left_[u] == npos && dfs(u)) ++matched;
        }
    }
    return matched;
}

double tolerance_radius(double tolerance, int height, int width) {
    return tolerance * std::sqrt(static_cast<double>(height) * height +
                                 static_cast<double>(width) * width);
}

MatchCounts match_edges_radius(const BinaryMap& pred, const BinaryMap& gt,
                               double radius_px) {
    if (!pred.same_dims(gt)) {
        throw std::invalid_argument("match_edges: prediction " +
                                    std::to_string(pred.height) + "x" +
                                    std::to_string(pred.width) + " vs ground truth " +
                                    std::to_string(gt.height) + "x" +
                                    std::to_string(gt.width));
    }
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> gt_index(gt.size(), none);
    std::size_t n_gt = 0;
    for (std::size_t i = 0; i < gt.size(); ++i) {
        if (gt.data[i]) gt_index[i] = n_gt++;
    }
    std::vector<std::size_t> pred_pixels;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred.data[i]) pred_pixels.push_back(i);
    }

    const int reach = static_cast<int>(std::floor(radius_px));
    const double r2 = radius_px * radius_px;
    BipartiteMatcher matcher(pred_pixels.size(), n_gt);
    for (std::size_t u = 0; u < pred_pixels.size(); ++u) {
        const int y = static_cast<int>(pred_pixels[u] / pred.width);
        const int x = static_cast<int>(pred_pixels[u] % pred.width);
        for (int dy = -reach; dy <= reach; ++dy) {
            for (int dx = -reach; dx <= reach; ++dx) {
                if (static_cast<double>(dy * dy + dx * dx) > r2) continue;
                const int ny = y + dy;
                const int nx = x + dx;
                if (!gt.inside(ny, nx)) continue;
                const std::size_t j = gt_index[static_cast<std::size_t>(ny) * gt.width + nx];
                if (j != none) matcher.add_edge(u, j);
            }
        }
    }
    const std::size_t matched = matcher.solve();
    MatchCounts c;
    c.tp_pred = matched;
    c.fp = pred_pixels.size() - matched;
    c.tp_gt = matched;
    c.fn = n_gt - matched;
    return c;
}

}  // namespace dds
