#include "dds/groundtruth.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace dds {

void validate(const SegmentationMap& seg, int K) {
    if (K < 1) throw std::invalid_argument("class count must be >= 1");
    for (std::size_t i = 0; i < seg.labels.size(); ++i) {
        const int l = seg.labels.data[i];
        if (l < 0 || l > K) {
            throw std::out_of_range("label " + std::to_string(l) + " at pixel " +
                                    std::to_string(i) + " outside [0, " +
                                    std::to_string(K) + "]");
        }
    }
    if (seg.ignore && !seg.ignore->same_dims(seg.labels)) {
        throw std::out_of_range("ignore mask dims differ from label map");
    }
}

EdgeGroundTruth semantic_boundaries(const SegmentationMap& seg, int K) {
    validate(seg, K);
    const int H = seg.height();
    const int W = seg.width();
    EdgeGroundTruth gt;
    gt.thickness = Thickness::Thick;
    gt.per_class.assign(K, BinaryMap(H, W, 0));
    gt.union_map = BinaryMap(H, W, 0);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const int k = seg.labels.at(y, x);
            if (k == 0) continue;
            bool boundary = false;
            for (int dy = -1; dy <= 1 && !boundary; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int ny = y + dy;
                    const int nx = x + dx;
                    if (!seg.labels.inside(ny, nx)) continue;
                    if (seg.labels.at(ny, nx) != k) {
                        boundary = true;
                        break;
                    }
                }
            }
            if (boundary) {
                gt.per_class[k - 1].at(y, x) = 1;
                gt.union_map.at(y, x) = 1;
            }
        }
    }
    return gt;
}

BinaryMap binary_union(const EdgeGroundTruth& gt) {
    if (gt.per_class.empty()) return gt.union_map;
    BinaryMap out(gt.per_class.front().height, gt.per_class.front().width, 0);
    for (const auto& m : gt.per_class) {
        for (std::size_t i = 0; i < m.size(); ++i) out.data[i] |= m.data[i] != 0;
    }
    return out;
}

namespace {

// One Guo-Hall sub-iteration. Neighbours are labelled clockwise from north:
// p2=N p3=NE p4=E p5=SE p6=S p7=SW p8=W p9=NW.
bool guo_hall_pass(BinaryMap& img, int parity) {
    const int H = img.height;
    const int W = img.width;
    auto px = [&](int y, int x) -> int {
        return img.inside(y, x) && img.at(y, x) ? 1 : 0;
    };
    std::vector<std::size_t> remove;
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            if (!img.at(y, x)) continue;
            const int p2 = px(y - 1, x);
            const int p3 = px(y - 1, x + 1);
            const int p4 = px(y, x + 1);
            const int p5 = px(y + 1, x + 1);
            const int p6 = px(y + 1, x);
            const int p7 = px(y + 1, x - 1);
            const int p8 = px(y, x - 1);
            const int p9 = px(y - 1, x - 1);

            const int C = ((1 - p2) & (p3 | p4)) + ((1 - p4) & (p5 | p6)) +
                          ((1 - p6) & (p7 | p8)) + ((1 - p8) & (p9 | p2));
            const int N1 = (p9 | p2) + (p3 | p4) + (p5 | p6) + (p7 | p8);
            const int N2 = (p2 | p3) + (p4 | p5) + (p6 | p7) + (p8 | p9);
            const int N = N1 < N2 ? N1 : N2;
            const int m = parity == 0 ? ((p6 | p7 | (1 - p9)) & p8)
                                      : ((p2 | p3 | (1 - p5)) & p4);
            if (C == 1 && N >= 2 && N <= 3 && m == 0) {
                remove.push_back(static_cast<std::size_t>(y) * W + x);
            }
        }
    }
    for (auto i : remove) img.data[i] = 0;
    return !remove.empty();
}

// Deleting a simple pixel keeps both the foreground 8-components and the
// background 4-components unchanged.
bool is_simple(const BinaryMap& img, int y, int x) {
    static constexpr int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    static constexpr int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    int on[8];
    for (int k = 0; k < 8; ++k) {
        const int ny = y + dy[k];
        const int nx = x + dx[k];
        on[k] = img.inside(ny, nx) && img.at(ny, nx) ? 1 : 0;
    }
    if (on[0] && on[2] && on[4] && on[6]) return false;
    int seen = 0;
    int components = 0;
    for (int s = 0; s < 8; ++s) {
        if (!on[s] || (seen >> s & 1)) continue;
        ++components;
        int stack[8];
        int top = 0;
        stack[top++] = s;
        seen |= 1 << s;
        while (top > 0) {
            const int a = stack[--top];
            for (int b = 0; b < 8; ++b) {
                if (!on[b] || (seen >> b & 1)) continue;
                if (std::abs(dy[a] - dy[b]) <= 1 && std::abs(dx[a] - dx[b]) <= 1) {
                    seen |= 1 << b;
                    stack[top++] = b;
                }
            }
        }
    }
    return components == 1;
}

// Removes simple pixels from fully-on 2x2 blocks, scanning in raster order.
bool unit_width_pass(BinaryMap& img) {
    bool changed = false;
    for (int y = 0; y + 1 < img.height; ++y) {
        for (int x = 0; x + 1 < img.width; ++x) {
            if (!(img.at(y, x) && img.at(y, x + 1) && img.at(y + 1, x) &&
                  img.at(y + 1, x + 1))) {
                continue;
            }
            const int cy[4] = {y, y, y + 1, y + 1};
            const int cx[4] = {x, x + 1, x, x + 1};
            for (int k = 0; k < 4; ++k) {
                if (is_simple(img, cy[k], cx[k])) {
                    img.at(cy[k], cx[k]) = 0;
                    changed = true;
                    break;
                }
            }
        }
    }
    return changed;
}

}  // namespace

BinaryMap thin(const BinaryMap& edges) {
    BinaryMap img = edges;
    for (auto& v : img.data) v = v != 0;
    while (true) {
        const bool a = guo_hall_pass(img, 0);
        const bool b = guo_hall_pass(img, 1);
        if (a || b) continue;
        // Guo-Hall can stall on 2x2 blocks at junctions.
        if (!unit_width_pass(img)) break;
    }
    return img;
}

EdgeGroundTruth thin(const EdgeGroundTruth& gt) {
    EdgeGroundTruth out;
    out.thickness = Thickness::Thin;
    for (const auto& m : gt.per_class) out.per_class.push_back(thin(m));
    out.union_map = binary_union(out);
    return out;
}

BinaryMap binary_edge_target(const EdgeGroundTruth& thick) {
    return thin(binary_union(thick));
}

SegmentationMap downsample_protocol(const SegmentationMap& seg, int factor) {
    if (factor < 1) throw std::invalid_argument("downsample factor must be >= 1");
    if (seg.height() % factor != 0 || seg.width() % factor != 0) {
        throw std::invalid_argument("downsample factor " + std::to_string(factor) +
                                    " does not divide " + std::to_string(seg.height()) +
                                    "x" + std::to_string(seg.width()));
    }
    if (factor == 1) return seg;
    SegmentationMap out{LabelGrid(seg.height() / factor, seg.width() / factor, 0),
                        std::nullopt};
    if (seg.ignore) out.ignore.emplace(out.height(), out.width(), 0);
    for (int y = 0; y < out.height(); ++y) {
        for (int x = 0; x < out.width(); ++x) {
            out.labels.at(y, x) = seg.labels.at(y * factor, x * factor);
            if (seg.ignore) out.ignore->at(y, x) = seg.ignore->at(y * factor, x * factor);
        }
    }
    return out;
}

bool is_unit_width(const BinaryMap& m) {
    for (int y = 0; y + 1 < m.height; ++y) {
        for (int x = 0; x + 1 < m.width; ++x) {
            if (m.at(y, x) && m.at(y, x + 1) && m.at(y + 1, x) && m.at(y + 1, x + 1)) {
                return false;
            }
        }
    }
    return true;
}

int count_components(const BinaryMap& m) {
    std::vector<char> seen(m.size(), 0);
    int components = 0;
    std::vector<std::pair<int, int>> stack;
    for (int y = 0; y < m.height; ++y) {
        for (int x = 0; x < m.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * m.width + x;
            if (!m.data[i] || seen[i]) continue;
            ++components;
            seen[i] = 1;
            stack.emplace_back(y, x);
            while (!stack.empty()) {
                auto [cy, cx] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int ny = cy + dy;
                        const int nx = cx + dx;
                        if (!m.inside(ny, nx)) continue;
                        const std::size_t j = static_cast<std::size_t>(ny) * m.width + nx;
                        if (m.data[j] && !seen[j]) {
                            seen[j] = 1;
                            stack.emplace_back(ny, nx);
                        }
                    }
                }
            }
        }
    }
    return components;
}

}  // namespace dds
