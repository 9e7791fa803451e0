#include "dds/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <stdexcept>

namespace dds {

void SceneSpec::validate() const {
    if (height < 4 || width < 4) throw std::invalid_argument("scene height and width must be >= 4");
    if (classes < 1) throw std::invalid_argument("scene classes must be >= 1");
    if (classes > kMaxSynthClasses) {
        throw std::invalid_argument("scene classes " + std::to_string(classes) +
                                    " exceeds the palette limit of " +
                                    std::to_string(kMaxSynthClasses));
    }
    if (min_shapes < 0 || max_shapes < min_shapes) {
        throw std::invalid_argument("shape count range must satisfy 0 <= min_shapes <= max_shapes");
    }
    if (!(noise_sigma >= 0)) throw std::invalid_argument("noise_sigma must be >= 0");
}

const std::array<std::array<std::uint8_t, 3>, kMaxSynthClasses + 1>& synth_palette() {
    static const std::array<std::array<std::uint8_t, 3>, kMaxSynthClasses + 1> p{{
        {128, 128, 128},
        {230, 25, 75},  {60, 180, 75},   {255, 225, 25}, {0, 130, 200},
        {245, 130, 48}, {145, 30, 180},  {70, 240, 240}, {240, 50, 230},
        {210, 245, 60}, {250, 190, 212}, {0, 128, 128},  {170, 110, 40},
        {128, 0, 0},    {0, 0, 128},     {255, 255, 255}, {0, 0, 0},
    }};
    return p;
}

bool in_disk(int y, int x, int cy, int cx, int r) {
    const long dy = y - cy;
    const long dx = x - cx;
    return dy * dy + dx * dx <= static_cast<long>(r) * r;
}

namespace {

// Signed area test for the pixel centre against a triangle in either winding.
bool in_triangle(int y, int x, const std::array<int, 6>& t) {
    auto edge = [&](int ay, int ax, int by, int bx) {
        return static_cast<long>(bx - ax) * (y - ay) - static_cast<long>(by - ay) * (x - ax);
    };
    const long e0 = edge(t[0], t[1], t[2], t[3]);
    const long e1 = edge(t[2], t[3], t[4], t[5]);
    const long e2 = edge(t[4], t[5], t[0], t[1]);
    return (e0 >= 0 && e1 >= 0 && e2 >= 0) || (e0 <= 0 && e1 <= 0 && e2 <= 0);
}

}  // namespace

Scene generate_scene(const SceneSpec& spec, std::size_t index) {
    spec.validate();
    std::mt19937_64 rng(spec.seed + index);
    auto uniform = [&](int lo, int hi) {
        return std::uniform_int_distribution<int>(lo, hi)(rng);
    };
    const int H = spec.height;
    const int W = spec.width;
    const int extent = std::min(H, W);

    Scene scene;
    scene.seg.labels = LabelGrid(H, W, 0);
    auto& labels = scene.seg.labels;
    const int shapes = uniform(spec.min_shapes, spec.max_shapes);
    for (int s = 0; s < shapes; ++s) {
        const auto kind = static_cast<ShapeKind>(uniform(0, 2));
        const int cls = uniform(1, spec.classes);
        switch (kind) {
            case ShapeKind::Disk: {
                const int r = uniform(std::max(1, extent / 8), std::max(1, extent / 4));
                const int cy = uniform(0, H - 1);
                const int cx = uniform(0, W - 1);
                for (int y = std::max(0, cy - r); y <= std::min(H - 1, cy + r); ++y) {
                    for (int x = std::max(0, cx - r); x <= std::min(W - 1, cx + r); ++x) {
                        if (in_disk(y, x, cy, cx, r)) labels.at(y, x) = cls;
                    }
                }
                break;
            }
            case ShapeKind::Rectangle: {
                const int h = uniform(std::max(2, extent / 6), std::max(2, extent / 2));
                const int w = uniform(std::max(2, extent / 6), std::max(2, extent / 2));
                const int y0 = uniform(-h / 2, H - h / 2 - 1);
                const int x0 = uniform(-w / 2, W - w / 2 - 1);
                for (int y = std::max(0, y0); y < std::min(H, y0 + h); ++y) {
                    for (int x = std::max(0, x0); x < std::min(W, x0 + w); ++x) {
                        labels.at(y, x) = cls;
                    }
                }
                break;
            }
            case ShapeKind::Triangle: {
                const int cy = uniform(0, H - 1);
                const int cx = uniform(0, W - 1);
                const int span = std::max(2, extent / 3);
                std::array<int, 6> t;
                for (int v = 0; v < 3; ++v) {
                    t[2 * v] = cy + uniform(-span, span);
                    t[2 * v + 1] = cx + uniform(-span, span);
                }
                for (int y = 0; y < H; ++y) {
                    for (int x = 0; x < W; ++x) {
                        if (in_triangle(y, x, t)) labels.at(y, x) = cls;
                    }
                }
                break;
            }
        }
    }

    const auto& palette = synth_palette();
    scene.image = RgbImage(H, W);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (int y = 0; y < H; ++y) {
        for (int x = 0; x < W; ++x) {
            const auto& base = palette[labels.at(y, x)];
            for (int c = 0; c < 3; ++c) {
                const double n = spec.noise_sigma > 0 ? noise(rng) : 0.0;
                const double v = std::clamp(std::round(base[c] + n), 0.0, 255.0);
                scene.image.at(y, x, c) = static_cast<std::uint8_t>(v);
            }
        }
    }
    return scene;
}

std::vector<Scene> generate(const SceneSpec& spec, std::size_t n) {
    if (n < 1) throw std::invalid_argument("generate: need at least one scene");
    std::vector<Scene> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(generate_scene(spec, i));
    return out;
}

void write_dataset(const std::string& dir, const std::vector<Scene>& scenes, int K) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
    std::ofstream manifest(fs::path(dir) / "manifest.csv");
    if (!manifest) throw IoError("cannot write manifest in '" + dir + "'");
    manifest << "index,path_image,path_labels\n";
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof stem, "%04zu", i);
        const std::string image = std::string("image_") + stem + ".ppm";
        const std::string labels = std::string("labels_") + stem + ".pgm";
        const std::string edges = std::string("edges_") + stem + ".pgm";
        write_ppm((fs::path(dir) / image).string(), scenes[i].image);
        write_label_pgm((fs::path(dir) / labels).string(), scenes[i].seg.labels);
        write_edge_pgm((fs::path(dir) / edges).string(),
                       binary_edge_target(semantic_boundaries(scenes[i].seg, K)));
        manifest << i << ',' << image << ',' << labels << '\n';
    }
    manifest.flush();
    if (!manifest) throw IoError("failed writing manifest in '" + dir + "'");
}

}  // namespace dds
