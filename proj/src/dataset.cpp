#include "dds/dataset.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dds/ops.hpp"

namespace dds {

Sample make_sample(RgbImage image, SegmentationMap seg, int K) {
    if (image.height != seg.height() || image.width != seg.width()) {
        throw std::invalid_argument("image is " + std::to_string(image.height) + "x" +
                                    std::to_string(image.width) + " but labels are " +
                                    std::to_string(seg.height()) + "x" +
                                    std::to_string(seg.width()));
    }
    Sample s;
    s.image = std::move(image);
    s.seg = std::move(seg);
    s.thick = semantic_boundaries(s.seg, K);
    s.binary = binary_edge_target(s.thick);
    return s;
}

std::vector<Sample> make_dataset(const std::vector<Scene>& scenes, int K) {
    std::vector<Sample> out;
    out.reserve(scenes.size());
    for (const auto& sc : scenes) out.push_back(make_sample(sc.image, sc.seg, K));
    return out;
}

std::vector<Sample> load_dataset(const std::string& dir, int K) {
    namespace fs = std::filesystem;
    const fs::path manifest_path = fs::path(dir) / "manifest.csv";
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open '" + manifest_path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "index,path_image,path_labels") {
        throw IoError("'" + manifest_path.string() + "' has an unexpected header");
    }
    std::vector<Sample> out;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string index, image, labels;
        if (!std::getline(ss, index, ',') || !std::getline(ss, image, ',') ||
            !std::getline(ss, labels)) {
            throw IoError("'" + manifest_path.string() + "' line " + std::to_string(lineno) +
                          " is malformed");
        }
        SegmentationMap seg;
        seg.labels = read_label_pgm((fs::path(dir) / labels).string());
        try {
            out.push_back(make_sample(read_ppm((fs::path(dir) / image).string()),
                                      std::move(seg), K));
        } catch (const std::logic_error& e) {
            throw IoError("'" + manifest_path.string() + "' line " + std::to_string(lineno) +
                          ": " + e.what());
        }
    }
    if (out.empty()) throw IoError("'" + manifest_path.string() + "' lists no images");
    return out;
}

Tensor image_tensor(const RgbImage& image) {
    Tensor t(Shape{1, 3, image.height, image.width});
    for (int c = 0; c < 3; ++c) {
        Real* p = t.plane(0, c);
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                p[y * image.width + x] = image.at(y, x, c) / Real{255} - Real{0.5};
            }
        }
    }
    return t;
}

std::vector<ProbMap> predict(const ModelGraph& model, const RgbImage& image) {
    Tape tape;
    const SideOutputs out = forward(model, tape, image_tensor(image));
    const int K = model.classes;
    const int H = image.height;
    const int W = image.width;
    std::vector<ProbMap> probs(K, ProbMap(H, W, 0.0));
    if (model.variant.kind == Variant::Softmax) {
        const Tensor& a = out.side5->value();
        for (std::size_t p = 0; p < a.shape().plane(); ++p) {
            Real mx = a.plane(0, 0)[p];
            for (int c = 1; c <= K; ++c) mx = std::max(mx, a.plane(0, c)[p]);
            Real z = 0;
            for (int c = 0; c <= K; ++c) z += std::exp(a.plane(0, c)[p] - mx);
            for (int k = 0; k < K; ++k) probs[k].data[p] = std::exp(a.plane(0, k + 1)[p] - mx) / z;
        }
        return probs;
    }
    const Tensor& a = (out.fused ? *out.fused : *out.side5).value();
    for (int k = 0; k < K; ++k) {
        for (std::size_t p = 0; p < a.shape().plane(); ++p) {
            probs[k].data[p] = ops::stable_sigmoid(a.plane(0, k)[p]);
        }
    }
    return probs;
}

}  // namespace dds
