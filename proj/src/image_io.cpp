#include "dds/image_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

namespace dds {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

void finish(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("failed writing '" + path + "'");
}

// Reads one header integer, skipping whitespace and '#' comments.
int header_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) throw IoError("malformed header in '" + path + "'");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1 << 24) throw IoError("header value too large in '" + path + "'");
        c = in.get();
    }
    // Exactly one whitespace byte separates the header from the raster.
    if (c == EOF || !std::isspace(c)) throw IoError("malformed header in '" + path + "'");
    return static_cast<int>(v);
}

struct Header {
    int width, height, maxval;
};

Header read_header(std::istream& in, const std::string& path, const char* magic) {
    char m[2];
    if (!in.read(m, 2) || m[0] != magic[0] || m[1] != magic[1]) {
        throw IoError("'" + path + "' is not a " + magic + " file");
    }
    Header h{};
    h.width = header_int(in, path);
    h.height = header_int(in, path);
    h.maxval = header_int(in, path);
    if (h.width <= 0 || h.height <= 0 || h.maxval <= 0 || h.maxval > 65535) {
        throw IoError("invalid dimensions or maxval in '" + path + "'");
    }
    return h;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

}  // namespace

void write_ppm(const std::string& path, const RgbImage& image) {
    auto out = open_out(path);
    out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.rgb.data()),
              static_cast<std::streamsize>(image.rgb.size()));
    finish(out, path);
}

RgbImage read_ppm(const std::string& path) {
    auto in = open_in(path);
    const Header h = read_header(in, path, "P6");
    if (h.maxval != 255) throw IoError("'" + path + "': only maxval 255 is supported");
    RgbImage img(h.height, h.width);
    if (!in.read(reinterpret_cast<char*>(img.rgb.data()),
                 static_cast<std::streamsize>(img.rgb.size()))) {
        throw IoError("'" + path + "' is truncated");
    }
    return img;
}

void write_pgm(const std::string& path, const Grid<int>& values, int maxval) {
    if (maxval <= 0 || maxval > 65535) throw IoError("PGM maxval must lie in [1, 65535]");
    auto out = open_out(path);
    out << "P5\n" << values.width << ' ' << values.height << '\n' << maxval << '\n';
    const bool wide = maxval > 255;
    std::vector<char> raw(values.size() * (wide ? 2 : 1));
    for (std::size_t i = 0; i < values.size(); ++i) {
        const int v = values.data[i];
        if (v < 0 || v > maxval) {
            throw IoError("sample " + std::to_string(v) + " exceeds maxval " +
                          std::to_string(maxval) + " writing '" + path + "'");
        }
        if (wide) {
            raw[2 * i] = static_cast<char>(v >> 8);
            raw[2 * i + 1] = static_cast<char>(v & 0xFF);
        } else {
            raw[i] = static_cast<char>(v);
        }
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    finish(out, path);
}

Grid<int> read_pgm(const std::string& path, int* maxval) {
    auto in = open_in(path);
    const Header h = read_header(in, path, "P5");
    const bool wide = h.maxval > 255;
    Grid<int> g(h.height, h.width, 0);
    std::vector<unsigned char> raw(g.size() * (wide ? 2 : 1));
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw IoError("'" + path + "' is truncated");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        g.data[i] = wide ? (raw[2 * i] << 8 | raw[2 * i + 1]) : raw[i];
        if (g.data[i] > h.maxval) throw IoError("sample exceeds maxval in '" + path + "'");
    }
    if (maxval) *maxval = h.maxval;
    return g;
}

void write_label_pgm(const std::string& path, const LabelGrid& labels) {
    write_pgm(path, labels, 65535);
}

LabelGrid read_label_pgm(const std::string& path) { return read_pgm(path); }

void write_edge_pgm(const std::string& path, const BinaryMap& edges) {
    Grid<int> g(edges.height, edges.width, 0);
    for (std::size_t i = 0; i < edges.size(); ++i) g.data[i] = edges.data[i] ? 255 : 0;
    write_pgm(path, g, 255);
}

BinaryMap read_edge_pgm(const std::string& path) {
    const Grid<int> g = read_pgm(path);
    BinaryMap out(g.height, g.width, 0);
    for (std::size_t i = 0; i < g.size(); ++i) out.data[i] = g.data[i] != 0;
    return out;
}

void write_prob_pgm(const std::string& path, const ProbMap& prob) {
    Grid<int> g(prob.height, prob.width, 0);
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double p = prob.data[i];
        if (!(p >= 0 && p <= 1)) throw IoError("probability outside [0, 1] writing '" + path + "'");
        g.data[i] = static_cast<int>(std::lround(p * 255));
    }
    write_pgm(path, g, 255);
}

ProbMap read_prob_pgm(const std::string& path) {
    int maxval = 0;
    const Grid<int> g = read_pgm(path, &maxval);
    ProbMap out(g.height, g.width, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        out.data[i] = static_cast<double>(g.data[i]) / maxval;
    }
    return out;
}

}  // namespace dds
