#include "lmot/raw.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <png.h>

#include <json.hpp>

namespace lmot::raw {

using numerics::Tensor;

std::string pattern_name(BayerPattern p) {
    switch (p) {
        case BayerPattern::RGGB: return "RGGB";
        case BayerPattern::BGGR: return "BGGR";
        case BayerPattern::GRBG: return "GRBG";
        case BayerPattern::GBRG: return "GBRG";
    }
    return "RGGB";
}

BayerPattern pattern_from_name(const std::string& name) {
    if (name == "RGGB") return BayerPattern::RGGB;
    if (name == "BGGR") return BayerPattern::BGGR;
    if (name == "GRBG") return BayerPattern::GRBG;
    if (name == "GBRG") return BayerPattern::GBRG;
    throw FormatError("unknown bayer pattern '" + name + "'");
}

void RawFrame::validate() const {
    if (width <= 0 || height <= 0 || width % 2 != 0 || height % 2 != 0) {
        throw FormatError("raw frame dims must be positive and even, got " + std::to_string(width) + "x" +
                          std::to_string(height));
    }
    if (bit_depth != 8 && bit_depth != 10 && bit_depth != 12) {
        throw FormatError("unsupported bit depth " + std::to_string(bit_depth));
    }
    const int max_count = (1 << bit_depth) - 1;
    if (black_level < 0 || black_level >= white_level || white_level > max_count) {
        throw FormatError("invalid levels: black " + std::to_string(black_level) + ", white " +
                          std::to_string(white_level) + " at " + std::to_string(bit_depth) + " bits");
    }
    if (data.size() != static_cast<std::size_t>(width) * height) {
        throw FormatError("raw data size " + std::to_string(data.size()) + " != " +
                          std::to_string(static_cast<std::size_t>(width) * height));
    }
    for (std::uint16_t v : data) {
        if (v > max_count) {
            throw FormatError("sample " + std::to_string(v) + " exceeds " + std::to_string(bit_depth) +
                              "-bit range");
        }
    }
}

Tensor normalize(const RawFrame& raw) {
    raw.validate();
    Tensor t(1, 1, raw.height, raw.width);
    const double scale = 1.0 / (raw.white_level - raw.black_level);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) {
            t.at(0, 0, y, x) = std::clamp((raw.at(y, x) - raw.black_level) * scale, 0.0, 1.0);
        }
    return t;
}

RawFrame requantize(const RawFrame& raw, int target_bit_depth) {
    raw.validate();
    if (target_bit_depth > raw.bit_depth) {
        throw ContractViolation("requantize: cannot raise bit depth " + std::to_string(raw.bit_depth) +
                                " -> " + std::to_string(target_bit_depth));
    }
    const int shift = raw.bit_depth - target_bit_depth;
    RawFrame out = raw;
    out.bit_depth = target_bit_depth;
    out.black_level = raw.black_level >> shift;
    out.white_level = raw.white_level >> shift;
    for (std::uint16_t& v : out.data) v = static_cast<std::uint16_t>(v >> shift);
    return out;
}

namespace {

int reflect_idx(int t, int size) {
    if (size == 1) return 0;
    while (t < 0 || t >= size) {
        if (t < 0) t = -t;
        if (t >= size) t = 2 * size - 2 - t;
    }
    return t;
}

// 0 = R, 1 = G, 2 = B at mosaic position (y, x)
int site_color(BayerPattern p, int y, int x) {
    const int r = y & 1, c = x & 1;
    switch (p) {
        case BayerPattern::RGGB: return (r == 0) ? (c == 0 ? 0 : 1) : (c == 0 ? 1 : 2);
        case BayerPattern::BGGR: return (r == 0) ? (c == 0 ? 2 : 1) : (c == 0 ? 1 : 0);
        case BayerPattern::GRBG: return (r == 0) ? (c == 0 ? 1 : 0) : (c == 0 ? 2 : 1);
        case BayerPattern::GBRG: return (r == 0) ? (c == 0 ? 1 : 2) : (c == 0 ? 0 : 1);
    }
    return 1;
}

}  // namespace

RgbImage demosaic_bilinear(const RawFrame& raw) {
    const Tensor norm = normalize(raw);
    RgbImage img;
    img.width = raw.width;
    img.height = raw.height;
    img.data.assign(static_cast<std::size_t>(raw.width) * raw.height * 3, 0.0);
    for (int y = 0; y < raw.height; ++y)
        for (int x = 0; x < raw.width; ++x) {
            const int own = site_color(raw.pattern, y, x);
            for (int ch = 0; ch < 3; ++ch) {
                if (ch == own) {
                    img.at(y, x, ch) = norm.at(0, 0, y, x);
                    continue;
                }
                double acc = 0.0;
                int cnt = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int sy = reflect_idx(y + dy, raw.height);
                        const int sx = reflect_idx(x + dx, raw.width);
                        if (site_color(raw.pattern, y + dy, x + dx) == ch) {
                            acc += norm.at(0, 0, sy, sx);
                            ++cnt;
                        }
                    }
                img.at(y, x, ch) = cnt > 0 ? acc / cnt : 0.0;
            }
        }
    return img;
}

RgbImage simple_isp(const RawFrame& raw, double gain_r, double gain_g, double gain_b, double gamma) {
    if (gain_r <= 0 || gain_g <= 0 || gain_b <= 0 || gamma <= 0) {
        throw ContractViolation("simple_isp: gains and gamma must be positive");
    }
    RgbImage img = demosaic_bilinear(raw);
    const double gains[3] = {gain_r, gain_g, gain_b};
    const double inv_gamma = 1.0 / gamma;
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                double v = std::clamp(img.at(y, x, ch) * gains[ch], 0.0, 1.0);
                img.at(y, x, ch) = std::pow(v, inv_gamma);
            }
    return img;
}

RgbImage exposure_scale(const RgbImage& img, double ratio) {
    if (ratio <= 0) throw ContractViolation("exposure_scale: ratio must be positive");
    RgbImage out = img;
    for (double& v : out.data) v = std::clamp(v * ratio, 0.0, 1.0);
    return out;
}

Tensor exposure_scale(const Tensor& t, double ratio) {
    if (ratio <= 0) throw ContractViolation("exposure_scale: ratio must be positive");
    Tensor out = t;
    for (double& v : out.data()) v = std::clamp(v * ratio, 0.0, 1.0);
    return out;
}

namespace {

std::string sidecar_path(const std::string& raw_path) {
    std::filesystem::path p(raw_path);
    p.replace_extension(".json");
    return p.string();
}

}  // namespace

void save_raw(const RawFrame& raw, const std::string& path) {
    raw.validate();
    {
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoError("cannot open " + path + " for writing");
        for (std::uint16_t v : raw.data) {
            const unsigned char bytes[2] = {static_cast<unsigned char>(v & 0xff),
                                            static_cast<unsigned char>(v >> 8)};
            f.write(reinterpret_cast<const char*>(bytes), 2);
        }
        if (!f) throw IoError("write failed: " + path);
    }
    nlohmann::json j;
    j["width"] = raw.width;
    j["height"] = raw.height;
    j["bit_depth"] = raw.bit_depth;
    j["bayer_pattern"] = pattern_name(raw.pattern);
    j["black_level"] = raw.black_level;
    j["white_level"] = raw.white_level;
    j["frame_index"] = raw.frame_index;
    j["timestamp"] = raw.timestamp;
    std::ofstream f(sidecar_path(path));
    if (!f) throw IoError("cannot open " + sidecar_path(path) + " for writing");
    f << j.dump(2) << "\n";
}

RawFrame load_raw(const std::string& path) {
    nlohmann::json j;
    {
        std::ifstream f(sidecar_path(path));
        if (!f) throw IoError("missing sidecar " + sidecar_path(path));
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("bad sidecar " + sidecar_path(path) + ": " + e.what());
        }
    }
    RawFrame raw;
    try {
        raw.width = j.at("width").get<int>();
        raw.height = j.at("height").get<int>();
        raw.bit_depth = j.at("bit_depth").get<int>();
        raw.pattern = pattern_from_name(j.at("bayer_pattern").get<std::string>());
        raw.black_level = j.at("black_level").get<int>();
        raw.white_level = j.at("white_level").get<int>();
        raw.frame_index = j.value("frame_index", 0);
        raw.timestamp = j.value("timestamp", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("bad sidecar " + sidecar_path(path) + ": " + e.what());
    }
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    const std::size_t count = static_cast<std::size_t>(raw.width) * raw.height;
    raw.data.resize(count);
    std::vector<unsigned char> buf(count * 2);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(f.gcount()) != buf.size()) {
        throw FormatError(path + ": expected " + std::to_string(buf.size()) + " bytes");
    }
    for (std::size_t i = 0; i < count; ++i) {
        raw.data[i] = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
    }
    raw.validate();
    return raw;
}

void save_png(const RgbImage& img, const std::string& path) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw IoError("cannot open " + path + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        std::fclose(fp);
        throw IoError("libpng failure writing " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * 3);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) {
                const double v = std::clamp(img.at(y, x, ch), 0.0, 1.0);
                row[static_cast<std::size_t>(x) * 3 + ch] = static_cast<unsigned char>(std::lround(v * 255.0));
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

}  // namespace lmot::raw
