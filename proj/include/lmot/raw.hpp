#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmot/tensor.hpp"

namespace lmot::raw {

enum class BayerPattern { RGGB, BGGR, GRBG, GBRG };

std::string pattern_name(BayerPattern p);
BayerPattern pattern_from_name(const std::string& name);

/// Single Bayer mosaic frame in sensor counts.
struct RawFrame {
    int width = 0;
    int height = 0;
    int bit_depth = 12;  // 8, 10 or 12
    BayerPattern pattern = BayerPattern::RGGB;
    int black_level = 240;
    int white_level = 4095;
    std::vector<std::uint16_t> data;  // row-major, width*height
    int frame_index = 0;
    double timestamp = 0.0;

    std::uint16_t at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint16_t& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }

    /// Throws FormatError if any invariant is broken.
    void validate() const;
};

/// Interleaved RGB in [0,1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<double> data;  // 3 * width * height, RGB

    double at(int y, int x, int ch) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
    double& at(int y, int x, int ch) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + ch]; }
};

/// (v - black) / (white - black), clamped to [0,1]; output shape (1,1,H,W).
numerics::Tensor normalize(const RawFrame& raw);

/// Hardware-style truncation: right shift samples and levels by the depth difference.
RawFrame requantize(const RawFrame& raw, int target_bit_depth);

/// Per-channel bilinear interpolation on the normalized mosaic, reflected borders.
RgbImage demosaic_bilinear(const RawFrame& raw);

/// normalize -> demosaic -> white balance gains -> clamp -> x^(1/gamma).
RgbImage simple_isp(const RawFrame& raw, double gain_r, double gain_g, double gain_b, double gamma);

RgbImage exposure_scale(const RgbImage& img, double ratio);
numerics::Tensor exposure_scale(const numerics::Tensor& t, double ratio);

/// .raw16 blob (little-endian u16) + .json sidecar. `path` is the .raw16 path;
/// the sidecar lives next to it with extension .json.
void save_raw(const RawFrame& raw, const std::string& path);
RawFrame load_raw(const std::string& path);

/// 8-bit RGB PNG for human inspection.
void save_png(const RgbImage& img, const std::string& path);

}  // namespace lmot::raw
