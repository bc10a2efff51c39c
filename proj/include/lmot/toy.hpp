#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lmot/ald.hpp"
#include "lmot/blob.hpp"
#include "lmot/noise.hpp"

namespace lmot::ald {

/// Stem conv + ALD block + head conv producing a per-pixel score map at half
/// resolution; small enough to train with plain SGD on synthetic blob scenes.
struct ToyNet {
    int channels = 4;
    Tensor stem_kernel;  // (C,1,3,3), stride 1, zero pad 1
    ALDBlock ald;
    Tensor head_kernel;  // (1,C,3,3), stride 1, zero pad 1
};

ToyNet toynet_init(int channels, std::uint64_t seed);

struct ToyPair {
    Tensor clean;    // (1,1,H,W) in [0,1]
    Tensor degraded; // (1,1,H,W) in [0,1], noise-synthesized and re-exposed
    Tensor target;   // (1,1,H/2,W/2) binary blob mask
};

struct ToyDataConfig {
    int image_size = 16;
    int n_train = 8;
    int n_heldout = 4;
    int blobs_per_image = 2;
    // desk-scale sensor defaults: physics model, K=4, read 6, row 2, 1 LSB, ~1/33 exposure
    noise::NoiseParams noise{noise::NoiseKind::Physics, 4.0, 6.0, 2.0, 1.0, 0.0, 0.0, 0.03};
};

struct ToyDataset {
    std::vector<ToyPair> train;
    std::vector<ToyPair> heldout;
};

ToyDataset make_toy_dataset(const ToyDataConfig& cfg, std::uint64_t seed);

struct ToyTrainConfig {
    /// Feature/smoothness weights rescaled for this experiment: the raw-sum
    /// losses run over thousands of elements, so the headline weights would
    /// drown the mean-reduced detection loss.
    DSLConfig dsl{1.0, 0.0025, 1e-5, true};
    bool use_dsl = true;
    /// Ramp the feature/smoothness weights linearly from 0 to their full value
    /// over training, so the detector is shaped before features are aligned.
    bool dsl_ramp = true;
    int steps = 500;
    double lr = 0.05;
    std::uint64_t seed = 7;
    int channels = 8;
    ToyDataConfig data;
};

struct ToyReport {
    int steps = 0;
    bool use_dsl = true;
    /// mean over held-out pairs and DSL layers of ||F_well - F_low||_2 / numel
    double heldout_feature_distance = 0.0;
    double heldout_det_loss_well = 0.0;
    double heldout_det_loss_low = 0.0;
    double final_train_loss = 0.0;
    std::vector<io::BlobEntry> param_snapshot;
};

ToyReport toy_train(const ToyTrainConfig& cfg);

/// Line-oriented key=value report (param snapshot excluded).
std::string format_toy_report(const ToyReport& report);
void write_toy_report(const ToyReport& report, const std::string& report_path,
                      const std::string& snapshot_path);

}  // namespace lmot::ald
