#include "lmot/toy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace lmot::ald {

using namespace numerics;

namespace {

const Conv2dSpec kStemSpec{1, Padding::Zero, 1, 1};
const Conv2dSpec kHeadSpec{1, Padding::Zero, 1, 1};

}  // namespace

ToyNet toynet_init(int channels, std::uint64_t seed) {
    ToyNet net;
    net.channels = channels;
    net.stem_kernel = randn(channels, 1, 3, 3, seed ^ 0x51ecafULL, 1.0 / 3.0);
    net.ald = ald_init(channels, seed ^ 0xa1dULL);
    net.head_kernel = randn(1, channels, 3, 3, seed ^ 0x4eadULL, 1.0 / std::sqrt(9.0 * channels));
    return net;
}

ToyDataset make_toy_dataset(const ToyDataConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xb10bULL);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    const int hw = cfg.image_size;
    auto make_pair = [&](int sample_index) {
        ToyPair pair;
        pair.clean = Tensor(1, 1, hw, hw, 0.1);
        Tensor blob_map(1, 1, hw, hw);  // signal without background, drives the mask
        for (int b = 0; b < cfg.blobs_per_image; ++b) {
            const double cy = 3.0 + uni(rng) * (hw - 6.0);
            const double cx = 3.0 + uni(rng) * (hw - 6.0);
            const double amp = 0.5 + 0.3 * uni(rng);
            const double sigma = 1.2 + 0.6 * uni(rng);
            for (int y = 0; y < hw; ++y)
                for (int x = 0; x < hw; ++x) {
                    const double d2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                    blob_map.at(0, 0, y, x) += amp * std::exp(-d2 / (2 * sigma * sigma));
                }
        }
        for (int y = 0; y < hw; ++y)
            for (int x = 0; x < hw; ++x) {
                pair.clean.at(0, 0, y, x) =
                    std::min(1.0, pair.clean.at(0, 0, y, x) + blob_map.at(0, 0, y, x));
            }
        // half-resolution target: blob signal present in the 2x2 cell
        pair.target = Tensor(1, 1, hw / 2, hw / 2);
        for (int y = 0; y < hw / 2; ++y)
            for (int x = 0; x < hw / 2; ++x) {
                const double m = std::max({blob_map.at(0, 0, 2 * y, 2 * x), blob_map.at(0, 0, 2 * y, 2 * x + 1),
                                           blob_map.at(0, 0, 2 * y + 1, 2 * x),
                                           blob_map.at(0, 0, 2 * y + 1, 2 * x + 1)});
                pair.target.at(0, 0, y, x) = m > 0.3 ? 1.0 : 0.0;
            }
        // clean -> RAW counts -> physics noise -> normalize -> re-expose
        raw::RawFrame frame;
        frame.width = hw;
        frame.height = hw;
        frame.bit_depth = 12;
        frame.black_level = 240;
        frame.white_level = 4095;
        frame.frame_index = sample_index;
        frame.data.resize(static_cast<std::size_t>(hw) * hw);
        for (int y = 0; y < hw; ++y)
            for (int x = 0; x < hw; ++x) {
                frame.at(y, x) = static_cast<std::uint16_t>(
                    std::lround(240 + pair.clean.at(0, 0, y, x) * (4095 - 240)));
            }
        const raw::RawFrame noisy = noise::synthesize(frame, cfg.noise, seed ^ 0x5eedULL);
        pair.degraded = raw::exposure_scale(raw::normalize(noisy), 1.0 / cfg.noise.ratio);
        return pair;
    };

    ToyDataset ds;
    int index = 0;
    for (int i = 0; i < cfg.n_train; ++i) ds.train.push_back(make_pair(index++));
    for (int i = 0; i < cfg.n_heldout; ++i) ds.heldout.push_back(make_pair(index++));
    return ds;
}

namespace {

Tensor stack_pairs(const std::vector<ToyPair>& pairs, const Tensor ToyPair::*field) {
    const Tensor& first = pairs.front().*field;
    Tensor out(static_cast<long>(pairs.size()), first.c(), first.h(), first.w());
    long offset = 0;
    for (const auto& p : pairs) {
        const Tensor& t = p.*field;
        std::copy(t.data().begin(), t.data().end(), out.data().begin() + offset);
        offset += t.size();
    }
    return out;
}

struct BranchCache {
    Tensor s1, a1;  // stem pre/post relu
    ALDCache ald_cache;
    Tensor y, h;  // ald output, head logits
};

Tensor toy_forward(const ToyNet& net, const Tensor& x, BranchCache& cache) {
    cache.s1 = conv2d(x, net.stem_kernel, kStemSpec);
    cache.a1 = relu(cache.s1);
    cache.y = ald_forward(net.ald, cache.a1, cache.ald_cache);
    cache.h = conv2d(cache.y, net.head_kernel, kHeadSpec);
    return cache.h;
}

// numerically stable BCE-with-logits, mean reduction; fills grad wrt logits
double bce_with_logits(const Tensor& h, const Tensor& target, Tensor& grad_h) {
    if (!h.same_shape(target)) throw DimensionError("bce: logits/target shape mismatch");
    grad_h = Tensor(h.n(), h.c(), h.h(), h.w());
    const double inv = 1.0 / static_cast<double>(h.size());
    double loss = 0.0;
    for (long i = 0; i < h.size(); ++i) {
        const double z = h.data()[i];
        const double t = target.data()[i];
        loss += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
        const double p = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        grad_h.data()[i] = (p - t) * inv;
    }
    return loss * inv;
}

struct ParamGrads {
    Tensor stem, head;
    ALDGrads ald;
    bool init = false;
};

void accumulate(Tensor& dst, const Tensor& src) {
    for (long i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

// backward through one branch; DSL gradients on a1/y are added in by the caller
void branch_backward(const ToyNet& net, const Tensor& x, const BranchCache& cache, const Tensor& grad_h,
                     const Tensor& grad_y_extra, const Tensor& grad_a1_extra, ParamGrads& grads) {
    Conv2dGrads head_g = conv2d_backward(grad_h, cache.y, net.head_kernel, kHeadSpec);
    Tensor grad_y = head_g.grad_input;
    if (grad_y_extra.size() > 0) accumulate(grad_y, grad_y_extra);

    ALDGrads ald_g = ald_backward(net.ald, cache.ald_cache, grad_y);
    Tensor grad_a1 = ald_g.grad_x;
    if (grad_a1_extra.size() > 0) accumulate(grad_a1, grad_a1_extra);

    const Tensor grad_s1 = relu_backward(grad_a1, cache.s1);
    Conv2dGrads stem_g = conv2d_backward(grad_s1, x, net.stem_kernel, kStemSpec);

    if (!grads.init) {
        grads.stem = stem_g.grad_kernel;
        grads.head = head_g.grad_kernel;
        grads.ald = std::move(ald_g);
        grads.init = true;
    } else {
        accumulate(grads.stem, stem_g.grad_kernel);
        accumulate(grads.head, head_g.grad_kernel);
        accumulate(grads.ald.grad_sconv_logits, ald_g.grad_sconv_logits);
        accumulate(grads.ald.grad_down_kernel, ald_g.grad_down_kernel);
        accumulate(grads.ald.grad_fc_weights, ald_g.grad_fc_weights);
        for (std::size_t i = 0; i < grads.ald.grad_fc_bias.size(); ++i) {
            grads.ald.grad_fc_bias[i] += ald_g.grad_fc_bias[i];
        }
    }
}

Tensor scaled(const Tensor& t, double s) {
    Tensor out = t;
    for (double& v : out.data()) v *= s;
    return out;
}

double per_sample_feature_distance(const std::vector<Tensor>& well, const std::vector<Tensor>& low) {
    // mean over samples and layers of ||F_well - F_low||_2 / numel-per-sample
    double acc = 0.0;
    long terms = 0;
    for (std::size_t l = 0; l < well.size(); ++l) {
        const Tensor& a = well[l];
        const Tensor& b = low[l];
        const long per_sample = a.c() * a.h() * a.w();
        for (long n = 0; n < a.n(); ++n) {
            double sq = 0.0;
            for (long i = n * per_sample; i < (n + 1) * per_sample; ++i) {
                const double d = a.data()[i] - b.data()[i];
                sq += d * d;
            }
            acc += std::sqrt(sq) / static_cast<double>(per_sample);
            ++terms;
        }
    }
    return terms > 0 ? acc / terms : 0.0;
}

}  // namespace

ToyReport toy_train(const ToyTrainConfig& cfg) {
    if (cfg.steps < 0) throw ContractViolation("toy_train: steps must be >= 0");
    ToyDataConfig data_cfg = cfg.data;
    const ToyDataset ds = make_toy_dataset(data_cfg, cfg.seed);
    ToyNet net = toynet_init(cfg.channels, cfg.seed);

    const Tensor x_well = stack_pairs(ds.train, &ToyPair::clean);
    const Tensor x_low = stack_pairs(ds.train, &ToyPair::degraded);
    const Tensor target = stack_pairs(ds.train, &ToyPair::target);

    const DSLConfig dsl = cfg.dsl;
    double final_train_loss = 0.0;

    for (int step = 0; step < cfg.steps; ++step) {
        const double ramp =
            cfg.dsl_ramp && cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 1.0;
        const double beta = dsl.beta * ramp;
        const double gamma = dsl.gamma * ramp;
        BranchCache cw, cl;
        const Tensor h_w = toy_forward(net, x_well, cw);
        const Tensor h_l = toy_forward(net, x_low, cl);
        Tensor grad_h_w, grad_h_l;
        const double l_det_well = bce_with_logits(h_w, target, grad_h_w);
        const double l_det_low = bce_with_logits(h_l, target, grad_h_l);
        grad_h_l = scaled(grad_h_l, dsl.alpha);

        Tensor grad_y_w_extra, grad_a1_w_extra, grad_y_l_extra, grad_a1_l_extra;
        double l_ds = 0.0, l_tv = 0.0;
        if (cfg.use_dsl) {
            const std::vector<Tensor> f_well = {cw.a1, cw.y};
            const std::vector<Tensor> f_low = {cl.a1, cl.y};
            LossGrad ds_g = loss_ds(f_well, f_low, dsl.detach_well);
            LossGrad tv_g = loss_tv(f_low);
            l_ds = ds_g.value;
            l_tv = tv_g.value;
            grad_a1_l_extra = scaled(ds_g.grad_low[0], beta);
            accumulate(grad_a1_l_extra, scaled(tv_g.grad_low[0], gamma));
            grad_y_l_extra = scaled(ds_g.grad_low[1], beta);
            accumulate(grad_y_l_extra, scaled(tv_g.grad_low[1], gamma));
            if (!dsl.detach_well) {
                grad_a1_w_extra = scaled(ds_g.grad_well[0], beta);
                grad_y_w_extra = scaled(ds_g.grad_well[1], beta);
            }
        }
        const DSLConfig effective = cfg.use_dsl ? DSLConfig{dsl.alpha, beta, gamma, dsl.detach_well}
                                                 : DSLConfig{dsl.alpha, 0.0, 0.0, dsl.detach_well};
        final_train_loss = loss_total(l_det_well, l_det_low, cfg.use_dsl ? l_ds : 0.0,
                                      cfg.use_dsl ? l_tv : 0.0, effective);
        if (!std::isfinite(final_train_loss)) {
            throw TrainingError("toy_train: non-finite loss at step " + std::to_string(step));
        }

        ParamGrads grads;
        branch_backward(net, x_well, cw, grad_h_w, grad_y_w_extra, grad_a1_w_extra, grads);
        branch_backward(net, x_low, cl, grad_h_l, grad_y_l_extra, grad_a1_l_extra, grads);

        auto sgd = [&](Tensor& p, const Tensor& g) {
            for (long i = 0; i < p.size(); ++i) p.data()[i] -= cfg.lr * g.data()[i];
        };
        sgd(net.stem_kernel, grads.stem);
        sgd(net.head_kernel, grads.head);
        sgd(net.ald.sconv_logits, grads.ald.grad_sconv_logits);
        sgd(net.ald.down_kernel, grads.ald.grad_down_kernel);
        sgd(net.ald.fc_weights, grads.ald.grad_fc_weights);
        for (std::size_t i = 0; i < net.ald.fc_bias.size(); ++i) {
            net.ald.fc_bias[i] -= cfg.lr * grads.ald.grad_fc_bias[i];
        }
        net.stem_kernel.require_finite("stem kernel");
        net.ald.sconv_logits.require_finite("sconv logits");
    }

    // held-out evaluation
    const Tensor hx_well = stack_pairs(ds.heldout, &ToyPair::clean);
    const Tensor hx_low = stack_pairs(ds.heldout, &ToyPair::degraded);
    const Tensor htarget = stack_pairs(ds.heldout, &ToyPair::target);
    BranchCache cw, cl;
    const Tensor h_w = toy_forward(net, hx_well, cw);
    const Tensor h_l = toy_forward(net, hx_low, cl);
    Tensor tmp;
    ToyReport report;
    report.steps = cfg.steps;
    report.use_dsl = cfg.use_dsl;
    report.heldout_det_loss_well = bce_with_logits(h_w, htarget, tmp);
    report.heldout_det_loss_low = bce_with_logits(h_l, htarget, tmp);
    report.heldout_feature_distance = per_sample_feature_distance({cw.a1, cw.y}, {cl.a1, cl.y});
    report.final_train_loss = final_train_loss;

    auto snap = [&](const std::string& name, const Tensor& t) {
        report.param_snapshot.push_back(
            {name, {t.n(), t.c(), t.h(), t.w()}, t.data()});
    };
    snap("stem_kernel", net.stem_kernel);
    snap("ald.sconv_logits", net.ald.sconv_logits);
    snap("ald.down_kernel", net.ald.down_kernel);
    snap("ald.fc_weights", net.ald.fc_weights);
    report.param_snapshot.push_back(
        {"ald.fc_bias", {static_cast<long>(net.ald.fc_bias.size())}, net.ald.fc_bias});
    snap("head_kernel", net.head_kernel);
    return report;
}

std::string format_toy_report(const ToyReport& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(8);
    os << "steps=" << r.steps << "\n";
    os << "use_dsl=" << (r.use_dsl ? 1 : 0) << "\n";
    os << "heldout_feature_distance=" << r.heldout_feature_distance << "\n";
    os << "heldout_det_loss_well=" << r.heldout_det_loss_well << "\n";
    os << "heldout_det_loss_low=" << r.heldout_det_loss_low << "\n";
    os << "final_train_loss=" << r.final_train_loss << "\n";
    return os.str();
}

void write_toy_report(const ToyReport& report, const std::string& report_path,
                      const std::string& snapshot_path) {
    std::ofstream f(report_path);
    if (!f) throw IoError("cannot open " + report_path + " for writing");
    f << format_toy_report(report);
    io::write_blob(report.param_snapshot, snapshot_path);
}

}  // namespace lmot::ald
