#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "lmot/config.hpp"
#include "lmot/gradsuite.hpp"
#include "lmot/metrics.hpp"
#include "lmot/mot_io.hpp"
#include "lmot/noise.hpp"
#include "lmot/raw.hpp"
#include "lmot/toy.hpp"
#include "lmot/tracker.hpp"

namespace fs = std::filesystem;
using namespace lmot;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> overrides;
    int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "key=value config file");
    cmd->add_option("--set", opts.overrides, "config override key=value (repeatable)");
    cmd->add_option("--jobs", opts.jobs, "worker threads (results independent of N)")
        ->check(CLI::Range(1, 64));
}

cli::RunConfig load_config(const CommonOpts& opts) {
    cli::RunConfig cfg = cli::RunConfig::load(opts.config_path, opts.overrides);
    std::printf("config_hash=%016llx\n", static_cast<unsigned long long>(cfg.hash()));
    return cfg;
}

noise::NoiseParams noise_from_config(const cli::RunConfig& cfg) {
    noise::NoiseParams p;
    const std::string kind = cfg.get_string("noise.kind", "physics");
    if (kind == "physics") {
        p.kind = noise::NoiseKind::Physics;
    } else if (kind == "gaussian_poisson") {
        p.kind = noise::NoiseKind::GaussianPoisson;
    } else {
        throw ContractViolation("noise.kind must be physics or gaussian_poisson");
    }
    p.K = cfg.get_double("noise.K", 1.0);
    p.sigma_read = cfg.get_double("noise.sigma_read", 1.0);
    p.sigma_row = cfg.get_double("noise.sigma_row", 0.0);
    p.quant_step = cfg.get_double("noise.quant_step", 0.0);
    p.gp_a = cfg.get_double("noise.gp_a", 0.0);
    p.gp_b = cfg.get_double("noise.gp_b", 0.0);
    p.ratio = cfg.get_double("noise.ratio", 1.0);
    p.validate();
    return p;
}

track::TrackerConfig tracker_from_config(const cli::RunConfig& cfg) {
    track::TrackerConfig t;
    t.tau_high = cfg.get_double("tracker.tau_high", t.tau_high);
    t.tau_low = cfg.get_double("tracker.tau_low", t.tau_low);
    t.iou_gate_stage1 = cfg.get_double("tracker.iou_gate_stage1", t.iou_gate_stage1);
    t.iou_gate_stage2 = cfg.get_double("tracker.iou_gate_stage2", t.iou_gate_stage2);
    t.max_age = cfg.get_int("tracker.max_age", t.max_age);
    t.min_hits = cfg.get_int("tracker.min_hits", t.min_hits);
    t.appearance_weight = cfg.get_double("tracker.appearance_weight", t.appearance_weight);
    t.ocm_weight = cfg.get_double("tracker.ocm_weight", t.ocm_weight);
    t.use_oru = cfg.get_bool("tracker.use_oru", t.use_oru);
    t.interp_max_gap = cfg.get_int("tracker.interp_max_gap", t.interp_max_gap);
    t.fps = cfg.get_double("tracker.fps", t.fps);
    t.ema_momentum = cfg.get_double("tracker.ema_momentum", t.ema_momentum);
    t.validate();
    return t;
}

int cmd_synth(const std::string& in_seq, const std::string& out_seq, const CommonOpts& opts,
              std::uint64_t seed, bool verify) {
    const cli::RunConfig cfg = load_config(opts);
    const noise::NoiseParams params = noise_from_config(cfg);
    const io::Sequence seq = io::load_sequence(in_seq);
    if (seq.raw_frames.empty()) throw FormatError(in_seq + ": no raw frames");
    fs::create_directories(fs::path(out_seq) / "raw");

    std::vector<std::string> out_paths(seq.raw_frames.size());
    auto worker = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const raw::RawFrame clean = raw::load_raw(seq.raw_frames[i]);
            const raw::RawFrame noisy = noise::synthesize(clean, params, seed);
            const std::string name = fs::path(seq.raw_frames[i]).filename().string();
            out_paths[i] = (fs::path(out_seq) / "raw" / name).string();
            raw::save_raw(noisy, out_paths[i]);
        }
    };
    if (opts.jobs <= 1) {
        worker(0, seq.raw_frames.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t n = seq.raw_frames.size();
        const std::size_t chunk = (n + opts.jobs - 1) / opts.jobs;
        for (int j = 0; j < opts.jobs; ++j) {
            const std::size_t b = std::min(n, j * chunk), e = std::min(n, (j + 1) * chunk);
            if (b < e) pool.emplace_back(worker, b, e);
        }
        for (auto& t : pool) t.join();
    }
    // copy seqinfo + provenance
    for (const char* name : {"seqinfo", "seqinfo.ini"}) {
        if (fs::exists(fs::path(in_seq) / name)) {
            fs::copy_file(fs::path(in_seq) / name, fs::path(out_seq) / name,
                          fs::copy_options::overwrite_existing);
            break;
        }
    }
    {
        std::ofstream prov(fs::path(out_seq) / "synth_provenance.txt");
        prov << "seed=" << seed << "\n" << "frames=" << seq.raw_frames.size() << "\n" << cfg.resolved_text();
    }
    std::printf("synthesized %zu frames -> %s\n", seq.raw_frames.size(), out_seq.c_str());

    if (verify) {
        // Monte-Carlo variance check on a constant frame at s = 100 counts
        raw::RawFrame flat;
        flat.width = 1000;
        flat.height = 1000;
        flat.bit_depth = 12;
        flat.black_level = 240;
        flat.white_level = 4095;
        const double s = 100.0 / params.ratio;  // darkened back to 100 by synthesize
        flat.data.assign(1000000, static_cast<std::uint16_t>(std::lround(240 + s)));
        const raw::RawFrame noisy = noise::synthesize(flat, params, seed + 1);
        double mean = 0;
        for (auto v : noisy.data) mean += v - 240.0;
        mean /= static_cast<double>(noisy.data.size());
        double var = 0;
        for (auto v : noisy.data) var += (v - 240.0 - mean) * (v - 240.0 - mean);
        var /= static_cast<double>(noisy.data.size() - 1);
        const double expected = noise::model_variance(std::lround(s) * params.ratio, params);
        std::printf("verify: sample_var=%.3f model_var=%.3f\n", var, expected);
        if (expected > 0 && std::abs(var - expected) / expected > 0.05) {
            std::fprintf(stderr, "verify FAILED: variance off by more than 5%%\n");
            return 1;
        }
        std::printf("verify OK\n");
    }
    return 0;
}

int cmd_track(const std::string& det_path, const std::string& out_path, const CommonOpts& opts,
              bool no_interp) {
    const cli::RunConfig cfg = load_config(opts);
    const track::TrackerConfig tcfg = tracker_from_config(cfg);
    const std::vector<track::Detection> dets = io::parse_det(det_path);

    std::map<int, std::vector<track::Detection>> by_frame;
    int max_frame = 0;
    for (const auto& d : dets) {
        by_frame[d.frame].push_back(d);
        max_frame = std::max(max_frame, d.frame);
    }
    track::TrackerEngine engine(tcfg);
    std::vector<track::ResultRow> rows;
    std::ofstream timing(out_path + ".timing.txt");
    for (int f = 1; f <= max_frame; ++f) {
        const auto t0 = std::chrono::steady_clock::now();
        auto it = by_frame.find(f);
        const auto snap = engine.step(f, it == by_frame.end() ? std::vector<track::Detection>{} : it->second);
        rows.insert(rows.end(), snap.begin(), snap.end());
        const auto t1 = std::chrono::steady_clock::now();
        timing << f << " " << std::chrono::duration<double, std::milli>(t1 - t0).count() << "\n";
    }
    if (!no_interp) rows = track::linear_interpolation(std::move(rows), tcfg.interp_max_gap);
    io::write_result(rows, out_path);
    std::printf("tracked %d frames, %zu result rows -> %s\n", max_frame, rows.size(), out_path.c_str());
    return 0;
}

int cmd_eval(const std::string& gt_path, const std::string& result_path, const CommonOpts& opts,
             const std::string& out_prefix) {
    const cli::RunConfig cfg = load_config(opts);
    const io::ParsedTable gt = io::parse_gt(gt_path);
    const std::vector<track::ResultRow> pred = io::parse_result(result_path);
    const double iou_thr = cfg.get_double("metrics.iou_thr", 0.5);
    const double min_vis = cfg.get_double("metrics.min_visibility", 0.0);
    const std::string mode_str = cfg.get_string("metrics.mode", "det_avg");

    std::vector<metrics::CombineMode> modes;
    if (mode_str == "det_avg") modes = {metrics::CombineMode::DetAvg};
    else if (mode_str == "class_avg") modes = {metrics::CombineMode::ClassAvg};
    else if (mode_str == "both") modes = {metrics::CombineMode::DetAvg, metrics::CombineMode::ClassAvg};
    else throw ContractViolation("metrics.mode must be det_avg, class_avg or both");

    bool undefined = false;
    for (const auto mode : modes) {
        const metrics::EvalReport report = metrics::evaluate(gt, pred, mode, iou_thr, min_vis);
        std::cout << metrics::format_report(report);
        if (!out_prefix.empty()) {
            const std::string suffix = mode == metrics::CombineMode::DetAvg ? "det_avg" : "class_avg";
            std::ofstream kv(out_prefix + "." + suffix + ".kv");
            if (!kv) throw IoError("cannot write " + out_prefix + "." + suffix + ".kv");
            kv << metrics::format_report_kv(report);
            std::ofstream txt(out_prefix + "." + suffix + ".txt");
            txt << metrics::format_report(report);
        }
        if (!report.scalars.mota_defined) undefined = true;
    }
    return undefined ? 1 : 0;
}

int cmd_stats(const std::string& gt_path, const std::string& emb_path, const std::string& out_prefix) {
    const io::ParsedTable gt = io::parse_gt(gt_path);
    const io::AdjacentIouStats iou_stats = io::stats_adjacent_iou(gt);
    std::ostringstream kv;
    kv.setf(std::ios::fixed);
    kv.precision(6);
    kv << "adjacent_iou_mean=" << iou_stats.mean << "\n";
    kv << "adjacent_iou_count=" << iou_stats.count << "\n";
    std::ostringstream csv;
    csv << "bin_low,bin_high,adjacent_iou\n";
    for (int i = 0; i < 20; ++i) {
        csv << i * 0.05 << "," << (i + 1) * 0.05 << "," << iou_stats.histogram[i] << "\n";
    }
    if (!emb_path.empty()) {
        const auto embeddings = io::read_blob(emb_path);
        const io::CosineStats cs = io::stats_appearance_cosine(gt, embeddings);
        kv << "cosine_same_id_mean=" << cs.same_id_mean << "\n";
        kv << "cosine_same_id_count=" << cs.same_id_count << "\n";
        kv << "cosine_cross_id_mean=" << cs.cross_id_mean << "\n";
        kv << "cosine_cross_id_count=" << cs.cross_id_count << "\n";
        kv << "cosine_missing_embeddings=" << cs.missing_embeddings << "\n";
        csv << "bin_low,bin_high,cosine_same_id,cosine_cross_id\n";
        for (int i = 0; i < 40; ++i) {
            csv << i * 0.05 << "," << (i + 1) * 0.05 << "," << cs.same_id_histogram[i] << ","
                << cs.cross_id_histogram[i] << "\n";
        }
    } else {
        kv << "cosine_stats=skipped (no embeddings file given)\n";
    }
    std::cout << kv.str();
    if (!out_prefix.empty()) {
        std::ofstream(out_prefix + ".kv") << kv.str();
        std::ofstream(out_prefix + ".csv") << csv.str();
    }
    return 0;
}

int cmd_gradcheck(int seeds, double eps, double tol, bool mutate) {
    const auto reports = gradsuite::run_suite(seeds, eps, tol, mutate);
    for (const auto& r : reports) {
        std::printf("%-20s max_rel_err=%.3e %s\n", r.name.c_str(), r.max_rel_err,
                    r.pass ? "PASS" : "FAIL");
    }
    return gradsuite::all_pass(reports) ? 0 : 1;
}

int cmd_toytrain(const CommonOpts& opts, std::uint64_t seed, int steps_override, bool no_ab,
                 const std::string& out_prefix) {
    const cli::RunConfig cfg = load_config(opts);
    ald::ToyTrainConfig tc;
    tc.seed = seed;
    tc.steps = steps_override >= 0 ? steps_override : cfg.get_int("train.steps", tc.steps);
    tc.lr = cfg.get_double("train.lr", tc.lr);
    tc.channels = cfg.get_int("train.channels", tc.channels);
    tc.data.image_size = cfg.get_int("train.image_size", tc.data.image_size);
    tc.data.n_train = cfg.get_int("train.n_train", tc.data.n_train);
    tc.data.n_heldout = cfg.get_int("train.n_heldout", tc.data.n_heldout);
    tc.dsl.alpha = cfg.get_double("train.alpha", tc.dsl.alpha);
    tc.dsl.beta = cfg.get_double("train.beta", tc.dsl.beta);
    tc.dsl.gamma = cfg.get_double("train.gamma", tc.dsl.gamma);
    tc.dsl.detach_well = cfg.get_bool("train.detach_well", tc.dsl.detach_well);
    if (cfg.has("noise.kind")) {
        tc.data.noise.kind = cfg.get_string("noise.kind", "physics") == "physics"
                                 ? noise::NoiseKind::Physics
                                 : noise::NoiseKind::GaussianPoisson;
    }
    tc.data.noise.K = cfg.get_double("noise.K", tc.data.noise.K);
    tc.data.noise.sigma_read = cfg.get_double("noise.sigma_read", tc.data.noise.sigma_read);
    tc.data.noise.sigma_row = cfg.get_double("noise.sigma_row", tc.data.noise.sigma_row);
    tc.data.noise.quant_step = cfg.get_double("noise.quant_step", tc.data.noise.quant_step);
    tc.data.noise.gp_a = cfg.get_double("noise.gp_a", tc.data.noise.gp_a);
    tc.data.noise.gp_b = cfg.get_double("noise.gp_b", tc.data.noise.gp_b);
    tc.data.noise.ratio = cfg.get_double("noise.ratio", tc.data.noise.ratio);
    tc.data.noise.validate();

    tc.use_dsl = true;
    const ald::ToyReport with_dsl = ald::toy_train(tc);
    std::cout << "--- with DSL ---\n" << ald::format_toy_report(with_dsl);
    if (!out_prefix.empty()) {
        ald::write_toy_report(with_dsl, out_prefix + ".dsl.kv", out_prefix + ".dsl.params.bin");
    }
    if (no_ab) return 0;

    tc.use_dsl = false;
    const ald::ToyReport baseline = ald::toy_train(tc);
    std::cout << "--- baseline (no DSL) ---\n" << ald::format_toy_report(baseline);
    const double ratio = baseline.heldout_feature_distance > 0
                             ? with_dsl.heldout_feature_distance / baseline.heldout_feature_distance
                             : 0.0;
    std::printf("feature_distance_ratio=%.6f\n", ratio);
    if (!out_prefix.empty()) {
        ald::write_toy_report(baseline, out_prefix + ".baseline.kv", out_prefix + ".baseline.params.bin");
        std::ofstream cmp(out_prefix + ".compare.kv");
        cmp << "feature_distance_ratio=" << ratio << "\n";
        cmp << "dsl_heldout_feature_distance=" << with_dsl.heldout_feature_distance << "\n";
        cmp << "baseline_heldout_feature_distance=" << baseline.heldout_feature_distance << "\n";
        cmp << "dsl_heldout_det_loss_low=" << with_dsl.heldout_det_loss_low << "\n";
        cmp << "baseline_heldout_det_loss_low=" << baseline.heldout_det_loss_low << "\n";
    }
    return 0;
}

int cmd_isp(const std::string& in_path, const std::string& out_path, double wb_r, double wb_g, double wb_b,
            double gamma, double exposure) {
    const raw::RawFrame frame = raw::load_raw(in_path);
    raw::RgbImage img = raw::simple_isp(frame, wb_r, wb_g, wb_b, gamma);
    if (exposure != 1.0) img = raw::exposure_scale(img, exposure);
    raw::save_png(img, out_path);
    std::printf("wrote %s (%dx%d)\n", out_path.c_str(), img.width, img.height);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"low-light multi-object tracking toolkit"};
    app.require_subcommand(1);

    CommonOpts synth_opts, track_opts, eval_opts, toy_opts;
    std::string in_seq, out_seq, det_path, out_path, gt_path, result_path, emb_path, out_prefix, in_raw;
    std::uint64_t seed = 0;
    bool verify = false, no_interp = false, mutate = false, no_ab = false;
    int gc_seeds = 20, toy_steps = -1;
    double gc_eps = 1e-5, gc_tol = 1e-4;
    double wb_r = 1.0, wb_g = 1.0, wb_b = 1.0, gamma = 2.2, exposure = 1.0;

    auto* synth = app.add_subcommand("synth", "darken + noise a clean RAW sequence");
    synth->add_option("--in", in_seq, "input sequence dir")->required();
    synth->add_option("--out", out_seq, "output sequence dir")->required();
    synth->add_option("--seed", seed, "RNG seed (mandatory for provenance)")->required();
    synth->add_flag("--verify", verify, "Monte-Carlo variance check vs the analytic model");
    add_common(synth, synth_opts);

    auto* trackc = app.add_subcommand("track", "run the tracker on a detection file");
    trackc->add_option("--det", det_path, "detection file")->required();
    trackc->add_option("--out", out_path, "result file")->required();
    trackc->add_flag("--no-interp", no_interp, "skip linear-interpolation post-processing");
    add_common(trackc, track_opts);

    auto* evalc = app.add_subcommand("eval", "evaluate a result file against ground truth");
    evalc->add_option("--gt", gt_path, "gt file")->required();
    evalc->add_option("--result", result_path, "result file")->required();
    evalc->add_option("--out-prefix", out_prefix, "report file prefix");
    add_common(evalc, eval_opts);

    auto* statsc = app.add_subcommand("stats", "dataset statistics (adjacent IoU, appearance cosine)");
    statsc->add_option("--gt", gt_path, "gt file")->required();
    statsc->add_option("--embeddings", emb_path, "embeddings blob");
    statsc->add_option("--out-prefix", out_prefix, "output file prefix");

    auto* gradc = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    gradc->add_option("--seeds", gc_seeds, "random shapes per op");
    gradc->add_option("--eps", gc_eps, "central-difference step");
    gradc->add_option("--tol", gc_tol, "max relative error");
    gradc->add_flag("--mutate", mutate, "corrupt one gradient; the suite must fail");

    auto* toyc = app.add_subcommand("toytrain", "DSL A/B toy experiment");
    toyc->add_option("--seed", seed, "RNG seed (mandatory for provenance)")->required();
    toyc->add_option("--steps", toy_steps, "SGD steps (overrides train.steps)");
    toyc->add_flag("--no-ab", no_ab, "run only the DSL arm");
    toyc->add_option("--out-prefix", out_prefix, "report file prefix");
    add_common(toyc, toy_opts);

    auto* ispc = app.add_subcommand("isp", "RAW -> PNG preview");
    ispc->add_option("--in", in_raw, ".raw16 frame")->required();
    ispc->add_option("--out", out_path, "output PNG")->required();
    ispc->add_option("--wb-r", wb_r, "red gain");
    ispc->add_option("--wb-g", wb_g, "green gain");
    ispc->add_option("--wb-b", wb_b, "blue gain");
    ispc->add_option("--gamma", gamma, "display gamma");
    ispc->add_option("--exposure", exposure, "post-ISP exposure scale");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(in_seq, out_seq, synth_opts, seed, verify);
        if (trackc->parsed()) return cmd_track(det_path, out_path, track_opts, no_interp);
        if (evalc->parsed()) return cmd_eval(gt_path, result_path, eval_opts, out_prefix);
        if (statsc->parsed()) return cmd_stats(gt_path, emb_path, out_prefix);
        if (gradc->parsed()) return cmd_gradcheck(gc_seeds, gc_eps, gc_tol, mutate);
        if (toyc->parsed()) return cmd_toytrain(toy_opts, seed, toy_steps, no_ab, out_prefix);
        if (ispc->parsed()) return cmd_isp(in_raw, out_path, wb_r, wb_g, wb_b, gamma, exposure);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    } catch (const ContractViolation& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
