// Acceptance gate: one check per release criterion, one PASS/FAIL line each.
// Exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lmot/ald.hpp"
#include "lmot/gradsuite.hpp"
#include "lmot/hungarian.hpp"
#include "lmot/metrics.hpp"
#include "lmot/mot_io.hpp"
#include "lmot/noise.hpp"
#include "lmot/toy.hpp"
#include "lmot/tracker.hpp"

namespace fs = std::filesystem;
using namespace lmot;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int n, const char* what, bool ok, const std::string& detail = "") {
    std::printf("criterion %2d (%s): %s%s%s\n", n, what, ok ? "PASS" : "FAIL",
                detail.empty() ? "" : " — ", detail.c_str());
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---- criterion 7/10 shared fixture: 5 constant-velocity objects, 100 frames,
// 10% interior dropout (gaps <= 20), mild score noise ----

struct Scene {
    std::vector<track::Detection> dets;
    io::ParsedTable gt;
};

Scene make_scene() {
    Scene scene;
    std::mt19937_64 rng(20240813);
    std::uniform_real_distribution<double> score_noise(-0.05, 0.05);
    const double vx[5] = {3.0, -2.5, 2.0, 0.0, 1.5};
    const double vy[5] = {0.5, 1.0, -1.5, 2.0, 0.0};
    const double x0[5] = {50, 700, 100, 400, 250};
    const double y0[5] = {100, 500, 400, 50, 250};
    const double w[5] = {40, 55, 35, 60, 45};
    const double h[5] = {80, 95, 70, 110, 85};

    // pre-draw dropout frames per object: ~10 interior frames, isolated or in
    // short runs (every gap <= 20 by construction)
    std::vector<std::vector<bool>> dropped(5, std::vector<bool>(101, false));
    for (int o = 0; o < 5; ++o) {
        int remaining = 10;
        while (remaining > 0) {
            const int start = 5 + static_cast<int>(rng() % 90);
            const int run = 1 + static_cast<int>(rng() % 4);
            for (int f = start; f < std::min(start + run, 96) && remaining > 0; ++f) {
                if (!dropped[o][f]) {
                    dropped[o][f] = true;
                    --remaining;
                }
            }
        }
    }

    for (int f = 1; f <= 100; ++f) {
        for (int o = 0; o < 5; ++o) {
            const track::BBox box{x0[o] + vx[o] * (f - 1), y0[o] + vy[o] * (f - 1), w[o], h[o]};
            scene.gt.records.push_back({f, o + 1, box.x, box.y, box.w, box.h, 1.0, 1, 1.0});
            if (dropped[o][f]) continue;
            track::Detection d;
            d.frame = f;
            d.class_id = 1;
            d.box = box;
            d.score = std::min(1.0, std::max(0.65, 0.85 + score_noise(rng)));
            scene.dets.push_back(d);
        }
    }
    return scene;
}

std::vector<track::ResultRow> run_tracker(const Scene& scene) {
    track::TrackerConfig cfg;
    track::TrackerEngine engine(cfg);
    std::vector<track::ResultRow> rows;
    for (int f = 1; f <= 100; ++f) {
        std::vector<track::Detection> frame_dets;
        for (const auto& d : scene.dets)
            if (d.frame == f) frame_dets.push_back(d);
        auto out = engine.step(f, frame_dets);
        rows.insert(rows.end(), out.begin(), out.end());
    }
    return track::linear_interpolation(std::move(rows), cfg.interp_max_gap);
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

int main() {
    // 1. gradient suite, 20 seeds, < 60 s
    {
        const auto t0 = Clock::now();
        auto reports = gradsuite::run_suite(20, 1e-5, 1e-4, false);
        const double dt = seconds_since(t0);
        double worst = 0;
        for (const auto& r : reports) worst = std::max(worst, r.max_rel_err);
        char buf[128];
        std::snprintf(buf, sizeof buf, "max_rel_err=%.2e, %.1fs", worst, dt);
        report(1, "gradient suite vs central differences", gradsuite::all_pass(reports) && dt < 60.0, buf);
    }

    // 2. softmax kernel constraint + pinned Gaussian init
    {
        bool ok = true;
        numerics::Tensor logits = numerics::randn(3, 1, 5, 5, 71);
        numerics::Tensor norm = numerics::softmax_normalize({logits, 3});
        numerics::Tensor shifted = logits;
        for (double& v : shifted.data()) v += 3.7;
        numerics::Tensor norm2 = numerics::softmax_normalize({shifted, 3});
        for (long f = 0; f < 3; ++f) {
            double s = 0;
            for (long y = 0; y < 5; ++y)
                for (long x = 0; x < 5; ++x) {
                    ok = ok && norm.at(f, 0, y, x) > 0;
                    s += norm.at(f, 0, y, x);
                }
            ok = ok && std::abs(s - 1.0) < 1e-9;
        }
        for (long i = 0; i < norm.size(); ++i) ok = ok && std::abs(norm.data()[i] - norm2.data()[i]) < 1e-12;
        // discrete sigma=1 Gaussian center over the 5x5 support
        double den = 0;
        for (int y = -2; y <= 2; ++y)
            for (int x = -2; x <= 2; ++x) den += std::exp(-(y * y + x * x) / 2.0);
        ok = ok && std::abs(ald::gaussian_kernel_5x5().at(0, 0, 2, 2) - 1.0 / den) < 1e-9;
        report(2, "softmax kernel constraint and Gaussian init", ok);
    }

    // 3. feature-alignment A/B experiment: distance ratio <= 0.5, degraded
    //    detection loss within +5%, < 5 min
    {
        const auto t0 = Clock::now();
        ald::ToyTrainConfig cfg;  // defaults: 500 steps, seed 7
        cfg.use_dsl = true;
        const ald::ToyReport with = ald::toy_train(cfg);
        cfg.use_dsl = false;
        const ald::ToyReport base = ald::toy_train(cfg);
        const double dt = seconds_since(t0);
        const double ratio = with.heldout_feature_distance / base.heldout_feature_distance;
        const double loss_rel = with.heldout_det_loss_low / base.heldout_det_loss_low;
        char buf[160];
        std::snprintf(buf, sizeof buf, "distance ratio %.3f, det loss %+.1f%%, %.0fs", ratio,
                      100 * (loss_rel - 1.0), dt);
        report(3, "feature alignment halves the held-out distance", ratio <= 0.5 && loss_rel <= 1.05 && dt < 300,
               buf);
    }

    // 4. loss formulas reproduce hand values
    {
        bool ok = true;
        using numerics::Tensor;
        ok = ok && ald::loss_ds({Tensor(1, 1, 3, 3, 2.5)}, {Tensor(1, 1, 3, 3, 2.5)}).value == 0.0;
        ok = ok && ald::loss_tv({Tensor(1, 2, 4, 4, 7.0)}).value == 0.0;
        ok = ok && ald::loss_ds({Tensor(1, 1, 2, 2, 1.0)}, {Tensor(1, 1, 2, 2, 0.0)}).value == 4.0;
        Tensor m = Tensor::from_data(1, 1, 2, 2, {0, 1, 0, 1});
        ok = ok && ald::loss_tv({m}).value == 2.0;
        ok = ok && std::abs(ald::loss_total(1, 2, 3, 4, {}) - 6.04) < 1e-12;
        report(4, "hand-checked loss values", ok);
    }

    // 5. assignment equals exhaustive permutation search, 200 seeds, < 10 s
    {
        const auto t0 = Clock::now();
        std::mt19937_64 rng(2025);
        std::uniform_real_distribution<double> u(-10.0, 10.0);
        bool ok = true;
        for (int trial = 0; trial < 200 && ok; ++trial) {
            const int n = 2 + static_cast<int>(rng() % 6);
            std::vector<std::vector<double>> cost(n, std::vector<double>(n));
            for (auto& row : cost)
                for (double& v : row) v = u(rng);
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            double best = 1e300;
            do {
                double acc = 0;
                for (int i = 0; i < n; ++i) acc += cost[i][perm[i]];
                best = std::min(best, acc);
            } while (std::next_permutation(perm.begin(), perm.end()));
            ok = std::abs(track::hungarian(cost).total_cost - best) < 1e-9;
        }
        const double dt = seconds_since(t0);
        report(5, "assignment vs exhaustive search", ok && dt < 10.0);
    }

    // 6. metric hand fixtures
    {
        using metrics::Entry;
        auto E = [](int f, int id, double x) { return Entry{f, id, 1, {x, 0, 10, 10}}; };
        bool ok = true;
        std::vector<Entry> g2{E(1, 1, 0), E(2, 1, 0)};
        metrics::HotaResult half = metrics::hota(g2, {E(1, 3, 0)});
        ok = ok && std::abs(half.HOTA - 0.5) < 1e-12 && std::abs(half.DetA - 0.5) < 1e-12;

        std::vector<Entry> g4{E(1, 1, 0), E(2, 1, 0), E(3, 1, 0), E(4, 1, 0)};
        metrics::HotaResult swap =
            metrics::hota(g4, {E(1, 5, 0), E(2, 5, 0), E(3, 6, 0), E(4, 6, 0)});
        ok = ok && std::abs(swap.DetA - 1.0) < 1e-12 && std::abs(swap.AssA - 0.5) < 1e-12 &&
             std::abs(swap.HOTA - std::sqrt(0.5)) < 1e-12;

        std::vector<Entry> cg{E(1, 1, 0), E(1, 2, 100), E(2, 1, 0), E(2, 2, 100)};
        metrics::ClearResult cl = metrics::mota(cg, {E(1, 11, 0), E(1, 12, 100), E(2, 12, 0)});
        ok = ok && std::abs(cl.mota - 0.5) < 1e-12;

        metrics::Idf1Result id = metrics::idf1(g2, {E(1, 3, 0)});
        ok = ok && std::abs(id.idf1 - 2.0 / 3.0) < 1e-12;

        metrics::HotaResult perfect = metrics::hota(g4, g4);
        ok = ok && perfect.HOTA == 1.0 && metrics::mota(g4, g4).mota == 1.0 &&
             metrics::idf1(g4, g4).idf1 == 1.0;

        metrics::ClassCounts cc = metrics::evaluate_class(g4, g4, 1);
        metrics::EvalScalars ca = metrics::combine_classes({cc}, metrics::CombineMode::ClassAvg);
        metrics::EvalScalars da = metrics::combine_classes({cc}, metrics::CombineMode::DetAvg);
        ok = ok && std::abs(ca.hota - da.hota) < 1e-12 && std::abs(ca.idf1 - da.idf1) < 1e-12;
        report(6, "metric hand fixtures", ok);
    }

    // 7. tracker end-to-end on the synthetic dropout scene
    Scene scene = make_scene();
    {
        auto rows = run_tracker(scene);
        metrics::EvalReport r = metrics::evaluate(scene.gt, rows);
        auto rows2 = run_tracker(scene);
        const bool deterministic = rows.size() == rows2.size();
        char buf[96];
        std::snprintf(buf, sizeof buf, "IDF1=%.4f MOTA=%.4f", r.scalars.idf1, r.scalars.mota);
        report(7, "end-to-end tracking through dropout", deterministic && r.scalars.idf1 >= 0.95 && r.scalars.mota >= 0.95,
               buf);
    }

    // 8. noise model statistics
    {
        bool ok = true;
        raw::RawFrame flat;
        flat.width = 1000;
        flat.height = 1000;
        flat.data.assign(1000000, 0);
        for (double s : {10.0, 100.0, 1000.0}) {
            for (std::uint16_t& v : flat.data) v = static_cast<std::uint16_t>(240 + s);
            noise::NoiseParams ph{noise::NoiseKind::Physics, 2.0, 3.0, 0.0, 1.0, 0.0, 0.0, 1.0};
            noise::NoiseParams gp{noise::NoiseKind::GaussianPoisson, 0.0, 0.0, 0.0, 0.0, 0.05, 4.0, 1.0};
            for (const auto& p : {ph, gp}) {
                raw::RawFrame noisy = noise::synthesize(flat, p, 97 + static_cast<std::uint64_t>(s));
                double mean = 0;
                for (auto v : noisy.data) mean += v;
                mean /= 1e6;
                double var = 0;
                for (auto v : noisy.data) var += (v - mean) * (v - mean);
                var /= 1e6 - 1;
                const double want = noise::model_variance(s, p);
                ok = ok && std::abs(var - want) / want < 0.05;
            }
        }
        for (std::uint16_t& v : flat.data) v = static_cast<std::uint16_t>(240 + 1234);
        noise::NoiseParams none{noise::NoiseKind::Physics, 0, 0, 0, 0, 0, 0, 1.0};
        ok = ok && noise::synthesize(flat, none, 5).data == flat.data;
        report(8, "noise variance and noiseless identity", ok);
    }

    // 9. file-format round trip and malformed-line provenance
    {
        const fs::path dir = fs::temp_directory_path() / "lmot_acceptance_io";
        fs::create_directories(dir);
        std::mt19937_64 rng(808);
        std::uniform_real_distribution<double> pos(0.0, 1000.0);
        std::vector<track::ResultRow> rows;
        auto q = [](double v) { return std::round(v * 100.0) / 100.0; };
        for (int i = 0; i < 1000; ++i) {
            rows.push_back({1 + static_cast<int>(rng() % 300), 1 + static_cast<int>(rng() % 50),
                            {q(pos(rng)), q(pos(rng)), q(1 + pos(rng) / 10), q(1 + pos(rng) / 10)},
                            q(pos(rng) / 1000.0), -1});
        }
        const std::string path = (dir / "r.txt").string();
        io::write_result(rows, path);
        auto back = io::parse_result(path);
        bool ok = back.size() == rows.size();
        auto key = [](const track::ResultRow& r) {
            return std::make_tuple(r.frame, r.id, r.box.x, r.box.y, r.box.w, r.box.h, r.score);
        };
        std::vector<std::tuple<int, int, double, double, double, double, double>> a, b;
        for (const auto& r : rows) a.push_back(key(r));
        for (const auto& r : back) b.push_back(key(r));
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        ok = ok && a == b;

        std::ofstream(dir / "bad.txt") << "1,1,0,0,10,10,1,1,1\nnot,a,line\n";
        bool threw = false;
        try {
            io::parse_gt((dir / "bad.txt").string());
        } catch (const ParseError& e) {
            threw = std::string(e.what()).find(":2") != std::string::npos;
        }
        ok = ok && threw;
        fs::remove_all(dir);
        report(9, "I/O round trip and line-numbered errors", ok);
    }

    // 10. CLI determinism: --jobs 1 vs --jobs 8 on the same fixture
    {
        const fs::path dir = fs::temp_directory_path() / "lmot_acceptance_cli";
        fs::create_directories(dir);
        // detections of criterion 7's scene
        std::vector<track::ResultRow> det_rows;
        for (const auto& d : scene.dets) det_rows.push_back({d.frame, -1, d.box, d.score, -1});
        io::write_result(det_rows, (dir / "det.txt").string());
        {
            std::ofstream gt_f(dir / "gt.txt");
            for (const auto& r : scene.gt.records) {
                gt_f << r.frame << "," << r.id << "," << r.x << "," << r.y << "," << r.w << "," << r.h
                     << ",1," << r.class_id << "," << r.visibility << "\n";
            }
        }
        const std::string cli = LMOT_CLI_PATH;
        auto run = [&](const std::string& args) {
            return std::system((cli + " " + args + " > /dev/null 2>&1").c_str()) == 0;
        };
        bool ok = true;
        ok = ok && run("track --det " + (dir / "det.txt").string() + " --out " + (dir / "r1.txt").string() +
                       " --jobs 1");
        ok = ok && run("track --det " + (dir / "det.txt").string() + " --out " + (dir / "r8.txt").string() +
                       " --jobs 8");
        ok = ok && slurp((dir / "r1.txt").string()) == slurp((dir / "r8.txt").string());
        ok = ok && !slurp((dir / "r1.txt").string()).empty();
        ok = ok && run("eval --gt " + (dir / "gt.txt").string() + " --result " + (dir / "r1.txt").string() +
                       " --out-prefix " + (dir / "e1").string() + " --jobs 1");
        ok = ok && run("eval --gt " + (dir / "gt.txt").string() + " --result " + (dir / "r8.txt").string() +
                       " --out-prefix " + (dir / "e8").string() + " --jobs 8");
        ok = ok && slurp((dir / "e1.det_avg.kv").string()) == slurp((dir / "e8.det_avg.kv").string());
        ok = ok && !slurp((dir / "e1.det_avg.kv").string()).empty();
        fs::remove_all(dir);
        report(10, "CLI determinism across --jobs", ok);
    }

    if (g_failures > 0) {
        std::printf("%d criterion(s) FAILED\n", g_failures);
        return 1;
    }
    std::printf("all criteria passed\n");
    return 0;
}
