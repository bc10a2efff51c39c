#include "lmot/config.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "lmot/errors.hpp"

namespace lmot::cli {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "noise.kind", "noise.K", "noise.sigma_read", "noise.sigma_row", "noise.quant_step", "noise.gp_a",
        "noise.gp_b", "noise.ratio",
        "tracker.tau_high", "tracker.tau_low", "tracker.iou_gate_stage1", "tracker.iou_gate_stage2",
        "tracker.max_age", "tracker.min_hits", "tracker.appearance_weight", "tracker.ocm_weight",
        "tracker.use_oru", "tracker.interp_max_gap", "tracker.fps", "tracker.ema_momentum",
        "metrics.mode", "metrics.iou_thr", "metrics.min_visibility",
        "train.steps", "train.lr", "train.channels", "train.image_size", "train.n_train",
        "train.n_heldout", "train.alpha", "train.beta", "train.gamma", "train.detach_well",
        "io.result_precision",
    };
    return keys;
}

std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

}  // namespace

RunConfig RunConfig::load(const std::string& path, const std::vector<std::string>& overrides) {
    RunConfig cfg;
    auto set_kv = [&](const std::string& entry, const std::string& where) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ContractViolation(where + ": expected key=value, got '" + entry + "'");
        }
        const std::string key = trim(entry.substr(0, eq));
        if (!known_keys().count(key)) {
            throw ContractViolation(where + ": unknown config key '" + key + "'");
        }
        cfg.kv_[key] = trim(entry.substr(eq + 1));
    };
    if (!path.empty()) {
        std::ifstream f(path);
        if (!f) throw IoError("cannot open config " + path);
        std::string line;
        int line_no = 0;
        while (std::getline(f, line)) {
            ++line_no;
            const std::string t = trim(line);
            if (t.empty() || t[0] == '#') continue;
            set_kv(t, path + ":" + std::to_string(line_no));
        }
    }
    for (const auto& o : overrides) set_kv(o, "--set");
    return cfg;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ContractViolation("config key " + key + ": '" + it->second + "' is not a number");
    }
}

int RunConfig::get_int(const std::string& key, int fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
        return std::stoi(it->second);
    } catch (const std::exception&) {
        throw ContractViolation("config key " + key + ": '" + it->second + "' is not an integer");
    }
}

bool RunConfig::get_bool(const std::string& key, bool fallback) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "1" || it->second == "true" || it->second == "on") return true;
    if (it->second == "0" || it->second == "false" || it->second == "off") return false;
    throw ContractViolation("config key " + key + ": '" + it->second + "' is not a boolean");
}

std::string RunConfig::resolved_text() const {
    std::ostringstream os;
    for (const auto& [k, v] : kv_) os << k << "=" << v << "\n";
    return os.str();
}

std::uint64_t RunConfig::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : resolved_text()) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace lmot::cli
