#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace lmot::cli {

/// Plain-text key=value run configuration with command-line overrides.
/// Unknown keys are rejected; the resolved config is hashable for provenance.
class RunConfig {
   public:
    /// `path` may be empty (defaults only); overrides are "key=value" strings.
    static RunConfig load(const std::string& path, const std::vector<std::string>& overrides);

    bool has(const std::string& key) const { return kv_.count(key) > 0; }
    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    /// Sorted key=value lines of every set key.
    std::string resolved_text() const;
    /// FNV-1a over resolved_text().
    std::uint64_t hash() const;

   private:
    std::map<std::string, std::string> kv_;
};

}  // namespace lmot::cli
