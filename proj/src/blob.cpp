#include "lmot/blob.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "lmot/errors.hpp"

namespace lmot::io {

namespace {
constexpr char kMagic[8] = {'L', 'M', 'O', 'T', 'B', 'L', 'B', '1'};
}

void write_blob(const std::vector<BlobEntry>& entries, const std::string& path) {
    nlohmann::json header = nlohmann::json::array();
    std::size_t offset = 0;
    for (const auto& e : entries) {
        std::size_t numel = 1;
        for (long d : e.shape) numel *= static_cast<std::size_t>(d);
        if (numel != e.data.size()) {
            throw ContractViolation("write_blob: entry '" + e.name + "' shape/data mismatch");
        }
        header.push_back({{"name", e.name}, {"shape", e.shape}, {"offset", offset}});
        offset += numel;
    }
    const std::string hs = header.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path + " for writing");
    f.write(kMagic, 8);
    const std::uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto& e : entries) {
        f.write(reinterpret_cast<const char*>(e.data.data()),
                static_cast<std::streamsize>(e.data.size() * sizeof(double)));
    }
    if (!f) throw IoError("write failed: " + path);
}

std::vector<BlobEntry> read_blob(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (f.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) {
        throw FormatError(path + ": not a blob file");
    }
    std::uint64_t hlen = 0;
    f.read(reinterpret_cast<char*>(&hlen), 8);
    std::string hs(hlen, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (static_cast<std::uint64_t>(f.gcount()) != hlen) throw FormatError(path + ": truncated header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(hs);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad header: " + e.what());
    }
    std::vector<BlobEntry> entries;
    for (const auto& j : header) {
        BlobEntry e;
        e.name = j.at("name").get<std::string>();
        e.shape = j.at("shape").get<std::vector<long>>();
        std::size_t numel = 1;
        for (long d : e.shape) numel *= static_cast<std::size_t>(d);
        e.data.resize(numel);
        f.read(reinterpret_cast<char*>(e.data.data()),
               static_cast<std::streamsize>(numel * sizeof(double)));
        if (static_cast<std::size_t>(f.gcount()) != numel * sizeof(double)) {
            throw FormatError(path + ": truncated payload for '" + e.name + "'");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

}  // namespace lmot::io
