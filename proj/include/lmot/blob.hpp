#pragma once

#include <string>
#include <vector>

namespace lmot::io {

/// Named double tensors in one file: a JSON header listing name/shape per
/// entry, followed by the concatenated little-endian 64-bit payloads.
struct BlobEntry {
    std::string name;
    std::vector<long> shape;
    std::vector<double> data;
};

void write_blob(const std::vector<BlobEntry>& entries, const std::string& path);
std::vector<BlobEntry> read_blob(const std::string& path);

}  // namespace lmot::io
