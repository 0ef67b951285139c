#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "deidkit/model.hpp"

// Self-describing model container: an 8-byte magic, a format version, a JSON
// header (model config, the 41-entry tag vocabulary, the parameter ledger,
// the tensor index, the training seed), then raw tensor data, row-major
// 32-bit floats, little-endian. The loader re-derives the ledger from the
// config and refuses a file whose tensor sizes or totals disagree, so a
// truncated or mixed-up checkpoint cannot load quietly.

namespace deidkit {

struct CheckpointData {
    TaggerModel<float> model;
    std::uint64_t seed = 0;
    std::vector<std::string> tag_names;
};

// Identical models produce byte-identical files.
void save_checkpoint(const std::filesystem::path& path, const TaggerModel<float>& model,
                     std::uint64_t seed);

// Throws ParseError on a malformed container and ValidationError when the
// contents contradict their own ledger.
CheckpointData load_checkpoint(const std::filesystem::path& path);

}  // namespace deidkit
