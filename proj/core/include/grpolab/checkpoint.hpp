#pragma once

#include <string>

#include "grpolab/policy.hpp"
#include "grpolab/vocab.hpp"

namespace grpolab {

/// Binary checkpoint: magic + JSON header (dimensions, vocabulary, content
/// hash) + raw little-endian doubles. Round trips bit-exactly; loading
/// verifies the hash and fails with an integrity error on mismatch.
void save_checkpoint(const std::string& path, const PolicyParams& params,
                     const Vocabulary& vocab);

struct Checkpoint {
    PolicyParams params;
    Vocabulary vocab;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace grpolab
