#pragma once

#include "evoxel/evolution.hpp"

#include <stdexcept>
#include <string>

namespace evoxel::persist {

struct VersionMismatch : std::runtime_error {
    explicit VersionMismatch(int got)
        : std::runtime_error("unsupported checkpoint version: " + std::to_string(got)) {}
};
struct CorruptEnvelope : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IOFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline constexpr int kCheckpointVersion = 1;

/// Serializes the archive (config snapshot, master seed, generation, cells
/// with genome text / fitness / descriptors / task index) as JSON text.
std::string encode_checkpoint(const Archive& archive);

/// Inverse of encode_checkpoint. Verifies the version, re-develops every
/// genome, and checks the stored descriptors; throws CorruptEnvelope or
/// VersionMismatch.
Archive decode_checkpoint(const std::string& text);

/// Write-to-temp-then-rename so readers never observe a partial file.
void save_checkpoint(const Archive& archive, const std::string& path);
Archive load_checkpoint(const std::string& path);

std::string encode_run_config(const RunConfig& cfg);
RunConfig decode_run_config(const std::string& text);

} // namespace evoxel::persist
