#pragma once

#include <string>

#include "packetlm/model.hpp"
#include "packetlm/schema.hpp"
#include "packetlm/trainer.hpp"

namespace packetlm {

// On-disk format (see docs/formats.md): magic line, little-endian u64 header
// length, JSON header with configs + schema + tensor manifest
// (name/shape/offset/bytes/fnv64), then raw little-endian float32 blobs in
// manifest order. Self-describing: loading needs no external context.
inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    PacketSchema schema;
    ModelConfig model;
    TrainConfig train;
    int64_t step = 0;
    int epochs_completed = 0;
    ModelParams params;
    ModelParams adam_m, adam_v;
    std::string rng_state; // serialized mt19937_64
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a 64 over a byte range; used for tensor checksums and file digests.
uint64_t fnv1a64(const void* data, size_t len);
std::string fnv1a64_hex(const void* data, size_t len);
std::string file_digest(const std::string& path);

} // namespace packetlm
