#include "packetlm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "packetlm/config_io.hpp"
#include "packetlm/error.hpp"

namespace packetlm {

using nlohmann::json;

namespace {

constexpr char kMagic[] = "PKTLM-CKPT-1\n";
constexpr size_t kMagicLen = sizeof(kMagic) - 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

void write_u64_le(std::ostream& out, uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

uint64_t read_u64_le(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    return v;
}

struct ManifestEntry {
    std::string name;
    std::vector<int> shape;
    uint64_t offset = 0;
    uint64_t bytes = 0;
    std::string fnv64;
};

} // namespace

uint64_t fnv1a64(const void* data, size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    uint64_t h = 0xcbf29ce484222325ULL;
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const void* data, size_t len) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data, len)));
    return buf;
}

std::string file_digest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
    uint64_t h = 0xcbf29ce484222325ULL;
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const auto n = static_cast<size_t>(in.gcount());
        for (size_t i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (in.eof()) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return hex;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    auto params_refs = ckpt.params.tensor_refs();
    auto m_refs = ckpt.adam_m.tensor_refs();
    auto v_refs = ckpt.adam_v.tensor_refs();

    json manifest = json::array();
    uint64_t offset = 0;
    std::vector<std::pair<const float*, size_t>> blobs;
    auto add_group = [&](const char* prefix, auto& refs) {
        for (const auto& r : refs) {
            const uint64_t bytes = r.count * sizeof(float);
            manifest.push_back({{"name", std::string(prefix) + r.name},
                                {"shape", r.shape},
                                {"offset", offset},
                                {"bytes", bytes},
                                {"fnv64", fnv1a64_hex(r.data, bytes)}});
            blobs.emplace_back(r.data, r.count);
            offset += bytes;
        }
    };
    add_group("params.", params_refs);
    add_group("adam_m.", m_refs);
    add_group("adam_v.", v_refs);

    json header;
    header["format_version"] = ckpt.format_version;
    header["schema"] = schema_to_json(ckpt.schema);
    header["model_config"] = model_config_to_json(ckpt.model);
    header["train_config"] = train_config_to_json(ckpt.train);
    header["step"] = ckpt.step;
    header["epochs_completed"] = ckpt.epochs_completed;
    header["rng_state"] = ckpt.rng_state;
    header["tensors"] = manifest;
    const std::string header_text = header.dump();

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io_failure, "cannot write checkpoint '" + path + "'");
    out.write(kMagic, kMagicLen);
    write_u64_le(out, header_text.size());
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& [data, count] : blobs)
        out.write(reinterpret_cast<const char*>(data),
                  static_cast<std::streamsize>(count * sizeof(float)));
    out.flush();
    if (!out) fail(Errc::io_failure, "short write to checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_failure, "cannot open checkpoint '" + path + "'");

    char magic[kMagicLen];
    in.read(magic, kMagicLen);
    if (!in || std::memcmp(magic, kMagic, kMagicLen) != 0)
        fail(Errc::corrupt_tensor, "'" + path + "' is not a checkpoint file");

    const uint64_t header_len = read_u64_le(in);
    if (!in) fail(Errc::corrupt_tensor, "truncated checkpoint header");
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) fail(Errc::corrupt_tensor, "truncated checkpoint header");

    json header;
    try {
        header = json::parse(header_text);
    } catch (const json::exception& e) {
        fail(Errc::corrupt_tensor, std::string("bad checkpoint header: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.format_version = header.at("format_version").get<int>();
        if (ckpt.format_version != kCheckpointFormatVersion)
            fail(Errc::version_mismatch,
                 "checkpoint format_version " + std::to_string(ckpt.format_version) +
                     ", expected " + std::to_string(kCheckpointFormatVersion));
        ckpt.schema = schema_from_json(header.at("schema"));
        ckpt.model = model_config_from_json(header.at("model_config"));
        ckpt.train = train_config_from_json(header.at("train_config"));
        ckpt.step = header.at("step").get<int64_t>();
        ckpt.epochs_completed = header.at("epochs_completed").get<int>();
        ckpt.rng_state = header.at("rng_state").get<std::string>();
    } catch (const json::exception& e) {
        fail(Errc::corrupt_tensor, std::string("bad checkpoint header: ") + e.what());
    }

    ckpt.params = ModelParams::zeros(ckpt.model);
    ckpt.adam_m = ModelParams::zeros(ckpt.model);
    ckpt.adam_v = ModelParams::zeros(ckpt.model);

    std::vector<ManifestEntry> entries;
    try {
        for (const auto& jt : header.at("tensors")) {
            ManifestEntry e;
            e.name = jt.at("name").get<std::string>();
            e.shape = jt.at("shape").get<std::vector<int>>();
            e.offset = jt.at("offset").get<uint64_t>();
            e.bytes = jt.at("bytes").get<uint64_t>();
            e.fnv64 = jt.at("fnv64").get<std::string>();
            entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        fail(Errc::corrupt_tensor, std::string("bad tensor manifest: ") + e.what());
    }

    auto params_refs = ckpt.params.tensor_refs();
    auto m_refs = ckpt.adam_m.tensor_refs();
    auto v_refs = ckpt.adam_v.tensor_refs();
    const size_t per_group = params_refs.size();
    if (entries.size() != per_group * 3)
        fail(Errc::corrupt_tensor, "tensor manifest has " +
                                       std::to_string(entries.size()) +
                                       " entries, expected " +
                                       std::to_string(per_group * 3));

    const std::streampos payload_start = in.tellg();
    auto load_group = [&](const char* prefix, auto& refs, size_t entry_base) {
        for (size_t i = 0; i < refs.size(); ++i) {
            const auto& e = entries[entry_base + i];
            auto& r = refs[i];
            if (e.name != std::string(prefix) + r.name)
                fail(Errc::corrupt_tensor,
                     "unexpected tensor '" + e.name + "' in manifest");
            if (e.shape != r.shape || e.bytes != r.count * sizeof(float))
                fail(Errc::corrupt_tensor, "tensor '" + e.name + "' shape mismatch");
            in.seekg(payload_start + static_cast<std::streamoff>(e.offset));
            in.read(reinterpret_cast<char*>(r.data),
                    static_cast<std::streamsize>(e.bytes));
            if (!in || static_cast<uint64_t>(in.gcount()) != e.bytes)
                fail(Errc::corrupt_tensor, "tensor '" + e.name + "' is truncated");
            if (fnv1a64_hex(r.data, e.bytes) != e.fnv64)
                fail(Errc::corrupt_tensor, "tensor '" + e.name + "' checksum mismatch");
        }
    };
    load_group("params.", params_refs, 0);
    load_group("adam_m.", m_refs, per_group);
    load_group("adam_v.", v_refs, per_group * 2);
    return ckpt;
}

} // namespace packetlm
