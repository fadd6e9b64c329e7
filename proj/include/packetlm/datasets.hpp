#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "packetlm/codec.hpp"
#include "packetlm/schema.hpp"

namespace packetlm {

struct LabeledRecord {
    std::vector<std::string> fields; // raw values, schema order
    int label = 0;
    int64_t row_index = -1; // 0-based data row in the source file
};

struct RejectedRow {
    int64_t row_index = -1;
    std::string column;
    std::string reason; // error name, e.g. NegativeValue
    std::string detail;
};

struct LoadResult {
    std::vector<LabeledRecord> records;
    std::vector<RejectedRow> rejects;
};

// CSV with a header row, UTF-8, comma-delimited, minimal quoting support.
// Columns are located via the schema's csv_column names and label_column.
// Rows whose values fail normalize_field land in rejects, never dropped
// silently.
LoadResult load_csv(const std::string& path, const PacketSchema& schema);

// Normalize + tokenize every record; records are expected pre-validated by
// load_csv (errors here propagate).
std::vector<TokenizedPacket> tokenize_records(const std::vector<LabeledRecord>& records,
                                              const PacketSchema& schema,
                                              const Vocabulary& vocab);

struct SplitSpec {
    enum class Mode { ratio, one_shot };
    Mode mode = Mode::ratio;
    std::string name = "split";
    double ratio = 0.0; // minority train = round(ratio * majority_train)
    uint64_t seed = 0;
    int majority_class = 0;
    int64_t majority_train = 0;
    int64_t majority_test = 0;
    int64_t minority_test = 0;
    // Explicit per-class {train, test}; takes precedence over derived counts.
    std::map<int, std::pair<int64_t, int64_t>> explicit_counts;
};

struct DatasetManifest {
    std::string name;
    uint64_t seed = 0;
    std::string mode;
    std::vector<std::string> class_names;
    std::vector<int64_t> train_counts, test_counts; // per class
    std::string source_digest;
    int64_t train_total = 0, test_total = 0;

    std::string to_json_text() const;
};

struct SplitResult {
    std::vector<LabeledRecord> train, test;
    DatasetManifest manifest;
};

// Seeded per-class sampling without replacement; train and test are disjoint
// by source row. Classes with a requested count of zero may be absent.
SplitResult make_split(const std::vector<LabeledRecord>& records, const SplitSpec& spec,
                       const PacketSchema& schema, const std::string& source_digest = "");

// ---- synthetic desk-scale task ----------------------------------------
//
// Four numeric fields; the label is a published deterministic rule:
//   class = 2 * [src_port >= 32768] + [ones digit of dst_port >= 5]
// so ground truth is exactly learnable and independently checkable.

PacketSchema synth_schema();
int synth_label_rule(const std::vector<std::string>& fields);

struct SynthConfig {
    int64_t n = 0;                      // used with class_weights
    std::vector<double> class_weights;  // default uniform
    std::vector<int64_t> class_counts;  // overrides n/class_weights when set
    uint64_t seed = 0;
};

std::vector<LabeledRecord> synth_generate(const SynthConfig& cfg);
std::vector<LabeledRecord> synth_generate(int64_t n, uint64_t seed);

// CSV round-tripping for split outputs: schema columns in order + label.
void write_records_csv(const std::vector<LabeledRecord>& records,
                       const PacketSchema& schema, const std::string& path);
std::string rejects_to_jsonl(const std::vector<RejectedRow>& rejects);

} // namespace packetlm
