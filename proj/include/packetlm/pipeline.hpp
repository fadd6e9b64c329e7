#pragma once

#include <optional>
#include <string>
#include <vector>

#include "packetlm/attention.hpp"
#include "packetlm/checkpoint.hpp"
#include "packetlm/datasets.hpp"
#include "packetlm/metrics.hpp"
#include "packetlm/schema.hpp"
#include "packetlm/trainer.hpp"

namespace packetlm {

// Command-level operations shared by the CLI, the bindings and the tests so
// the two paths can never drift apart.

struct SplitJob {
    std::string schema_path;
    std::string input_csv;
    SplitSpec spec;
    std::string out_dir;
};
// Parses {schema, input, output_dir, split{...}} from a JSON config file.
SplitJob split_job_from_json_file(const std::string& path);
SplitSpec split_spec_from_json_text(const std::string& text, const PacketSchema& schema);
DatasetManifest run_split(const SplitJob& job);

struct TrainJob {
    std::string schema_path;
    std::string train_csv;
    TrainConfig config;
    std::string out_checkpoint;
    std::string out_log; // JSONL, one record per epoch
    bool quiet = false;
};
std::vector<TrainLogRecord> run_train(const TrainJob& job);

struct EvalResult {
    MetricsReport report;
    std::vector<int> truths, preds;
};
EvalResult run_eval(const std::string& checkpoint_path, const std::string& test_csv,
                    const std::string& out_report_json = "",
                    const std::string& out_predictions_csv = "");

// Evaluate in-memory records against in-memory parameters.
EvalResult evaluate_records(const std::vector<LabeledRecord>& records,
                            const ModelParams& params, const ModelConfig& cfg,
                            const PacketSchema& schema);

struct OneshotJob {
    std::string schema_path;
    std::string records_csv;
    TrainConfig config;
    SplitSpec split; // one_shot template; per-seed runs override split.seed
    std::vector<uint64_t> seeds;
    std::string out_dir;
    bool quiet = false;
};
struct OneshotResult {
    struct SeedRun {
        uint64_t seed;
        MetricsReport report;
    };
    std::vector<SeedRun> runs;
    // arithmetic means of the aggregate rows across seeds
    double mean_weighted_precision = 0, mean_weighted_recall = 0, mean_weighted_f1 = 0;
    double mean_macro_precision = 0, mean_macro_recall = 0, mean_macro_f1 = 0;
    double mean_accuracy = 0;
    std::string to_json_text() const;
    std::string to_text() const;
};
OneshotResult run_oneshot(const OneshotJob& job);

struct PredictResult {
    int class_id = 0;
    std::string class_name;
    std::vector<float> probabilities;
};
PredictResult run_predict(const Checkpoint& ckpt, const std::vector<std::string>& fields);

// Without an explicit label the model's own prediction fills the label slot.
AttentionReport run_attention(const Checkpoint& ckpt, const std::string& checkpoint_digest,
                              const std::vector<std::string>& fields,
                              const std::string& source_desc, AttnAgg mode,
                              std::optional<int> label = std::nullopt);

} // namespace packetlm
