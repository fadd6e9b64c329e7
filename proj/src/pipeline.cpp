#include "packetlm/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "packetlm/config_io.hpp"
#include "packetlm/error.hpp"

namespace packetlm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_failure, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(Errc::io_failure, "short write to '" + path + "'");
}

json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        fail(Errc::config_error, "'" + path + "' is not valid JSON: " + e.what());
    }
}

} // namespace

SplitSpec split_spec_from_json_text(const std::string& text, const PacketSchema& schema) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::config_error, std::string("bad split spec: ") + e.what());
    }
    try {
        SplitSpec spec;
        const std::string mode = j.value("mode", std::string("ratio"));
        if (mode == "ratio") spec.mode = SplitSpec::Mode::ratio;
        else if (mode == "one_shot") spec.mode = SplitSpec::Mode::one_shot;
        else fail(Errc::config_error, "split mode must be 'ratio' or 'one_shot'");
        spec.name = j.value("name", mode);
        spec.ratio = j.value("ratio", 0.0);
        spec.seed = j.value("seed", uint64_t{0});
        if (j.contains("majority_class")) {
            spec.majority_class = schema.label_index(j.at("majority_class").get<std::string>());
            if (spec.majority_class < 0)
                fail(Errc::config_error, "majority_class not in schema labels");
        }
        spec.majority_train = j.value("majority_train", int64_t{0});
        spec.majority_test = j.value("majority_test", int64_t{0});
        spec.minority_test = j.value("minority_test", int64_t{0});
        if (j.contains("counts")) {
            for (auto it = j.at("counts").begin(); it != j.at("counts").end(); ++it) {
                const int k = schema.label_index(it.key());
                if (k < 0)
                    fail(Errc::config_error,
                         "counts entry '" + it.key() + "' not in schema labels");
                spec.explicit_counts[k] = {it.value().at("train").get<int64_t>(),
                                           it.value().at("test").get<int64_t>()};
            }
        }
        return spec;
    } catch (const json::exception& e) {
        fail(Errc::config_error, std::string("bad split spec: ") + e.what());
    }
}

SplitJob split_job_from_json_file(const std::string& path) {
    json j = parse_json_file(path);
    try {
        SplitJob job;
        job.schema_path = j.at("schema").get<std::string>();
        job.input_csv = j.at("input").get<std::string>();
        job.out_dir = j.value("output_dir", std::string("."));
        PacketSchema schema = load_schema(job.schema_path);
        job.spec = split_spec_from_json_text(j.at("split").dump(), schema);
        return job;
    } catch (const json::exception& e) {
        fail(Errc::config_error, "'" + path + "' is not a split config: " + e.what());
    }
}

DatasetManifest run_split(const SplitJob& job) {
    PacketSchema schema = load_schema(job.schema_path);
    LoadResult loaded = load_csv(job.input_csv, schema);
    if (loaded.records.empty())
        fail(Errc::empty_file, "'" + job.input_csv + "' produced no usable records");

    SplitResult result =
        make_split(loaded.records, job.spec, schema, file_digest(job.input_csv));

    fs::create_directories(job.out_dir);
    const fs::path dir(job.out_dir);
    write_records_csv(result.train, schema, (dir / "train.csv").string());
    write_records_csv(result.test, schema, (dir / "test.csv").string());
    write_text_file((dir / "manifest.json").string(),
                    result.manifest.to_json_text() + "\n");
    if (!loaded.rejects.empty())
        write_text_file((dir / "rejects.jsonl").string(),
                        rejects_to_jsonl(loaded.rejects));
    return result.manifest;
}

std::vector<TrainLogRecord> run_train(const TrainJob& job) {
    PacketSchema schema = load_schema(job.schema_path);
    Vocabulary vocab = build_vocabulary(schema);

    TrainConfig cfg = job.config;
    cfg.model.bind(schema);
    cfg.model.validate();

    LoadResult loaded = load_csv(job.train_csv, schema);
    if (loaded.records.empty())
        fail(Errc::empty_file, "'" + job.train_csv + "' produced no usable records");
    if (!loaded.rejects.empty() && !job.quiet)
        std::cerr << "warning: " << loaded.rejects.size()
                  << " rows rejected while loading " << job.train_csv << "\n";

    std::vector<TokenizedPacket> packets =
        tokenize_records(loaded.records, schema, vocab);

    Trainer trainer(schema, cfg, &packets);
    std::ofstream log_out;
    if (!job.out_log.empty()) {
        log_out.open(job.out_log);
        if (!log_out) fail(Errc::io_failure, "cannot write '" + job.out_log + "'");
    }
    trainer.set_epoch_callback([&](const TrainLogRecord& rec, const ModelParams&) {
        if (log_out.is_open()) {
            log_out << train_log_to_jsonl({rec});
            log_out.flush();
        }
        if (!job.quiet)
            std::cerr << "epoch " << rec.epoch << "  nll " << rec.mean_nll << "  lr "
                      << rec.lr << "  " << rec.seconds << "s\n";
    });
    trainer.run();

    if (!job.out_checkpoint.empty())
        save_checkpoint(trainer.snapshot(), job.out_checkpoint);
    return trainer.log();
}

EvalResult evaluate_records(const std::vector<LabeledRecord>& records,
                            const ModelParams& params, const ModelConfig& cfg,
                            const PacketSchema& schema) {
    Vocabulary vocab = build_vocabulary(schema);
    std::vector<TokenizedPacket> packets = tokenize_records(records, schema, vocab);

    EvalResult out;
    out.truths.reserve(records.size());
    out.preds.reserve(records.size());
    Predictor<float> predictor(params, cfg, vocab);
    for (size_t i = 0; i < packets.size(); ++i) {
        out.truths.push_back(records[i].label);
        out.preds.push_back(predictor.predict(packets[i]).first);
    }
    ConfusionMatrix cm = confusion(out.truths, out.preds, schema.num_classes());
    out.report = make_report(cm, schema.label_names);
    return out;
}

EvalResult run_eval(const std::string& checkpoint_path, const std::string& test_csv,
                    const std::string& out_report_json,
                    const std::string& out_predictions_csv) {
    Checkpoint ckpt = load_checkpoint(checkpoint_path);
    LoadResult loaded = load_csv(test_csv, ckpt.schema);
    if (loaded.records.empty())
        fail(Errc::empty_file, "'" + test_csv + "' produced no usable records");

    EvalResult result =
        evaluate_records(loaded.records, ckpt.params, ckpt.model, ckpt.schema);

    if (!out_report_json.empty())
        write_text_file(out_report_json, result.report.to_json_text() + "\n");
    if (!out_predictions_csv.empty()) {
        std::ostringstream os;
        os << "row_index,truth,prediction\n";
        for (size_t i = 0; i < result.truths.size(); ++i)
            os << loaded.records[i].row_index << ',' << result.truths[i] << ','
               << result.preds[i] << '\n';
        write_text_file(out_predictions_csv, os.str());
    }
    return result;
}

std::string OneshotResult::to_json_text() const {
    json per_seed = json::array();
    for (const auto& run : runs) {
        per_seed.push_back({{"seed", run.seed},
                            {"weighted", {{"precision", run.report.weighted_precision},
                                          {"recall", run.report.weighted_recall},
                                          {"f1", run.report.weighted_f1}}},
                            {"macro", {{"precision", run.report.macro_precision},
                                       {"recall", run.report.macro_recall},
                                       {"f1", run.report.macro_f1}}},
                            {"accuracy", run.report.accuracy}});
    }
    json j;
    j["per_seed"] = per_seed;
    j["mean"] = {{"weighted", {{"precision", mean_weighted_precision},
                               {"recall", mean_weighted_recall},
                               {"f1", mean_weighted_f1}}},
                 {"macro", {{"precision", mean_macro_precision},
                            {"recall", mean_macro_recall},
                            {"f1", mean_macro_f1}}},
                 {"accuracy", mean_accuracy}};
    return j.dump(2);
}

std::string OneshotResult::to_text() const {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %9s %9s %9s %9s\n", "seed", "w-prec",
                  "w-rec", "w-f1", "macro-f1");
    os << line;
    for (const auto& run : runs) {
        std::snprintf(line, sizeof(line), "%-12llu %9.4f %9.4f %9.4f %9.4f\n",
                      static_cast<unsigned long long>(run.seed),
                      run.report.weighted_precision, run.report.weighted_recall,
                      run.report.weighted_f1, run.report.macro_f1);
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-12s %9.4f %9.4f %9.4f %9.4f\n", "mean",
                  mean_weighted_precision, mean_weighted_recall, mean_weighted_f1,
                  mean_macro_f1);
    os << line;
    return os.str();
}

OneshotResult run_oneshot(const OneshotJob& job) {
    if (job.seeds.empty()) fail(Errc::config_error, "oneshot needs at least one seed");

    PacketSchema schema = load_schema(job.schema_path);
    Vocabulary vocab = build_vocabulary(schema);
    LoadResult loaded = load_csv(job.records_csv, schema);
    if (loaded.records.empty())
        fail(Errc::empty_file, "'" + job.records_csv + "' produced no usable records");
    const std::string digest = file_digest(job.records_csv);

    TrainConfig base_cfg = job.config;
    base_cfg.model.bind(schema);
    base_cfg.model.validate();

    if (!job.out_dir.empty()) fs::create_directories(job.out_dir);

    OneshotResult result;
    for (const uint64_t seed : job.seeds) {
        SplitSpec spec = job.split;
        spec.mode = SplitSpec::Mode::one_shot;
        spec.seed = seed;
        spec.name = "one_shot_seed_" + std::to_string(seed);
        SplitResult split = make_split(loaded.records, spec, schema, digest);

        TrainConfig cfg = base_cfg;
        cfg.seed = seed;
        std::vector<TokenizedPacket> packets =
            tokenize_records(split.train, schema, vocab);
        Trainer trainer(schema, cfg, &packets);
        try {
            trainer.run();
        } catch (const Error& e) {
            fail(e.code(), std::string(e.what()) + " (one-shot seed " +
                               std::to_string(seed) + ")");
        }

        EvalResult eval =
            evaluate_records(split.test, trainer.params(), cfg.model, schema);
        if (!job.quiet)
            std::cerr << "seed " << seed << "  weighted-f1 "
                      << eval.report.weighted_f1 << "  macro-f1 "
                      << eval.report.macro_f1 << "\n";
        if (!job.out_dir.empty()) {
            const fs::path p =
                fs::path(job.out_dir) / ("seed_" + std::to_string(seed) + ".json");
            write_text_file(p.string(), eval.report.to_json_text() + "\n");
        }
        result.runs.push_back({seed, std::move(eval.report)});
    }

    const double n = static_cast<double>(result.runs.size());
    for (const auto& run : result.runs) {
        result.mean_weighted_precision += run.report.weighted_precision / n;
        result.mean_weighted_recall += run.report.weighted_recall / n;
        result.mean_weighted_f1 += run.report.weighted_f1 / n;
        result.mean_macro_precision += run.report.macro_precision / n;
        result.mean_macro_recall += run.report.macro_recall / n;
        result.mean_macro_f1 += run.report.macro_f1 / n;
        result.mean_accuracy += run.report.accuracy / n;
    }
    if (!job.out_dir.empty()) {
        write_text_file((fs::path(job.out_dir) / "oneshot.json").string(),
                        result.to_json_text() + "\n");
    }
    return result;
}

PredictResult run_predict(const Checkpoint& ckpt, const std::vector<std::string>& fields) {
    Vocabulary vocab = build_vocabulary(ckpt.schema);
    std::vector<std::string> digits(fields.size());
    if (static_cast<int>(fields.size()) != ckpt.schema.num_fields())
        fail(Errc::schema_mismatch,
             "expected " + std::to_string(ckpt.schema.num_fields()) + " fields, got " +
                 std::to_string(fields.size()));
    for (size_t i = 0; i < fields.size(); ++i)
        digits[i] = normalize_field(fields[i], ckpt.schema.fields[i]);
    // class 0 as a placeholder: prediction never reads the label slot
    TokenizedPacket tp = tokenize_packet(digits, 0, ckpt.schema, vocab);
    auto [cls, probs] = predict_label(tp, ckpt.params, ckpt.model, vocab);
    return {cls, ckpt.schema.label_names[cls], std::move(probs)};
}

AttentionReport run_attention(const Checkpoint& ckpt, const std::string& checkpoint_digest,
                              const std::vector<std::string>& fields,
                              const std::string& source_desc, AttnAgg mode,
                              std::optional<int> label) {
    Vocabulary vocab = build_vocabulary(ckpt.schema);
    if (static_cast<int>(fields.size()) != ckpt.schema.num_fields())
        fail(Errc::schema_mismatch,
             "expected " + std::to_string(ckpt.schema.num_fields()) + " fields, got " +
                 std::to_string(fields.size()));
    std::vector<std::string> digits(fields.size());
    for (size_t i = 0; i < fields.size(); ++i)
        digits[i] = normalize_field(fields[i], ckpt.schema.fields[i]);
    // without a given label, put the model's own prediction in the label slot
    int slot = label.value_or(0);
    if (!label) {
        TokenizedPacket probe = tokenize_packet(digits, 0, ckpt.schema, vocab);
        slot = predict_label(probe, ckpt.params, ckpt.model, vocab).first;
    }
    TokenizedPacket tp = tokenize_packet(digits, slot, ckpt.schema, vocab);
    AttentionReport report =
        attention_report(tp, ckpt.params, ckpt.model, ckpt.schema, vocab, mode);
    report.checkpoint_digest = checkpoint_digest;
    report.packet_source = source_desc;
    return report;
}

} // namespace packetlm
