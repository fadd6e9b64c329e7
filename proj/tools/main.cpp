// packetlm command line: split / train / eval / oneshot / predict / attention.
// Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "packetlm/config_io.hpp"
#include "packetlm/error.hpp"
#include "packetlm/pipeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace packetlm;

namespace {

int exit_code_for(Errc c) {
    switch (c) {
    case Errc::config_error:
    case Errc::schema_error:
        return 1;
    case Errc::non_finite_gradient:
    case Errc::empty_mask:
    case Errc::shape_mismatch:
        return 3;
    default:
        return 2;
    }
}

// Relative config paths fall back to $PACKETLM_CONFIG_DIR.
std::string resolve_config_path(const std::string& path) {
    if (path.empty() || fs::exists(path) || fs::path(path).is_absolute()) return path;
    if (const char* dir = std::getenv("PACKETLM_CONFIG_DIR")) {
        fs::path candidate = fs::path(dir) / path;
        if (fs::exists(candidate)) return candidate.string();
    }
    return path;
}

json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return json::parse(ss.str());
    } catch (const json::exception& e) {
        fail(Errc::config_error, "'" + path + "' is not valid JSON: " + e.what());
    }
}

std::vector<std::string> split_commas(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    return out;
}

struct TrainFlags {
    std::string config_path, model_preset;
    int epochs = 0, batch = 0, warmup = -2;
    double lr = 0.0, min_lr = -2.0;
    uint64_t seed = 0;
    bool has_epochs = false, has_batch = false, has_warmup = false;
    bool has_lr = false, has_min_lr = false, has_seed = false;
};

// flag > config file > preset default > built-in default ("base")
TrainConfig assemble_train_config(const TrainFlags& f) {
    TrainConfig cfg;
    cfg.model = named_model_config("base");
    bool file_has_lr = false;
    if (!f.config_path.empty()) {
        json j = parse_json_file(resolve_config_path(f.config_path));
        cfg = train_config_from_json(j);
        if (!j.contains("model")) cfg.model = named_model_config("base");
        file_has_lr = j.contains("base_lr");
    }
    if (!f.model_preset.empty()) {
        ModelConfig preset = named_model_config(f.model_preset);
        cfg.model.n_layers = preset.n_layers;
        cfg.model.n_heads = preset.n_heads;
        cfg.model.emb_size = preset.emb_size;
        if (cfg.model.seq_len == 0) cfg.model.seq_len = preset.seq_len;
        if (!f.has_lr && !file_has_lr)
            cfg.base_lr = named_model_default_lr(f.model_preset);
    }
    if (f.has_epochs) cfg.epochs = f.epochs;
    if (f.has_batch) cfg.batch_size = f.batch;
    if (f.has_warmup) cfg.warmup_steps = f.warmup;
    if (f.has_lr) cfg.base_lr = f.lr;
    if (f.has_min_lr) cfg.min_lr = f.min_lr;
    if (f.has_seed) cfg.seed = f.seed;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"digit-level packet language model"};
    app.require_subcommand(1);

    // ---- split ----
    auto* cmd_split = app.add_subcommand("split", "sample train/test splits from a CSV");
    std::string split_config, split_out, split_input, split_schema, split_mode, split_name;
    uint64_t split_seed = 0;
    double split_ratio = -1.0;
    cmd_split->add_option("--config", split_config, "split job JSON")->required();
    cmd_split->add_option("--out", split_out, "output directory override");
    cmd_split->add_option("--input", split_input, "input CSV override");
    cmd_split->add_option("--schema", split_schema, "schema file override");
    cmd_split->add_option("--mode", split_mode, "ratio|one_shot override");
    cmd_split->add_option("--name", split_name, "split name override");
    cmd_split->add_option("--ratio", split_ratio, "imbalance ratio override");
    auto* split_seed_opt = cmd_split->add_option("--seed", split_seed, "seed override");

    // ---- train ----
    auto* cmd_train = app.add_subcommand("train", "train a model on a CSV split");
    std::string train_schema, train_data, train_out, train_log;
    TrainFlags tf;
    bool train_quiet = false;
    cmd_train->add_option("--schema", train_schema, "schema file")->required();
    cmd_train->add_option("--data", train_data, "training CSV")->required();
    cmd_train->add_option("--out", train_out, "checkpoint output path")->required();
    cmd_train->add_option("--log", train_log, "training log JSONL path");
    cmd_train->add_option("--config", tf.config_path, "train config JSON");
    cmd_train->add_option("--model", tf.model_preset, "preset: base|small|middle");
    auto* o_epochs = cmd_train->add_option("--epochs", tf.epochs);
    auto* o_batch = cmd_train->add_option("--batch", tf.batch);
    auto* o_warmup = cmd_train->add_option("--warmup", tf.warmup);
    auto* o_lr = cmd_train->add_option("--lr", tf.lr);
    auto* o_min_lr = cmd_train->add_option("--min-lr", tf.min_lr);
    auto* o_seed = cmd_train->add_option("--seed", tf.seed);
    cmd_train->add_flag("--quiet", train_quiet);

    // ---- eval ----
    auto* cmd_eval = app.add_subcommand("eval", "evaluate a checkpoint on a CSV");
    std::string eval_ckpt, eval_data, eval_report, eval_preds;
    cmd_eval->add_option("--checkpoint", eval_ckpt)->required();
    cmd_eval->add_option("--data", eval_data)->required();
    cmd_eval->add_option("--report", eval_report, "metrics JSON output");
    cmd_eval->add_option("--predictions", eval_preds, "per-row predictions CSV");

    // ---- oneshot ----
    auto* cmd_oneshot = app.add_subcommand(
        "oneshot", "multi-seed one-shot protocol: split, train, evaluate, average");
    std::string os_schema, os_data, os_out, os_seeds;
    TrainFlags of;
    int64_t os_maj_train = 0, os_maj_test = 0, os_min_test = 0;
    bool os_quiet = false;
    cmd_oneshot->add_option("--schema", os_schema)->required();
    cmd_oneshot->add_option("--data", os_data, "full record pool CSV")->required();
    cmd_oneshot->add_option("--seeds", os_seeds, "comma separated seed list")->required();
    cmd_oneshot->add_option("--out", os_out, "output directory");
    cmd_oneshot->add_option("--config", of.config_path, "train config JSON");
    cmd_oneshot->add_option("--model", of.model_preset, "preset: base|small|middle");
    auto* oo_epochs = cmd_oneshot->add_option("--epochs", of.epochs);
    auto* oo_batch = cmd_oneshot->add_option("--batch", of.batch);
    auto* oo_lr = cmd_oneshot->add_option("--lr", of.lr);
    cmd_oneshot->add_option("--majority-train", os_maj_train)->required();
    cmd_oneshot->add_option("--majority-test", os_maj_test)->required();
    cmd_oneshot->add_option("--minority-test", os_min_test)->required();
    cmd_oneshot->add_flag("--quiet", os_quiet);

    // ---- predict ----
    auto* cmd_predict = app.add_subcommand("predict", "classify one packet record");
    std::string pr_ckpt, pr_fields;
    cmd_predict->add_option("--checkpoint", pr_ckpt)->required();
    cmd_predict->add_option("--fields", pr_fields, "comma separated raw field values")
        ->required();

    // ---- attention ----
    auto* cmd_attention =
        app.add_subcommand("attention", "export attention weights for one packet");
    std::string at_ckpt, at_fields, at_mode = "mean-over-layers-and-heads";
    std::string at_out, at_heatmap, at_label;
    cmd_attention->add_option("--checkpoint", at_ckpt)->required();
    cmd_attention->add_option("--fields", at_fields)->required();
    cmd_attention->add_option("--mode", at_mode,
                              "per-head|mean-over-heads|mean-over-layers-and-heads");
    cmd_attention->add_option("--out", at_out, "report JSON path")->required();
    cmd_attention->add_option("--heatmap", at_heatmap, "optional PGM heatmap path");
    cmd_attention->add_option("--label", at_label, "label name for the label slot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*cmd_split) {
            SplitJob job = split_job_from_json_file(resolve_config_path(split_config));
            if (!split_out.empty()) job.out_dir = split_out;
            if (!split_input.empty()) job.input_csv = split_input;
            if (!split_schema.empty()) job.schema_path = split_schema;
            if (!split_name.empty()) job.spec.name = split_name;
            if (!split_mode.empty()) {
                if (split_mode == "ratio") job.spec.mode = SplitSpec::Mode::ratio;
                else if (split_mode == "one_shot") job.spec.mode = SplitSpec::Mode::one_shot;
                else fail(Errc::config_error, "--mode must be ratio or one_shot");
            }
            if (split_ratio >= 0.0) job.spec.ratio = split_ratio;
            if (split_seed_opt->count() > 0) job.spec.seed = split_seed;
            DatasetManifest manifest = run_split(job);
            std::cout << manifest.to_json_text() << "\n";
        } else if (*cmd_train) {
            tf.has_epochs = o_epochs->count() > 0;
            tf.has_batch = o_batch->count() > 0;
            tf.has_warmup = o_warmup->count() > 0;
            tf.has_lr = o_lr->count() > 0;
            tf.has_min_lr = o_min_lr->count() > 0;
            tf.has_seed = o_seed->count() > 0;
            TrainJob job;
            job.schema_path = train_schema;
            job.train_csv = train_data;
            job.out_checkpoint = train_out;
            job.out_log = train_log;
            job.quiet = train_quiet;
            job.config = assemble_train_config(tf);
            auto log = run_train(job);
            if (!log.empty())
                std::cout << "final epoch " << log.back().epoch << " mean_nll "
                          << log.back().mean_nll << "\n";
        } else if (*cmd_eval) {
            EvalResult result = run_eval(eval_ckpt, eval_data, eval_report, eval_preds);
            std::cout << result.report.to_text();
        } else if (*cmd_oneshot) {
            of.has_epochs = oo_epochs->count() > 0;
            of.has_batch = oo_batch->count() > 0;
            of.has_lr = oo_lr->count() > 0;
            OneshotJob job;
            job.schema_path = os_schema;
            job.records_csv = os_data;
            job.config = assemble_train_config(of);
            job.split.mode = SplitSpec::Mode::one_shot;
            job.split.majority_train = os_maj_train;
            job.split.majority_test = os_maj_test;
            job.split.minority_test = os_min_test;
            for (const auto& s : split_commas(os_seeds))
                job.seeds.push_back(std::stoull(s));
            job.out_dir = os_out;
            job.quiet = os_quiet;
            OneshotResult result = run_oneshot(job);
            std::cout << result.to_text();
        } else if (*cmd_predict) {
            Checkpoint ckpt = load_checkpoint(pr_ckpt);
            PredictResult result = run_predict(ckpt, split_commas(pr_fields));
            json j{{"class_id", result.class_id},
                   {"class_name", result.class_name},
                   {"probabilities", result.probabilities}};
            std::cout << j.dump(2) << "\n";
        } else if (*cmd_attention) {
            Checkpoint ckpt = load_checkpoint(at_ckpt);
            std::optional<int> label;
            if (!at_label.empty()) {
                int k = ckpt.schema.label_index(at_label);
                if (k < 0)
                    fail(Errc::config_error, "label '" + at_label + "' not in schema");
                label = k;
            }
            AttentionReport report =
                run_attention(ckpt, file_digest(at_ckpt), split_commas(at_fields),
                              "--fields", attn_agg_from_name(at_mode), label);
            std::ofstream out(at_out);
            if (!out) fail(Errc::io_failure, "cannot write '" + at_out + "'");
            out << report.to_json_text() << "\n";
            if (!at_heatmap.empty() && !report.entries.empty())
                write_pgm_heatmap(report.entries.front().field, at_heatmap);
            std::cout << "wrote " << at_out << " (" << report.entries.size()
                      << " matrices)\n";
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
