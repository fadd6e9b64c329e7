// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run a subset by listing criterion numbers as arguments.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "packetlm/attention.hpp"
#include "packetlm/checkpoint.hpp"
#include "packetlm/datasets.hpp"
#include "packetlm/metrics.hpp"
#include "packetlm/pipeline.hpp"
#include "packetlm/trainer.hpp"
#include "support/common.hpp"
#include "support/golden_fixtures.hpp"
#include "support/reference_model.hpp"

using namespace packetlm;
namespace fs = std::filesystem;

namespace {

struct Ctx {
    std::vector<std::string> notes;
    void note(const std::string& s) { notes.push_back(s); }
};

#define EXPECT(cond, msg)                                                              \
    do {                                                                               \
        if (!(cond)) throw std::runtime_error(msg);                                    \
    } while (0)

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// ---- criterion 1: tokenizer golden suite --------------------------------
void criterion_tokenizer_goldens(Ctx& ctx) {
    const auto& fixtures = testsupport::golden_fixtures();
    EXPECT(fixtures.size() >= 21, "expected at least 21 fixtures");
    for (const auto& g : fixtures) {
        const std::string err = testsupport::check_golden_fixture(g);
        EXPECT(err.empty(), "fixture mismatch: " + err);
    }
    ctx.note(std::to_string(fixtures.size()) + " fixtures");
}

// ---- criterion 2: round-trip property ------------------------------------
void criterion_round_trip(Ctx& ctx) {
    Rng rng(987654321);
    const int cases = 10000;
    for (int i = 0; i < cases; ++i) {
        auto c = testsupport::random_case(rng);
        auto vocab = build_vocabulary(c.schema);
        auto tp = tokenize_packet(c.fields, c.label, c.schema, vocab);
        auto [fields, label] = detokenize(tp, c.schema, vocab);
        EXPECT(fields == c.fields && label == c.label,
               "round-trip failed at case " + std::to_string(i));
    }
    ctx.note(std::to_string(cases) + " randomized cases");
}

// ---- criterion 3: causality -----------------------------------------------
void criterion_causality(Ctx& ctx) {
    Rng rng(31337);
    for (int trial = 0; trial < 100; ++trial) {
        const int heads = 1 + static_cast<int>(uniform_below(rng, 2));
        auto schema = testsupport::make_schema({2, 2}, 3, 10, 4);
        auto vocab = build_vocabulary(schema);
        ModelConfig cfg;
        cfg.n_layers = 1 + static_cast<int>(uniform_below(rng, 2));
        cfg.n_heads = heads;
        cfg.emb_size = 4 * heads;
        cfg.bind(schema);
        auto params = ModelParamsT<float>::init(cfg, rng);
        auto tp = tokenize_packet({std::to_string(uniform_below(rng, 100)),
                                   std::to_string(uniform_below(rng, 100))},
                                  static_cast<int>(uniform_below(rng, 3)), schema,
                                  vocab);
        auto base = forward(tp, params, cfg, false);
        const int j = 1 + static_cast<int>(
                              uniform_below(rng, static_cast<uint64_t>(cfg.seq_len - 1)));
        auto mutated = tp;
        mutated.token_ids[j] = static_cast<int32_t>(uniform_below(rng, 10));
        mutated.numeric_pos[j] = kNoNumericPos;
        auto moved = forward(mutated, params, cfg, false);
        for (int t = 0; t < j; ++t)
            for (int c = 0; c < cfg.vocab_size; ++c)
                EXPECT(base.logits(t, c) == moved.logits(t, c),
                       "logits row " + std::to_string(t) + " moved after perturbing " +
                           std::to_string(j));
    }
    ctx.note("100 random model/packet pairs, bit-exact");
}

// ---- criterion 4: gradient check ------------------------------------------
void criterion_gradient_check(Ctx& ctx) {
    auto schema = testsupport::make_schema({2, 2}, 3, 10, 4);
    auto vocab = build_vocabulary(schema);
    ModelConfig cfg;
    cfg.n_layers = 1;
    cfg.n_heads = 1;
    cfg.emb_size = 4;
    cfg.bind(schema);
    Rng rng(321);
    auto params = ModelParamsT<double>::init(cfg, rng);
    for (auto& ref : params.tensor_refs())
        for (size_t i = 0; i < ref.count; ++i) ref.data[i] *= 10.0;
    auto tp = tokenize_packet({"40", "6"}, 1, schema, vocab);

    auto analytic = gradients(tp, params, cfg);
    auto a_refs = analytic.tensor_refs();
    auto p_refs = params.tensor_refs();
    const double h = 1e-5;
    double worst = 0.0;
    std::string worst_tensor;
    for (size_t r = 0; r < p_refs.size(); ++r) {
        for (size_t i = 0; i < p_refs[r].count; ++i) {
            const double saved = p_refs[r].data[i];
            p_refs[r].data[i] = saved + h;
            const double up = sequence_nll(forward(tp, params, cfg, false), tp);
            p_refs[r].data[i] = saved - h;
            const double down = sequence_nll(forward(tp, params, cfg, false), tp);
            p_refs[r].data[i] = saved;
            const double fd = (up - down) / (2 * h);
            const double an = a_refs[r].data[i];
            if (std::abs(an - fd) < 1e-9) continue;
            const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-8});
            if (rel > worst) {
                worst = rel;
                worst_tensor = p_refs[r].name;
            }
        }
    }
    EXPECT(worst < 1e-4,
           "worst relative error " + fmt(worst) + " in " + worst_tensor);
    ctx.note("worst rel err " + fmt(worst) + " (" +
             (worst_tensor.empty() ? "none" : worst_tensor) + ")");
}

// ---- criterion 5: loss sanity ---------------------------------------------
void criterion_loss_sanity(Ctx& ctx) {
    auto schema = testsupport::make_schema({2, 2}, 3, 10, 4);
    auto vocab = build_vocabulary(schema);
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.emb_size = 8;
    cfg.bind(schema);
    auto tp = tokenize_packet({"12", "34"}, 1, schema, vocab);

    ForwardTraceT<double> uniform;
    uniform.logits = Mat<double>(cfg.seq_len, cfg.vocab_size);
    const double nll = sequence_nll(uniform, tp);
    EXPECT(std::abs(nll - std::log(cfg.vocab_size)) < 1e-6,
           "uniform NLL " + fmt(nll) + " vs ln V " + fmt(std::log(cfg.vocab_size)));

    Rng rng(8);
    auto params = ModelParamsT<float>::init(cfg, rng);
    auto trace = forward(tp, params, cfg, true);
    for (int t = 0; t < cfg.seq_len; ++t) {
        double mx = trace.logits(t, 0);
        for (int j = 0; j < cfg.vocab_size; ++j)
            mx = std::max(mx, static_cast<double>(trace.logits(t, j)));
        double denom = 0;
        for (int j = 0; j < cfg.vocab_size; ++j)
            denom += std::exp(static_cast<double>(trace.logits(t, j)) - mx);
        double sum = 0;
        for (int j = 0; j < cfg.vocab_size; ++j)
            sum += std::exp(static_cast<double>(trace.logits(t, j)) - mx) / denom;
        EXPECT(std::abs(sum - 1.0) < 1e-6, "softmax row sum " + fmt(sum));
    }
    for (int l = 0; l < cfg.n_layers; ++l)
        for (int hh = 0; hh < cfg.n_heads; ++hh)
            for (int t = 0; t < cfg.seq_len; ++t) {
                double sum = 0;
                for (int s = 0; s < cfg.seq_len; ++s) sum += trace.attn(l, hh)(t, s);
                EXPECT(std::abs(sum - 1.0) < 1e-5, "attention row sum " + fmt(sum));
            }
    ctx.note("ln V match and normalized rows");
}

// ---- criterion 6: metrics oracle ------------------------------------------
void criterion_metrics_oracle(Ctx& ctx) {
    Rng rng(24601);
    for (int trial = 0; trial < 1000; ++trial) {
        const int K = 12;
        const int n = 40 + static_cast<int>(uniform_below(rng, 300));
        std::vector<int> truths(n), preds(n);
        for (int i = 0; i < n; ++i) {
            truths[i] = static_cast<int>(uniform_below(rng, K));
            preds[i] = uniform_below(rng, 3) == 0
                           ? truths[i]
                           : static_cast<int>(uniform_below(rng, K));
        }
        auto cm = confusion(truths, preds, K);
        auto scores = per_class_prf(cm);
        // independent tally
        double brute_weighted = 0, brute_macro = 0;
        for (int k = 0; k < K; ++k) {
            int64_t tp = 0, fp = 0, fn = 0, support = 0;
            for (int i = 0; i < n; ++i) {
                if (truths[i] == k) ++support;
                if (preds[i] == k && truths[i] == k) ++tp;
                if (preds[i] == k && truths[i] != k) ++fp;
                if (preds[i] != k && truths[i] == k) ++fn;
            }
            const double p = tp + fp > 0 ? double(tp) / (tp + fp) : 0.0;
            const double r = tp + fn > 0 ? double(tp) / (tp + fn) : 0.0;
            const double f = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
            EXPECT(std::abs(scores[k].precision - p) < 1e-12, "precision drift");
            EXPECT(std::abs(scores[k].recall - r) < 1e-12, "recall drift");
            EXPECT(std::abs(scores[k].f1 - f) < 1e-12, "f1 drift");
            brute_weighted += double(support) / n * f;
            brute_macro += f / K;
        }
        EXPECT(std::abs(weighted_f1(cm) - brute_weighted) < 1e-12, "weighted drift");
        EXPECT(std::abs(unweighted_macro_f1(cm) - brute_macro) < 1e-12, "macro drift");
    }
    // the supports-90/10 example separates the two conventions
    EXPECT(std::abs(support_weighted_mean({1.0, 0.0}, {90, 10}) - 0.9) < 1e-12,
           "weighted 90/10 example");
    EXPECT(std::abs(plain_mean({1.0, 0.0}) - 0.5) < 1e-12, "unweighted 90/10 example");
    ctx.note("1000 random 12-class sets + 90/10 example");
}

// shared config for the end-to-end runs
TrainConfig synth_train_config(const PacketSchema& schema, int epochs, uint64_t seed) {
    TrainConfig cfg;
    cfg.model.n_layers = 2;
    cfg.model.n_heads = 2;
    cfg.model.emb_size = 32;
    cfg.model.bind(schema);
    cfg.epochs = epochs;
    cfg.base_lr = 3e-3;
    cfg.batch_size = 128;
    cfg.seed = seed;
    return cfg;
}

// ---- criterion 7: end-to-end synthetic run --------------------------------
void criterion_synthetic_end_to_end(Ctx& ctx) {
    auto schema = synth_schema();
    auto vocab = build_vocabulary(schema);
    auto train_records = synth_generate(20000, 20240601);
    auto test_records = synth_generate(4000, 20240602);
    auto packets = tokenize_records(train_records, schema, vocab);

    TrainConfig cfg = synth_train_config(schema, 20, 1);
    Trainer trainer(schema, cfg, &packets);
    trainer.run();
    const auto& log = trainer.log();
    EXPECT(log.size() == 20, "expected 20 epochs");
    EXPECT(log.back().mean_nll < log.front().mean_nll,
           "NLL did not decrease: " + fmt(log.front().mean_nll) + " -> " +
               fmt(log.back().mean_nll));

    auto eval = evaluate_records(test_records, trainer.params(), cfg.model, schema);
    EXPECT(eval.report.macro_f1 >= 0.99,
           "held-out unweighted macro-F1 " + fmt(eval.report.macro_f1) + " < 0.99");

    // determinism: a second run from the same seed reproduces the first two
    // epoch NLLs bit for bit
    Trainer repeat(schema, cfg, &packets);
    repeat.run_epoch();
    repeat.run_epoch();
    EXPECT(repeat.log()[0].mean_nll == log[0].mean_nll &&
               repeat.log()[1].mean_nll == log[1].mean_nll,
           "trajectory is not deterministic under the fixed seed");

    ctx.note("macro-F1 " + fmt(eval.report.macro_f1) + ", NLL " +
             fmt(log.front().mean_nll) + " -> " + fmt(log.back().mean_nll));
}

// ---- criterion 8: imbalance robustness ------------------------------------
void criterion_imbalance(Ctx& ctx) {
    auto schema = synth_schema();
    auto vocab = build_vocabulary(schema);
    double recall_sum = 0;
    int recall_count = 0;
    std::vector<std::string> per_seed;
    for (uint64_t seed : {11ull, 12ull, 13ull}) {
        SynthConfig pool_cfg;
        pool_cfg.class_counts = {22100, 72, 72, 72};
        pool_cfg.seed = 5000 + seed;
        auto pool = synth_generate(pool_cfg);

        SplitSpec spec;
        spec.mode = SplitSpec::Mode::ratio;
        spec.ratio = 0.001;
        spec.seed = seed;
        spec.majority_class = 0;
        spec.majority_train = 20000;
        spec.majority_test = 2000;
        spec.minority_test = 50;
        auto split = make_split(pool, spec, schema);
        EXPECT(split.manifest.train_counts[1] == 20, "expected 20 minority samples");

        auto packets = tokenize_records(split.train, schema, vocab);
        // smaller batches give the rare-class gradient more optimizer steps;
        // the majority-only local optimum takes ~25 epochs to escape
        TrainConfig cfg = synth_train_config(schema, 48, seed);
        cfg.batch_size = 32;
        Trainer trainer(schema, cfg, &packets);
        trainer.run();

        auto eval = evaluate_records(split.test, trainer.params(), cfg.model, schema);
        double mean_minority = 0;
        for (int k = 1; k < 4; ++k) mean_minority += eval.report.per_class[k].recall / 3;
        recall_sum += mean_minority;
        ++recall_count;
        per_seed.push_back(fmt(mean_minority));
    }
    const double avg = recall_sum / recall_count;
    EXPECT(avg >= 0.9, "minority recall " + fmt(avg) + " < 0.9 over 3 seeds");
    ctx.note("minority recall per seed " + per_seed[0] + "/" + per_seed[1] + "/" +
             per_seed[2] + ", mean " + fmt(avg));
}

// ---- criterion 9: one-shot protocol ----------------------------------------
void criterion_oneshot_protocol(Ctx& ctx) {
    const fs::path dir = fs::temp_directory_path() /
                         ("packetlm_acc_oneshot_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto schema = synth_schema();
    const std::string schema_path = (dir / "schema.json").string();
    save_schema(schema, schema_path);
    auto records = synth_generate(800, 31415);
    const std::string pool_path = (dir / "pool.csv").string();
    write_records_csv(records, schema, pool_path);

    OneshotJob job;
    job.schema_path = schema_path;
    job.records_csv = pool_path;
    job.config.model.n_layers = 1;
    job.config.model.n_heads = 2;
    job.config.model.emb_size = 16;
    job.config.model.bind(schema);
    job.config.epochs = 3;
    job.config.base_lr = 5e-3;
    job.config.batch_size = 16;
    job.split.majority_train = 60;
    job.split.majority_test = 60;
    job.split.minority_test = 10;
    job.seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    job.out_dir = (dir / "out").string();
    job.quiet = true;

    auto result = run_oneshot(job);
    EXPECT(result.runs.size() == 10, "expected 10 per-seed runs");
    for (uint64_t s = 1; s <= 10; ++s)
        EXPECT(fs::exists(dir / "out" / ("seed_" + std::to_string(s) + ".json")),
               "missing per-seed report " + std::to_string(s));

    auto check_mean = [&](double mean, auto getter, const char* what) {
        double acc = 0;
        for (const auto& run : result.runs) acc += getter(run.report) / 10.0;
        EXPECT(std::abs(mean - acc) < 1e-12,
               std::string(what) + " mean drifts from the arithmetic mean");
    };
    check_mean(result.mean_weighted_f1,
               [](const MetricsReport& r) { return r.weighted_f1; }, "weighted f1");
    check_mean(result.mean_macro_f1,
               [](const MetricsReport& r) { return r.macro_f1; }, "macro f1");
    check_mean(result.mean_weighted_precision,
               [](const MetricsReport& r) { return r.weighted_precision; }, "precision");
    check_mean(result.mean_weighted_recall,
               [](const MetricsReport& r) { return r.weighted_recall; }, "recall");
    check_mean(result.mean_accuracy,
               [](const MetricsReport& r) { return r.accuracy; }, "accuracy");

    std::error_code ec;
    fs::remove_all(dir, ec);
    ctx.note("10 seeds, mean exact to 1e-12");
}

// ---- criterion 10: checkpoint round-trip and resume ------------------------
void criterion_checkpoint(Ctx& ctx) {
    const fs::path dir = fs::temp_directory_path() /
                         ("packetlm_acc_ckpt_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto schema = synth_schema();
    auto vocab = build_vocabulary(schema);
    auto records = synth_generate(300, 777);
    auto packets = tokenize_records(records, schema, vocab);

    TrainConfig cfg;
    cfg.model.n_layers = 1;
    cfg.model.n_heads = 2;
    cfg.model.emb_size = 16;
    cfg.model.bind(schema);
    cfg.epochs = 6;
    cfg.base_lr = 3e-3;
    cfg.batch_size = 32;
    cfg.seed = 4242;

    // fresh model round-trips bit-identically
    Trainer init_only(schema, cfg, &packets);
    const std::string fresh_path = (dir / "fresh.ckpt").string();
    save_checkpoint(init_only.snapshot(), fresh_path);
    auto fresh = load_checkpoint(fresh_path);
    EXPECT(fresh.params == init_only.snapshot().params, "fresh round-trip not bit-identical");

    Trainer full(schema, cfg, &packets);
    full.run();

    Trainer half(schema, cfg, &packets);
    for (int i = 0; i < 3; ++i) half.run_epoch();
    const std::string mid_path = (dir / "mid.ckpt").string();
    save_checkpoint(half.snapshot(), mid_path);
    auto mid = load_checkpoint(mid_path);
    EXPECT(mid.params == half.snapshot().params, "mid round-trip not bit-identical");
    EXPECT(mid.adam_m == half.snapshot().adam_m, "moments not bit-identical");

    Trainer resumed(mid, &packets);
    resumed.run();
    const double drift =
        std::abs(resumed.log().back().mean_nll - full.log().back().mean_nll);
    EXPECT(drift < 1e-6, "resume drifts from the unbroken run by " + fmt(drift));

    std::error_code ec;
    fs::remove_all(dir, ec);
    ctx.note("bit-exact round-trip, resume drift " + fmt(drift));
}

// ---- criterion 11: attention export ----------------------------------------
void criterion_attention_export(Ctx& ctx) {
    auto schema = synth_schema();
    auto vocab = build_vocabulary(schema);
    auto record = synth_generate(1, 2024)[0];
    auto tp = tokenize_packet(record.fields, record.label, schema, vocab);

    // rows sum to one on a random model, all aggregation modes
    ModelConfig cfg;
    cfg.n_layers = 2;
    cfg.n_heads = 2;
    cfg.emb_size = 16;
    cfg.bind(schema);
    Rng rng(6);
    auto params = ModelParamsT<float>::init(cfg, rng);
    for (auto mode : {AttnAgg::per_head, AttnAgg::mean_heads, AttnAgg::mean_all}) {
        auto report = attention_report(tp, params, cfg, schema, vocab, mode);
        for (const auto& e : report.entries)
            for (int r = 0; r < e.field.rows; ++r) {
                double sum = 0;
                for (int c = 0; c < e.field.cols; ++c) sum += e.field(r, c);
                EXPECT(std::abs(sum - 1.0) < 1e-5, "aggregated row sum " + fmt(sum));
            }
    }

    // uniform attention matches the token-count closed form
    auto spans = field_spans(tp, schema, vocab);
    const int n = tp.label_pos + 1;
    Mat<double> uniform(n, n);
    for (int q = 0; q < n; ++q)
        for (int k = 0; k <= q; ++k) uniform(q, k) = 1.0 / (q + 1);
    auto field = aggregate_attention_fields(uniform, spans);
    const int B = static_cast<int>(spans.size());
    for (int Q = 0; Q < B; ++Q) {
        double row_mass = 0;
        std::vector<double> cells(B, 0.0);
        for (int q = spans[Q].first; q < spans[Q].second; ++q)
            for (int b = 0; b < B; ++b) {
                int overlap = 0;
                for (int k = spans[b].first; k < spans[b].second; ++k)
                    if (k <= q) ++overlap;
                const double mass = static_cast<double>(overlap) / (q + 1);
                cells[b] += mass;
                row_mass += mass;
            }
        for (int b = 0; b < B; ++b)
            EXPECT(std::abs(field(Q, b) - cells[b] / row_mass) < 1e-12,
                   "closed form mismatch at (" + std::to_string(Q) + "," +
                       std::to_string(b) + ")");
    }
    ctx.note("rows normalized, closed form exact");
}

// ---- criterion 12: scale instantiation -------------------------------------
void criterion_scale_instantiation(Ctx& ctx) {
    auto schema = testsupport::make_schema(std::vector<int>(12, 18), 12, 256, 18);
    auto vocab = build_vocabulary(schema);
    std::vector<std::string> long_fields(12, "123456789012345678");
    auto tp = tokenize_packet(long_fields, 3, schema, vocab);
    EXPECT(tp.label_pos == 228, "expected a near-full sequence");

    std::string sizes;
    for (const std::string name : {"base", "small", "middle"}) {
        ModelConfig mc = named_model_config(name);
        mc.bind(schema);
        mc.validate();
        TrainConfig cfg;
        cfg.model = mc;
        cfg.seed = 3;
        Rng rng(3);
        auto params = ModelParamsT<float>::init(mc, rng);
        auto grads = ModelParamsT<float>::zeros(mc);
        auto m = ModelParamsT<float>::zeros(mc);
        auto v = ModelParamsT<float>::zeros(mc);

        detail::Engine<float> engine(mc);
        double nll = 0;
        for (int b = 0; b < 2; ++b) { // batch of two
            engine.forward(tp, params, mc.seq_len, false);
            nll += engine.nll(tp) / 2;
            engine.backward(tp, params, grads, 0.5f);
        }
        adam_step(params, grads, m, v, 0, named_model_default_lr(name), cfg);
        EXPECT(std::isfinite(nll), name + " produced a non-finite loss");
        sizes += name + "=" + std::to_string(params.parameter_count()) + " ";
    }
    ctx.note("forward+backward+update at L=256, batch 2: " + sizes);
}

struct Criterion {
    int id;
    const char* label;
    std::function<void(Ctx&)> run;
};

} // namespace

int main(int argc, char** argv) {
    std::set<int> filter;
    for (int i = 1; i < argc; ++i) filter.insert(std::atoi(argv[i]));

    const std::vector<Criterion> criteria = {
        {1, "tokenizer golden suite", criterion_tokenizer_goldens},
        {2, "detokenize/tokenize round-trip property", criterion_round_trip},
        {3, "causality under suffix perturbation", criterion_causality},
        {4, "gradient check against central differences", criterion_gradient_check},
        {5, "loss and normalization sanity", criterion_loss_sanity},
        {6, "metrics against brute-force oracle", criterion_metrics_oracle},
        {7, "synthetic end-to-end training", criterion_synthetic_end_to_end},
        {8, "imbalance robustness at ratio 0.001", criterion_imbalance},
        {9, "one-shot protocol over 10 seeds", criterion_oneshot_protocol},
        {10, "checkpoint round-trip and resume", criterion_checkpoint},
        {11, "attention export invariants", criterion_attention_export},
        {12, "table-size configs at full length", criterion_scale_instantiation},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        if (!filter.empty() && !filter.count(c.id)) continue;
        Ctx ctx;
        const auto start = std::chrono::steady_clock::now();
        std::string error;
        try {
            c.run(ctx);
        } catch (const std::exception& e) {
            error = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                .count();
        char line[512];
        if (error.empty()) {
            std::snprintf(line, sizeof(line), "[%2d/12] PASS %-44s (%.1fs)%s%s", c.id,
                          c.label, secs, ctx.notes.empty() ? "" : "  -- ",
                          ctx.notes.empty() ? "" : ctx.notes.front().c_str());
        } else {
            std::snprintf(line, sizeof(line), "[%2d/12] FAIL %-44s (%.1fs)  -- %s", c.id,
                          c.label, secs, error.c_str());
            ++failures;
        }
        std::cout << line << std::endl;
    }
    if (failures > 0) {
        std::cout << failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all criteria passed" << std::endl;
    return 0;
}
