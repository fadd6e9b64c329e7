#include "packetlm/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "packetlm/error.hpp"
#include "packetlm/rng.hpp"

namespace packetlm {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// One CSV line -> cells. Handles quoted cells with doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

} // namespace

LoadResult load_csv(const std::string& path, const PacketSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_failure, "cannot open '" + path + "'");

    std::string header_line;
    if (!std::getline(in, header_line))
        fail(Errc::empty_file, "'" + path + "' has no header row");
    const auto header = split_csv_line(header_line);

    auto find_column = [&](const std::string& name) -> int {
        for (size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        return -1;
    };

    std::vector<int> field_cols;
    for (const auto& f : schema.fields) {
        int idx = find_column(f.csv_column);
        if (idx < 0)
            fail(Errc::missing_column,
                 "'" + path + "' lacks column '" + f.csv_column + "'");
        field_cols.push_back(idx);
    }
    const int label_col = find_column(schema.label_column);
    if (label_col < 0)
        fail(Errc::missing_column,
             "'" + path + "' lacks label column '" + schema.label_column + "'");

    LoadResult out;
    std::string line;
    int64_t row_index = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) {
            ++row_index;
            continue;
        }
        const auto cells = split_csv_line(line);
        auto cell = [&](int idx) -> std::string {
            return idx < static_cast<int>(cells.size()) ? cells[idx] : std::string();
        };

        LabeledRecord rec;
        rec.row_index = row_index;
        bool rejected = false;

        const std::string label_text = trim(cell(label_col));
        rec.label = schema.label_index(label_text);
        if (rec.label < 0) {
            out.rejects.push_back({row_index, schema.label_column, "UnknownLabel",
                                   "label '" + label_text + "' not in schema"});
            rejected = true;
        }

        if (!rejected) {
            for (size_t i = 0; i < schema.fields.size(); ++i) {
                const std::string raw = cell(field_cols[i]);
                try {
                    normalize_field(raw, schema.fields[i]);
                } catch (const Error& e) {
                    out.rejects.push_back({row_index, schema.fields[i].csv_column,
                                           errc_name(e.code()), e.what()});
                    rejected = true;
                    break;
                }
                rec.fields.push_back(raw);
            }
        }
        if (!rejected) out.records.push_back(std::move(rec));
        ++row_index;
    }
    return out;
}

std::vector<TokenizedPacket> tokenize_records(const std::vector<LabeledRecord>& records,
                                              const PacketSchema& schema,
                                              const Vocabulary& vocab) {
    std::vector<TokenizedPacket> out;
    out.reserve(records.size());
    std::vector<std::string> digits(schema.fields.size());
    for (const auto& rec : records) {
        if (rec.fields.size() != schema.fields.size())
            fail(Errc::length_mismatch, "record field count does not match schema");
        for (size_t i = 0; i < rec.fields.size(); ++i)
            digits[i] = normalize_field(rec.fields[i], schema.fields[i]);
        out.push_back(tokenize_packet(digits, rec.label, schema, vocab));
    }
    return out;
}

std::string DatasetManifest::to_json_text() const {
    json per_class = json::array();
    for (size_t k = 0; k < class_names.size(); ++k) {
        per_class.push_back({{"class", class_names[k]},
                             {"train", train_counts[k]},
                             {"test", test_counts[k]}});
    }
    json j{{"name", name},
           {"seed", seed},
           {"mode", mode},
           {"per_class", per_class},
           {"train_total", train_total},
           {"test_total", test_total},
           {"source_digest", source_digest}};
    return j.dump(2);
}

SplitResult make_split(const std::vector<LabeledRecord>& records, const SplitSpec& spec,
                       const PacketSchema& schema, const std::string& source_digest) {
    const int K = schema.num_classes();
    if (spec.majority_class < 0 || spec.majority_class >= K)
        fail(Errc::label_out_of_range, "majority_class outside the label set");
    if (spec.mode == SplitSpec::Mode::ratio && spec.explicit_counts.empty() &&
        !(spec.ratio > 0.0))
        fail(Errc::config_error, "ratio mode needs a positive ratio");

    std::vector<std::vector<int64_t>> by_class(K);
    for (size_t i = 0; i < records.size(); ++i) {
        const int label = records[i].label;
        if (label < 0 || label >= K)
            fail(Errc::label_out_of_range,
                 "record with label " + std::to_string(label));
        by_class[label].push_back(static_cast<int64_t>(i));
    }

    auto requested = [&](int k) -> std::pair<int64_t, int64_t> {
        auto it = spec.explicit_counts.find(k);
        if (it != spec.explicit_counts.end()) return it->second;
        if (k == spec.majority_class) return {spec.majority_train, spec.majority_test};
        if (spec.mode == SplitSpec::Mode::one_shot) return {1, spec.minority_test};
        return {std::llround(spec.ratio * static_cast<double>(spec.majority_train)),
                spec.minority_test};
    };

    SplitResult out;
    out.manifest.name = spec.name;
    out.manifest.seed = spec.seed;
    out.manifest.mode = spec.mode == SplitSpec::Mode::one_shot ? "one_shot" : "ratio";
    out.manifest.class_names = schema.label_names;
    out.manifest.train_counts.assign(K, 0);
    out.manifest.test_counts.assign(K, 0);
    out.manifest.source_digest = source_digest;

    for (int k = 0; k < K; ++k) {
        auto [want_train, want_test] = requested(k);
        if (want_train < 0 || want_test < 0)
            fail(Errc::config_error, "negative sample count requested");
        if (want_train + want_test == 0) continue;
        auto& pool = by_class[k];
        if (static_cast<int64_t>(pool.size()) < want_train + want_test)
            fail(Errc::insufficient_samples,
                 "class '" + schema.label_names[k] + "' has " +
                     std::to_string(pool.size()) + " rows, needs " +
                     std::to_string(want_train + want_test));
        Rng rng(mix_seed(spec.seed, static_cast<uint64_t>(k)));
        shuffle(pool, rng);
        for (int64_t i = 0; i < want_train; ++i)
            out.train.push_back(records[pool[i]]);
        for (int64_t i = 0; i < want_test; ++i)
            out.test.push_back(records[pool[want_train + i]]);
        out.manifest.train_counts[k] = want_train;
        out.manifest.test_counts[k] = want_test;
    }
    out.manifest.train_total = static_cast<int64_t>(out.train.size());
    out.manifest.test_total = static_cast<int64_t>(out.test.size());
    return out;
}

PacketSchema synth_schema() {
    PacketSchema s;
    s.schema_version = 1;
    s.seq_len = 64;
    s.max_numeric_len = 8;
    s.label_names = {"benign", "probe", "flood", "blend"};
    s.label_column = "Label";
    s.fields = {
        {"src_port", FieldKind::numeric_int, 0, 5, {}, "src_port"},
        {"dst_port", FieldKind::numeric_int, 0, 4, {}, "dst_port"},
        {"length", FieldKind::numeric_int, 0, 3, {}, "length"},
        {"window", FieldKind::numeric_int, 0, 5, {}, "window"},
    };
    return s;
}

int synth_label_rule(const std::vector<std::string>& fields) {
    if (fields.size() != 4) fail(Errc::length_mismatch, "synthetic rule needs 4 fields");
    const long long src_port = std::stoll(fields[0]);
    const long long dst_port = std::stoll(fields[1]);
    const int high_src = src_port >= 40000 ? 1 : 0;
    const int high_ones = (dst_port % 10) >= 5 ? 1 : 0;
    return 2 * high_src + high_ones;
}

std::vector<LabeledRecord> synth_generate(const SynthConfig& cfg) {
    std::vector<int64_t> counts = cfg.class_counts;
    if (counts.empty()) {
        if (cfg.n < 1) fail(Errc::config_error, "synthetic generator needs n >= 1");
        std::vector<double> w = cfg.class_weights;
        if (w.empty()) w.assign(4, 1.0);
        if (w.size() != 4)
            fail(Errc::config_error, "synthetic task has exactly 4 classes");
        double total_w = std::accumulate(w.begin(), w.end(), 0.0);
        if (!(total_w > 0.0)) fail(Errc::config_error, "class weights must sum > 0");
        // largest-remainder apportionment: exact totals, ties to lower class
        counts.assign(4, 0);
        std::vector<std::pair<double, int>> rema;
        int64_t assigned = 0;
        for (int k = 0; k < 4; ++k) {
            double exact = cfg.n * w[k] / total_w;
            counts[k] = static_cast<int64_t>(std::floor(exact));
            assigned += counts[k];
            rema.push_back({exact - std::floor(exact), k});
        }
        std::stable_sort(rema.begin(), rema.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (int64_t i = 0; i < cfg.n - assigned; ++i) ++counts[rema[i % 4].second];
    }
    if (counts.size() != 4) fail(Errc::config_error, "synthetic task has exactly 4 classes");

    Rng rng(mix_seed(cfg.seed, 0xda7a));
    std::vector<LabeledRecord> out;
    out.reserve(static_cast<size_t>(counts[0] + counts[1] + counts[2] + counts[3]));
    // length and window draw from overlapping class-conditional ranges:
    // correlated evidence the way real attack features shift, but never
    // decisive on their own -- the label stays a function of src/dst alone
    static constexpr uint64_t kLenLo[4] = {0, 166, 333, 499};
    static constexpr uint64_t kWinLo[4] = {0, 20000, 40000, 60000};
    for (int k = 0; k < 4; ++k) {
        const bool high_src = (k & 2) != 0;
        const bool high_ones = (k & 1) != 0;
        for (int64_t i = 0; i < counts[k]; ++i) {
            LabeledRecord rec;
            rec.label = k;
            // src_port always has five digits so the deciding ten-thousands
            // digit sits at a fixed numeric position
            const uint64_t src = high_src ? 40000 + uniform_below(rng, 25536)
                                          : 10000 + uniform_below(rng, 30000);
            const uint64_t dst_tens = uniform_below(rng, 1000);
            const uint64_t dst_ones = (high_ones ? 5 : 0) + uniform_below(rng, 5);
            const uint64_t dst = dst_tens * 10 + dst_ones;
            const uint64_t length = kLenLo[k] + uniform_below(rng, 500);
            const uint64_t window = kWinLo[k] + uniform_below(rng, 40000);
            rec.fields = {std::to_string(src), std::to_string(dst),
                          std::to_string(length), std::to_string(window)};
            out.push_back(std::move(rec));
        }
    }
    shuffle(out, rng);
    for (size_t i = 0; i < out.size(); ++i) out[i].row_index = static_cast<int64_t>(i);
    return out;
}

std::vector<LabeledRecord> synth_generate(int64_t n, uint64_t seed) {
    SynthConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    return synth_generate(cfg);
}

void write_records_csv(const std::vector<LabeledRecord>& records,
                       const PacketSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_failure, "cannot write '" + path + "'");
    for (size_t i = 0; i < schema.fields.size(); ++i) {
        if (i) out << ',';
        out << csv_escape(schema.fields[i].csv_column);
    }
    out << ',' << csv_escape(schema.label_column) << '\n';
    for (const auto& rec : records) {
        for (size_t i = 0; i < rec.fields.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(rec.fields[i]);
        }
        out << ',' << csv_escape(schema.label_names[rec.label]) << '\n';
    }
    if (!out) fail(Errc::io_failure, "short write to '" + path + "'");
}

std::string rejects_to_jsonl(const std::vector<RejectedRow>& rejects) {
    std::ostringstream os;
    for (const auto& r : rejects) {
        json j{{"row", r.row_index},
               {"column", r.column},
               {"reason", r.reason},
               {"detail", r.detail}};
        os << j.dump() << "\n";
    }
    return os.str();
}

} // namespace packetlm
