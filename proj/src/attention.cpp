#include "packetlm/attention.hpp"

#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "packetlm/error.hpp"

namespace packetlm {

using nlohmann::json;

const char* attn_agg_name(AttnAgg a) {
    switch (a) {
    case AttnAgg::per_head: return "per-head";
    case AttnAgg::mean_heads: return "mean-over-heads";
    case AttnAgg::mean_all: return "mean-over-layers-and-heads";
    }
    return "?";
}

AttnAgg attn_agg_from_name(const std::string& name) {
    if (name == "per-head") return AttnAgg::per_head;
    if (name == "mean-over-heads") return AttnAgg::mean_heads;
    if (name == "mean-over-layers-and-heads") return AttnAgg::mean_all;
    fail(Errc::config_error, "unknown aggregation '" + name + "'");
}

Mat<double> aggregate_attention_fields(const Mat<double>& token_attn,
                                       const std::vector<std::pair<int, int>>& spans) {
    const int B = static_cast<int>(spans.size());
    const int n = token_attn.rows;
    std::vector<int> bucket_of(n, -1);
    for (int b = 0; b < B; ++b) {
        for (int t = spans[b].first; t < spans[b].second; ++t) {
            if (t >= 0 && t < n) bucket_of[t] = b;
        }
    }
    Mat<double> out(B, B);
    for (int q = 0; q < n; ++q) {
        if (bucket_of[q] < 0) continue;
        double* row = out.row(bucket_of[q]);
        for (int k = 0; k <= q && k < n; ++k) {
            if (bucket_of[k] < 0) continue;
            row[bucket_of[k]] += token_attn(q, k);
        }
    }
    for (int b = 0; b < B; ++b) {
        double* row = out.row(b);
        double sum = 0.0;
        for (int j = 0; j < B; ++j) sum += row[j];
        if (sum > 0.0)
            for (int j = 0; j < B; ++j) row[j] /= sum;
    }
    return out;
}

namespace {

std::vector<std::string> token_display_names(const TokenizedPacket& tp,
                                             const PacketSchema& schema,
                                             const Vocabulary& vocab) {
    std::vector<std::string> names;
    for (int t = 0; t <= tp.label_pos; ++t) {
        const int id = tp.token_ids[t];
        if (vocab.is_digit(id)) {
            names.push_back(std::to_string(id));
        } else if (vocab.is_sep(id)) {
            names.push_back("sep:" + schema.fields[vocab.sep_index_of(id)].name);
        } else if (vocab.is_label(id)) {
            names.push_back("label:" + schema.label_names[vocab.class_of(id)]);
        } else {
            names.push_back("pad");
        }
    }
    return names;
}

Mat<double> slice_to_double(const Mat<float>& m, int n) {
    Mat<double> out(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) out(r, c) = static_cast<double>(m(r, c));
    return out;
}

} // namespace

AttentionReport attention_report(const TokenizedPacket& tp, const ModelParams& params,
                                 const ModelConfig& cfg, const PacketSchema& schema,
                                 const Vocabulary& vocab, AttnAgg mode) {
    ForwardTrace trace = forward(tp, params, cfg, true);
    const int n = tp.label_pos + 1;
    const auto spans = field_spans(tp, schema, vocab);

    AttentionReport report;
    report.aggregation = attn_agg_name(mode);
    report.token_names = token_display_names(tp, schema, vocab);
    for (const auto& f : schema.fields) report.field_names.push_back(f.name);
    report.field_names.push_back("label");

    auto add_entry = [&](int layer, int head, Mat<double> token) {
        AttentionReport::Entry e;
        e.layer = layer;
        e.head = head;
        e.field = aggregate_attention_fields(token, spans);
        e.token = std::move(token);
        report.entries.push_back(std::move(e));
    };

    const int nl = cfg.n_layers, nh = cfg.n_heads;
    if (mode == AttnAgg::per_head) {
        for (int l = 0; l < nl; ++l)
            for (int h = 0; h < nh; ++h) add_entry(l, h, slice_to_double(trace.attn(l, h), n));
    } else if (mode == AttnAgg::mean_heads) {
        for (int l = 0; l < nl; ++l) {
            Mat<double> mean(n, n);
            for (int h = 0; h < nh; ++h) {
                const auto& m = trace.attn(l, h);
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c) mean(r, c) += static_cast<double>(m(r, c));
            }
            for (auto& v : mean.a) v /= nh;
            add_entry(l, -1, std::move(mean));
        }
    } else {
        Mat<double> mean(n, n);
        for (int l = 0; l < nl; ++l)
            for (int h = 0; h < nh; ++h) {
                const auto& m = trace.attn(l, h);
                for (int r = 0; r < n; ++r)
                    for (int c = 0; c < n; ++c) mean(r, c) += static_cast<double>(m(r, c));
            }
        for (auto& v : mean.a) v /= static_cast<double>(nl) * nh;
        add_entry(-1, -1, std::move(mean));
    }
    return report;
}

std::string AttentionReport::to_json_text() const {
    json j;
    j["aggregation"] = aggregation;
    j["checkpoint_digest"] = checkpoint_digest;
    j["packet_source"] = packet_source;
    j["token_names"] = token_names;
    j["field_names"] = field_names;
    json entries_json = json::array();
    for (const auto& e : entries) {
        json je;
        je["layer"] = e.layer;
        je["head"] = e.head;
        json token_rows = json::array();
        for (int r = 0; r < e.token.rows; ++r) {
            json row = json::array();
            for (int c = 0; c < e.token.cols; ++c) row.push_back(e.token(r, c));
            token_rows.push_back(std::move(row));
        }
        je["token"] = std::move(token_rows);
        json field_rows = json::array();
        for (int r = 0; r < e.field.rows; ++r) {
            json row = json::array();
            for (int c = 0; c < e.field.cols; ++c) row.push_back(e.field(r, c));
            field_rows.push_back(std::move(row));
        }
        je["field"] = std::move(field_rows);
        entries_json.push_back(std::move(je));
    }
    j["entries"] = std::move(entries_json);
    return j.dump(2);
}

void write_pgm_heatmap(const Mat<double>& m, const std::string& path, int cell_px) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_failure, "cannot write '" + path + "'");
    double maxv = 0.0;
    for (double v : m.a) maxv = std::max(maxv, v);
    if (maxv <= 0.0) maxv = 1.0;
    const int W = m.cols * cell_px, H = m.rows * cell_px;
    out << "P5\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row_buf(static_cast<size_t>(W));
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            const auto g = static_cast<unsigned char>(255.0 * m(r, c) / maxv);
            std::fill_n(row_buf.begin() + static_cast<size_t>(c) * cell_px, cell_px, g);
        }
        for (int y = 0; y < cell_px; ++y)
            out.write(reinterpret_cast<const char*>(row_buf.data()), W);
    }
    if (!out) fail(Errc::io_failure, "short write to '" + path + "'");
}

} // namespace packetlm
