#pragma once

#include <string>
#include <vector>

#include "packetlm/codec.hpp"
#include "packetlm/model.hpp"
#include "packetlm/schema.hpp"

namespace packetlm {

enum class AttnAgg {
    per_head,   // one matrix per (layer, head)
    mean_heads, // one matrix per layer, averaged over heads
    mean_all,   // single matrix averaged over layers and heads
};

const char* attn_agg_name(AttnAgg a);
AttnAgg attn_agg_from_name(const std::string& name);

struct AttentionReport {
    struct Entry {
        int layer = -1; // -1 when averaged over layers
        int head = -1;  // -1 when averaged over heads
        Mat<double> token; // (label_pos+1)^2 post-softmax weights
        Mat<double> field; // (n_fields+1)^2, rows renormalized to 1
    };
    std::vector<Entry> entries;
    std::vector<std::string> token_names; // per position, up to the label
    std::vector<std::string> field_names; // data fields + "label"
    std::string aggregation;
    std::string checkpoint_digest;
    std::string packet_source;

    std::string to_json_text() const;
};

// Sums token attention mass over each field's span (separator included, the
// label is its own bucket) and renormalizes rows; queries beyond the label
// position are padding and excluded.
Mat<double> aggregate_attention_fields(const Mat<double>& token_attn,
                                       const std::vector<std::pair<int, int>>& spans);

AttentionReport attention_report(const TokenizedPacket& tp, const ModelParams& params,
                                 const ModelConfig& cfg, const PacketSchema& schema,
                                 const Vocabulary& vocab, AttnAgg mode);

// Plain PGM heatmap, values scaled to the matrix maximum. Cosmetic output;
// the JSON report is the canonical artifact.
void write_pgm_heatmap(const Mat<double>& m, const std::string& path, int cell_px = 12);

} // namespace packetlm
