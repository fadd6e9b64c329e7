#pragma once

#include "packetlm/codec.hpp"
#include "packetlm/tensor.hpp"

namespace packetlm {

// The three learned tables. Row lookups: word by token id, numeric position
// by digit place, field position by sequence position.
template <typename T>
struct EmbeddingTablesT {
    Mat<T> word;        // V x d
    Mat<T> numeric_pos; // M x d
    Mat<T> field_pos;   // L x d

    bool operator==(const EmbeddingTablesT&) const = default;
};

using EmbeddingTables = EmbeddingTablesT<float>;

// out[0..d) = word[id] + numeric_pos[np] + field_pos[fp], with the middle
// term the zero vector when np is kNoNumericPos.
template <typename T>
void embed_token(const EmbeddingTablesT<T>& tables, int32_t id, int32_t np, int32_t fp,
                 T* out) {
    const int d = tables.word.cols;
    const T* w = tables.word.row(id);
    const T* f = tables.field_pos.row(fp);
    if (np == kNoNumericPos) {
        for (int j = 0; j < d; ++j) out[j] = w[j] + f[j];
    } else {
        const T* n = tables.numeric_pos.row(np);
        for (int j = 0; j < d; ++j) out[j] = w[j] + n[j] + f[j];
    }
}

// Full-sequence embedding, one row per position.
template <typename T>
Mat<T> embed_sequence(const TokenizedPacket& tp, const EmbeddingTablesT<T>& tables);

} // namespace packetlm
