#include "packetlm/embedding.hpp"

#include "packetlm/error.hpp"

namespace packetlm {

template <typename T>
Mat<T> embed_sequence(const TokenizedPacket& tp, const EmbeddingTablesT<T>& tables) {
    const int L = tp.length();
    const int d = tables.word.cols;
    if (tables.numeric_pos.cols != d || tables.field_pos.cols != d)
        fail(Errc::shape_mismatch, "embedding tables disagree on dimension");
    Mat<T> out(L, d);
    for (int t = 0; t < L; ++t) {
        int32_t id = tp.token_ids[t];
        int32_t np = tp.numeric_pos[t];
        int32_t fp = tp.field_pos[t];
        if (id < 0 || id >= tables.word.rows)
            fail(Errc::index_out_of_range, "token id " + std::to_string(id) +
                                               " outside word table at position " +
                                               std::to_string(t));
        if (np != kNoNumericPos && (np < 0 || np >= tables.numeric_pos.rows))
            fail(Errc::index_out_of_range,
                 "numeric position " + std::to_string(np) + " outside table");
        if (fp < 0 || fp >= tables.field_pos.rows)
            fail(Errc::index_out_of_range,
                 "field position " + std::to_string(fp) + " outside table");
        embed_token(tables, id, np, fp, out.row(t));
    }
    return out;
}

template Mat<float> embed_sequence<float>(const TokenizedPacket&,
                                          const EmbeddingTablesT<float>&);
template Mat<double> embed_sequence<double>(const TokenizedPacket&,
                                            const EmbeddingTablesT<double>&);

} // namespace packetlm
