#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "packetlm/schema.hpp"

namespace packetlm {

// numeric_pos entry for tokens that have no ones/tens place: separators,
// the label, padding, and digits of categorical/hex fields.
inline constexpr int32_t kNoNumericPos = -1;

struct TokenizedPacket {
    std::vector<int32_t> token_ids;   // length L, values in [0, V)
    std::vector<int32_t> numeric_pos; // length L, [0, M) or kNoNumericPos
    std::vector<int32_t> field_pos;   // length L, running position index
    std::vector<uint8_t> loss_mask;   // length L, false at padding
    int32_t label_pos = -1;

    int length() const { return static_cast<int>(token_ids.size()); }
};

// Canonical digit string of one raw field value: non-negative, base 10,
// no sign, no leading zeros except "0" itself.
std::string normalize_field(const std::string& raw, const FieldDescriptor& desc);

// Digit-string fields + class id -> fixed-length token sequence.
// Field digits are emitted reversed (ones place first), each data field is
// closed by its dynamic separator sep_base + i, the label token comes last
// before padding.
TokenizedPacket tokenize_packet(const std::vector<std::string>& fields, int label,
                                const PacketSchema& schema, const Vocabulary& vocab);

// Inverse of tokenize_packet on its image.
std::pair<std::vector<std::string>, int>
detokenize(const TokenizedPacket& tp, const PacketSchema& schema, const Vocabulary& vocab);

// Byte span [begin, end) of each data field in the token sequence, separator
// included, plus the label position as the final single-token span.
std::vector<std::pair<int, int>>
field_spans(const TokenizedPacket& tp, const PacketSchema& schema, const Vocabulary& vocab);

} // namespace packetlm
