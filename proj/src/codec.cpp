#include "packetlm/codec.hpp"

#include <algorithm>
#include <cctype>

namespace packetlm {

namespace {

std::string strip(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool all_digits(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return c >= '0' && c <= '9'; });
}

std::string strip_leading_zeros(std::string s) {
    size_t i = 0;
    while (i + 1 < s.size() && s[i] == '0') ++i;
    return s.substr(i);
}

// +1 on a digit string, carrying; may grow by one digit.
std::string increment_digits(std::string s) {
    int i = static_cast<int>(s.size()) - 1;
    while (i >= 0) {
        if (s[i] != '9') {
            ++s[i];
            return s;
        }
        s[i] = '0';
        --i;
    }
    return "1" + s;
}

std::string digits_of(long long v) { return std::to_string(v); }

// Splits signed decimal text into (negative, int digits, frac digits).
// Accepts an optional leading + or -, requires at least one digit overall.
struct DecimalParts {
    bool negative = false;
    std::string int_digits;  // may be empty
    std::string frac_digits; // may be empty
};

DecimalParts parse_decimal(const std::string& text, const std::string& field_name) {
    DecimalParts p;
    std::string s = strip(text);
    if (s.empty()) fail(Errc::bad_number, "field '" + field_name + "': empty value");
    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') {
        p.negative = (s[i] == '-');
        ++i;
    }
    bool any_digit = false;
    bool seen_dot = false;
    for (; i < s.size(); ++i) {
        char c = s[i];
        if (c >= '0' && c <= '9') {
            any_digit = true;
            (seen_dot ? p.frac_digits : p.int_digits) += c;
        } else if (c == '.' && !seen_dot) {
            seen_dot = true;
        } else {
            fail(Errc::bad_number,
                 "field '" + field_name + "': cannot parse '" + text + "' as a number");
        }
    }
    if (!any_digit)
        fail(Errc::bad_number,
             "field '" + field_name + "': cannot parse '" + text + "' as a number");
    return p;
}

// Shift the decimal point right by `scale` digits, round half-to-even on the
// leftover fraction. Pure string arithmetic, exact for any magnitude.
std::string scale_and_round(const DecimalParts& p, int scale) {
    std::string frac = p.frac_digits;
    if (static_cast<int>(frac.size()) < scale) frac.append(scale - frac.size(), '0');
    std::string kept = p.int_digits + frac.substr(0, scale);
    std::string rest = frac.substr(scale);
    kept = strip_leading_zeros(kept.empty() ? "0" : kept);

    if (rest.empty()) return kept;
    char first = rest[0];
    bool tail_nonzero = rest.find_first_not_of('0', 1) != std::string::npos;
    bool round_up;
    if (first > '5') {
        round_up = true;
    } else if (first < '5') {
        round_up = false;
    } else if (tail_nonzero) {
        round_up = true;
    } else {
        // exactly half: round to even
        char last_kept = kept.back();
        round_up = ((last_kept - '0') % 2) == 1;
    }
    if (round_up) kept = strip_leading_zeros(increment_digits(kept));
    return kept;
}

} // namespace

std::string normalize_field(const std::string& raw, const FieldDescriptor& desc) {
    std::string digits;
    switch (desc.kind) {
    case FieldKind::numeric_int: {
        DecimalParts p = parse_decimal(raw, desc.name);
        if (!p.frac_digits.empty() &&
            p.frac_digits.find_first_not_of('0') != std::string::npos)
            fail(Errc::bad_number,
                 "field '" + desc.name + "': '" + raw + "' is not an integer");
        digits = strip_leading_zeros(p.int_digits.empty() ? "0" : p.int_digits);
        if (p.negative && digits != "0")
            fail(Errc::negative_value, "field '" + desc.name + "': negative value " + raw);
        break;
    }
    case FieldKind::fixed_point: {
        DecimalParts p = parse_decimal(raw, desc.name);
        digits = scale_and_round(p, desc.scale);
        if (p.negative && digits != "0")
            fail(Errc::negative_value, "field '" + desc.name + "': negative value " + raw);
        break;
    }
    case FieldKind::categorical: {
        auto it = desc.codes.find(strip(raw));
        if (it == desc.codes.end())
            fail(Errc::unknown_category,
                 "field '" + desc.name + "': value '" + raw + "' not in code table");
        digits = digits_of(it->second);
        break;
    }
    case FieldKind::hex: {
        std::string s = strip(raw);
        if (s.size() >= 2 && (s[0] == '0') && (s[1] == 'x' || s[1] == 'X'))
            s = s.substr(2);
        if (s.empty())
            fail(Errc::bad_number, "field '" + desc.name + "': empty hex value");
        unsigned long long v = 0;
        for (char c : s) {
            int d;
            if (c >= '0' && c <= '9') d = c - '0';
            else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
            else if (c >= 'A' && c <= 'F') d = c - 'A' + 10;
            else
                fail(Errc::bad_number,
                     "field '" + desc.name + "': bad hex value '" + raw + "'");
            if (v > (~0ULL - d) / 16)
                fail(Errc::overflow, "field '" + desc.name + "': hex value too large");
            v = v * 16 + d;
        }
        digits = std::to_string(v);
        break;
    }
    }
    if (static_cast<int>(digits.size()) > desc.max_digits)
        fail(Errc::overflow, "field '" + desc.name + "': '" + raw + "' needs " +
                                 std::to_string(digits.size()) + " digits, max_digits is " +
                                 std::to_string(desc.max_digits));
    return digits;
}

TokenizedPacket tokenize_packet(const std::vector<std::string>& fields, int label,
                                const PacketSchema& schema, const Vocabulary& vocab) {
    const int n_fields = schema.num_fields();
    if (static_cast<int>(fields.size()) != n_fields)
        fail(Errc::length_mismatch,
             "expected " + std::to_string(n_fields) + " fields, got " +
                 std::to_string(fields.size()));
    if (label < 0 || label >= vocab.label_count)
        fail(Errc::label_out_of_range, "label " + std::to_string(label) +
                                           " not in [0, " +
                                           std::to_string(vocab.label_count) + ")");

    const int L = schema.seq_len;
    TokenizedPacket tp;
    tp.token_ids.reserve(L);
    tp.numeric_pos.reserve(L);

    for (int i = 0; i < n_fields; ++i) {
        const std::string& d = fields[i];
        const FieldDescriptor& desc = schema.fields[i];
        if (!all_digits(d))
            fail(Errc::bad_number,
                 "field '" + desc.name + "': '" + d + "' is not a digit string");
        if (static_cast<int>(d.size()) > desc.max_digits)
            fail(Errc::overflow, "field '" + desc.name + "': digit string too long");
        // reversed: ones place first
        for (int k = static_cast<int>(d.size()) - 1; k >= 0; --k) {
            tp.token_ids.push_back(d[k] - '0');
            int place = static_cast<int>(d.size()) - 1 - k;
            tp.numeric_pos.push_back(desc.is_numeric() ? place : kNoNumericPos);
        }
        tp.token_ids.push_back(vocab.sep_id(i));
        tp.numeric_pos.push_back(kNoNumericPos);
    }

    tp.label_pos = static_cast<int32_t>(tp.token_ids.size());
    tp.token_ids.push_back(vocab.label_id(label));
    tp.numeric_pos.push_back(kNoNumericPos);

    if (static_cast<int>(tp.token_ids.size()) > L)
        fail(Errc::sequence_too_long,
             "packet needs " + std::to_string(tp.token_ids.size()) +
                 " tokens, seq_len is " + std::to_string(L));

    tp.loss_mask.assign(tp.token_ids.size(), 1);
    while (static_cast<int>(tp.token_ids.size()) < L) {
        tp.token_ids.push_back(vocab.pad_id);
        tp.numeric_pos.push_back(kNoNumericPos);
        tp.loss_mask.push_back(0);
    }
    tp.field_pos.resize(L);
    for (int t = 0; t < L; ++t) tp.field_pos[t] = t;
    return tp;
}

std::pair<std::vector<std::string>, int>
detokenize(const TokenizedPacket& tp, const PacketSchema& schema, const Vocabulary& vocab) {
    const int n_fields = schema.num_fields();
    const int L = tp.length();
    std::vector<std::string> fields;
    fields.reserve(n_fields);

    int t = 0;
    for (int i = 0; i < n_fields; ++i) {
        std::string reversed;
        while (t < L && vocab.is_digit(tp.token_ids[t])) {
            reversed += static_cast<char>('0' + tp.token_ids[t]);
            ++t;
        }
        if (reversed.empty())
            fail(Errc::malformed_sequence,
                 "field " + std::to_string(i) + " has no digits");
        if (t >= L || tp.token_ids[t] != vocab.sep_id(i))
            fail(Errc::malformed_sequence,
                 "expected separator " + std::to_string(vocab.sep_id(i)) +
                     " after field " + std::to_string(i));
        ++t;
        fields.emplace_back(reversed.rbegin(), reversed.rend());
    }

    if (t >= L || !vocab.is_label(tp.token_ids[t]))
        fail(Errc::malformed_sequence, "label token missing at position " + std::to_string(t));
    if (tp.label_pos != t)
        fail(Errc::malformed_sequence, "label_pos does not point at the label token");
    int label = vocab.class_of(tp.token_ids[t]);
    ++t;

    for (; t < L; ++t) {
        if (!vocab.is_pad(tp.token_ids[t]))
            fail(Errc::malformed_sequence,
                 "non-pad token after the label at position " + std::to_string(t));
    }
    return {std::move(fields), label};
}

std::vector<std::pair<int, int>>
field_spans(const TokenizedPacket& tp, const PacketSchema& schema, const Vocabulary& vocab) {
    std::vector<std::pair<int, int>> spans;
    spans.reserve(schema.num_fields() + 1);
    int begin = 0;
    for (int i = 0; i < schema.num_fields(); ++i) {
        int t = begin;
        while (t < tp.length() && vocab.is_digit(tp.token_ids[t])) ++t;
        if (t >= tp.length() || tp.token_ids[t] != vocab.sep_id(i))
            fail(Errc::malformed_sequence, "field span walk hit a malformed sequence");
        spans.emplace_back(begin, t + 1); // separator belongs to its field
        begin = t + 1;
    }
    if (begin != tp.label_pos)
        fail(Errc::malformed_sequence, "label_pos does not follow the last field");
    spans.emplace_back(tp.label_pos, tp.label_pos + 1);
    return spans;
}

} // namespace packetlm
