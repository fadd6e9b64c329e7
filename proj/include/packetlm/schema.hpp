#pragma once

#include <map>
#include <string>
#include <vector>

#include "packetlm/error.hpp"

namespace packetlm {

// How a raw field value becomes a digit string.
//   numeric_int    decimal integer text, digits carry numeric positions
//   fixed_point    decimal text scaled by 10^scale then rounded half-to-even
//   categorical    looked up in an explicit value -> code table
//   hex            base-16 text converted to a decimal integer; treated as
//                  categorical downstream (no numeric-position embedding),
//                  used for CAN identifiers and data bytes
enum class FieldKind {
    numeric_int,
    fixed_point,
    categorical,
    hex,
};

const char* field_kind_name(FieldKind k);
FieldKind field_kind_from_name(const std::string& name);

struct FieldDescriptor {
    std::string name;
    FieldKind kind = FieldKind::numeric_int;
    int scale = 0;     // power of ten, fixed_point only
    int max_digits = 1;
    std::map<std::string, long long> codes; // categorical only; injective
    std::string csv_column;                 // defaults to name

    // Digit tokens of this field carry a numeric-position index only for
    // genuinely numeric kinds; categorical and hex fields get the zero vector.
    bool is_numeric() const {
        return kind == FieldKind::numeric_int || kind == FieldKind::fixed_point;
    }
};

struct PacketSchema {
    int schema_version = 1;
    std::vector<FieldDescriptor> fields; // the n-1 data fields
    std::vector<std::string> label_names;
    std::string label_column = "Label";
    int seq_len = 0;         // L
    int max_numeric_len = 0; // M

    int num_fields() const { return static_cast<int>(fields.size()); }
    int num_classes() const { return static_cast<int>(label_names.size()); }

    // Throws Errc::schema_error when any invariant is violated.
    void validate() const;

    int worst_case_tokens() const;
    int label_index(const std::string& name) const; // -1 when absent
};

// Token-ID layout. Ranges are contiguous and disjoint:
// digits [0,9], separators [sep_base, sep_base+sep_count),
// labels [label_base, label_base+label_count), pad last.
struct Vocabulary {
    int sep_base = 0;
    int sep_count = 0;
    int label_base = 0;
    int label_count = 0;
    int pad_id = 0;
    int size = 0; // V

    int sep_id(int field_index) const { return sep_base + field_index; }
    int label_id(int class_id) const { return label_base + class_id; }

    bool is_digit(int id) const { return id >= 0 && id <= 9; }
    bool is_sep(int id) const { return id >= sep_base && id < sep_base + sep_count; }
    bool is_label(int id) const { return id >= label_base && id < label_base + label_count; }
    bool is_pad(int id) const { return id == pad_id; }
    int class_of(int id) const { return id - label_base; }
    int sep_index_of(int id) const { return id - sep_base; }

    bool operator==(const Vocabulary&) const = default;
};

Vocabulary build_vocabulary(const PacketSchema& schema);

// Schema files are JSON documents; see docs/formats.md for the grammar.
PacketSchema schema_from_json_text(const std::string& text);
std::string schema_to_json_text(const PacketSchema& schema);
PacketSchema load_schema(const std::string& path);
void save_schema(const PacketSchema& schema, const std::string& path);

} // namespace packetlm
