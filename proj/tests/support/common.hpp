#pragma once

#include <string>
#include <vector>

#include "packetlm/codec.hpp"
#include "packetlm/rng.hpp"
#include "packetlm/schema.hpp"

namespace testsupport {

using namespace packetlm;

// n_fields numeric-int fields named f0..f{n-1} with the given digit widths.
inline PacketSchema make_schema(const std::vector<int>& max_digits, int num_classes,
                                int seq_len, int max_numeric_len) {
    PacketSchema s;
    s.seq_len = seq_len;
    s.max_numeric_len = max_numeric_len;
    for (size_t i = 0; i < max_digits.size(); ++i) {
        FieldDescriptor f;
        f.name = "f" + std::to_string(i);
        f.kind = FieldKind::numeric_int;
        f.max_digits = max_digits[i];
        f.csv_column = f.name;
        s.fields.push_back(f);
    }
    for (int k = 0; k < num_classes; ++k)
        s.label_names.push_back("class" + std::to_string(k));
    s.validate();
    return s;
}

// Random schema/value cases for the round-trip property.
struct RandomCase {
    PacketSchema schema;
    std::vector<std::string> fields;
    int label;
};

inline RandomCase random_case(Rng& rng) {
    const int n_fields = 1 + static_cast<int>(uniform_below(rng, 12));
    const int num_classes = 2 + static_cast<int>(uniform_below(rng, 11));
    std::vector<int> widths;
    int worst = n_fields + 1;
    for (int i = 0; i < n_fields; ++i) {
        int w = 1 + static_cast<int>(uniform_below(rng, 6));
        widths.push_back(w);
        worst += w;
    }
    const int M = *std::max_element(widths.begin(), widths.end());
    RandomCase c{make_schema(widths, num_classes, worst + static_cast<int>(uniform_below(rng, 8)),
                             M),
                 {},
                 0};
    // occasionally mark a field categorical-like by reusing hex kind semantics
    for (auto& f : c.schema.fields) {
        if (uniform_below(rng, 5) == 0) f.kind = FieldKind::hex;
    }
    for (int i = 0; i < n_fields; ++i) {
        uint64_t limit = 1;
        for (int j = 0; j < widths[i]; ++j) limit *= 10;
        uint64_t value = uniform_below(rng, limit);
        c.fields.push_back(std::to_string(value));
    }
    c.label = static_cast<int>(uniform_below(rng, num_classes));
    return c;
}

} // namespace testsupport
