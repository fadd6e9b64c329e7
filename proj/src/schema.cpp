#include "packetlm/schema.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace packetlm {

using nlohmann::json;

const char* field_kind_name(FieldKind k) {
    switch (k) {
    case FieldKind::numeric_int: return "int";
    case FieldKind::fixed_point: return "fixed";
    case FieldKind::categorical: return "categorical";
    case FieldKind::hex: return "hex";
    }
    return "?";
}

FieldKind field_kind_from_name(const std::string& name) {
    if (name == "int") return FieldKind::numeric_int;
    if (name == "fixed") return FieldKind::fixed_point;
    if (name == "categorical") return FieldKind::categorical;
    if (name == "hex") return FieldKind::hex;
    fail(Errc::schema_error, "unknown field kind '" + name + "'");
}

int PacketSchema::worst_case_tokens() const {
    int total = 0;
    for (const auto& f : fields) total += f.max_digits;
    return total + num_fields() + 1; // separators + label
}

int PacketSchema::label_index(const std::string& name) const {
    for (size_t i = 0; i < label_names.size(); ++i) {
        if (label_names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

void PacketSchema::validate() const {
    if (fields.empty())
        fail(Errc::schema_error, "schema needs at least one data field");
    if (label_names.empty())
        fail(Errc::schema_error, "schema needs at least one label name");
    if (seq_len < 1) fail(Errc::schema_error, "seq_len must be positive");
    if (max_numeric_len < 1) fail(Errc::schema_error, "max_numeric_len must be positive");

    std::set<std::string> seen;
    for (const auto& f : fields) {
        if (f.name.empty()) fail(Errc::schema_error, "field with empty name");
        if (!seen.insert(f.name).second)
            fail(Errc::schema_error, "duplicate field name '" + f.name + "'");
        if (f.max_digits < 1)
            fail(Errc::schema_error, "field '" + f.name + "': max_digits must be >= 1");
        if (f.max_digits > max_numeric_len)
            fail(Errc::schema_error,
                 "field '" + f.name + "': max_digits exceeds max_numeric_len");
        if (f.kind == FieldKind::fixed_point && f.scale < 0)
            fail(Errc::schema_error, "field '" + f.name + "': scale must be >= 0");
        if (f.kind == FieldKind::categorical) {
            if (f.codes.empty())
                fail(Errc::schema_error,
                     "field '" + f.name + "': categorical field needs a code table");
            std::set<long long> codes_seen;
            for (const auto& [value, code] : f.codes) {
                if (code < 0)
                    fail(Errc::schema_error,
                         "field '" + f.name + "': negative code for '" + value + "'");
                if (!codes_seen.insert(code).second)
                    fail(Errc::schema_error,
                         "field '" + f.name + "': code table not injective (code " +
                             std::to_string(code) + " repeats)");
            }
        }
    }

    std::set<std::string> labels_seen;
    for (const auto& l : label_names) {
        if (!labels_seen.insert(l).second)
            fail(Errc::schema_error, "duplicate label name '" + l + "'");
    }

    if (worst_case_tokens() > seq_len)
        fail(Errc::schema_error,
             "worst-case token count " + std::to_string(worst_case_tokens()) +
                 " exceeds seq_len " + std::to_string(seq_len));
}

Vocabulary build_vocabulary(const PacketSchema& schema) {
    schema.validate();
    Vocabulary v;
    v.sep_base = 10;
    v.sep_count = schema.num_fields();
    v.label_base = v.sep_base + v.sep_count;
    v.label_count = schema.num_classes();
    v.pad_id = v.label_base + v.label_count;
    v.size = v.pad_id + 1;
    return v;
}

static FieldDescriptor field_from_json(const json& j) {
    FieldDescriptor f;
    f.name = j.at("name").get<std::string>();
    f.kind = field_kind_from_name(j.at("kind").get<std::string>());
    f.max_digits = j.at("max_digits").get<int>();
    if (j.contains("scale")) f.scale = j.at("scale").get<int>();
    if (j.contains("codes")) {
        for (auto it = j.at("codes").begin(); it != j.at("codes").end(); ++it)
            f.codes[it.key()] = it.value().get<long long>();
    }
    f.csv_column = j.value("csv_column", f.name);
    return f;
}

PacketSchema schema_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(Errc::schema_error, std::string("schema is not valid JSON: ") + e.what());
    }
    try {
        PacketSchema s;
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != 1)
            fail(Errc::version_mismatch,
                 "unsupported schema_version " + std::to_string(s.schema_version));
        s.seq_len = j.at("seq_len").get<int>();
        s.max_numeric_len = j.at("max_numeric_len").get<int>();
        s.label_names = j.at("labels").get<std::vector<std::string>>();
        s.label_column = j.value("label_column", std::string("Label"));
        for (const auto& jf : j.at("fields")) s.fields.push_back(field_from_json(jf));
        s.validate();
        return s;
    } catch (const json::exception& e) {
        fail(Errc::schema_error, std::string("bad schema document: ") + e.what());
    }
}

std::string schema_to_json_text(const PacketSchema& schema) {
    json j;
    j["schema_version"] = schema.schema_version;
    j["seq_len"] = schema.seq_len;
    j["max_numeric_len"] = schema.max_numeric_len;
    j["labels"] = schema.label_names;
    j["label_column"] = schema.label_column;
    json fields = json::array();
    for (const auto& f : schema.fields) {
        json jf;
        jf["name"] = f.name;
        jf["kind"] = field_kind_name(f.kind);
        jf["max_digits"] = f.max_digits;
        if (f.kind == FieldKind::fixed_point) jf["scale"] = f.scale;
        if (!f.codes.empty()) {
            json codes;
            for (const auto& [value, code] : f.codes) codes[value] = code;
            jf["codes"] = codes;
        }
        if (f.csv_column != f.name) jf["csv_column"] = f.csv_column;
        fields.push_back(jf);
    }
    j["fields"] = fields;
    return j.dump(2);
}

PacketSchema load_schema(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_failure, "cannot open schema file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return schema_from_json_text(ss.str());
}

void save_schema(const PacketSchema& schema, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(Errc::io_failure, "cannot write schema file '" + path + "'");
    out << schema_to_json_text(schema) << "\n";
}

} // namespace packetlm
