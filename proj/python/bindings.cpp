// Python bindings for the packetlm core: schema/tokenizer, synthetic data,
// splits, training, evaluation, prediction and attention export.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "packetlm/config_io.hpp"
#include "packetlm/error.hpp"
#include "packetlm/pipeline.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace packetlm;

namespace {

json json_from_py(const py::object& obj) {
    if (py::isinstance<py::str>(obj)) return json::parse(obj.cast<std::string>());
    py::object dumps = py::module_::import("json").attr("dumps");
    return json::parse(dumps(obj).cast<std::string>());
}

py::dict report_to_dict(const MetricsReport& r) {
    py::object loads = py::module_::import("json").attr("loads");
    return loads(r.to_json_text());
}

std::vector<LabeledRecord> records_from_py(
    const std::vector<std::pair<std::vector<std::string>, int>>& rows) {
    std::vector<LabeledRecord> out;
    out.reserve(rows.size());
    for (size_t i = 0; i < rows.size(); ++i)
        out.push_back({rows[i].first, rows[i].second, static_cast<int64_t>(i)});
    return out;
}

py::array_t<double> mat_to_numpy(const Mat<double>& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy(m.a.begin(), m.a.end(), arr.mutable_data());
    return arr;
}

struct PyCheckpoint {
    Checkpoint ckpt;

    void save(const std::string& path) const { save_checkpoint(ckpt, path); }

    py::dict predict(const std::vector<std::string>& fields) const {
        PredictResult r = run_predict(ckpt, fields);
        py::dict d;
        d["class_id"] = r.class_id;
        d["class_name"] = r.class_name;
        d["probabilities"] = r.probabilities;
        return d;
    }

    py::dict evaluate(
        const std::vector<std::pair<std::vector<std::string>, int>>& rows) const {
        EvalResult r = evaluate_records(records_from_py(rows), ckpt.params, ckpt.model,
                                        ckpt.schema);
        py::dict d = report_to_dict(r.report);
        d["predictions"] = r.preds;
        return d;
    }

    py::dict attention(const std::vector<std::string>& fields,
                       const std::string& mode) const {
        AttentionReport rep =
            run_attention(ckpt, "", fields, "python", attn_agg_from_name(mode));
        py::list entries;
        for (const auto& e : rep.entries) {
            py::dict d;
            d["layer"] = e.layer;
            d["head"] = e.head;
            d["token"] = mat_to_numpy(e.token);
            d["field"] = mat_to_numpy(e.field);
            entries.append(std::move(d));
        }
        py::dict d;
        d["aggregation"] = rep.aggregation;
        d["token_names"] = rep.token_names;
        d["field_names"] = rep.field_names;
        d["entries"] = std::move(entries);
        return d;
    }

    size_t parameter_count() const { return ckpt.params.parameter_count(); }
    int epochs_completed() const { return ckpt.epochs_completed; }
    PacketSchema schema() const { return ckpt.schema; }
};

PyCheckpoint train_records(const PacketSchema& schema,
                           const std::vector<std::pair<std::vector<std::string>, int>>& rows,
                           const py::object& config) {
    TrainConfig cfg = train_config_from_json(json_from_py(config));
    cfg.model.bind(schema);
    Vocabulary vocab = build_vocabulary(schema);
    std::vector<TokenizedPacket> packets =
        tokenize_records(records_from_py(rows), schema, vocab);
    auto [ckpt, log] = train(packets, schema, cfg);
    (void)log;
    return PyCheckpoint{std::move(ckpt)};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "digit-level packet language model core";

    py::register_exception<Error>(m, "PacketLmError");

    py::class_<FieldDescriptor>(m, "FieldDescriptor")
        .def_readonly("name", &FieldDescriptor::name)
        .def_readonly("max_digits", &FieldDescriptor::max_digits)
        .def_property_readonly(
            "kind", [](const FieldDescriptor& f) { return field_kind_name(f.kind); });

    py::class_<PacketSchema>(m, "Schema")
        .def_static("load", &load_schema, py::arg("path"))
        .def_static("from_json", &schema_from_json_text, py::arg("text"))
        .def_readonly("seq_len", &PacketSchema::seq_len)
        .def_readonly("max_numeric_len", &PacketSchema::max_numeric_len)
        .def_readonly("label_names", &PacketSchema::label_names)
        .def_readonly("fields", &PacketSchema::fields)
        .def("num_fields", &PacketSchema::num_fields)
        .def("num_classes", &PacketSchema::num_classes)
        .def("to_json", &schema_to_json_text);

    py::class_<Vocabulary>(m, "Vocabulary")
        .def_readonly("sep_base", &Vocabulary::sep_base)
        .def_readonly("sep_count", &Vocabulary::sep_count)
        .def_readonly("label_base", &Vocabulary::label_base)
        .def_readonly("label_count", &Vocabulary::label_count)
        .def_readonly("pad_id", &Vocabulary::pad_id)
        .def_readonly("size", &Vocabulary::size);
    m.def("build_vocabulary", &build_vocabulary, py::arg("schema"));

    py::class_<TokenizedPacket>(m, "TokenizedPacket")
        .def_readonly("token_ids", &TokenizedPacket::token_ids)
        .def_readonly("numeric_pos", &TokenizedPacket::numeric_pos)
        .def_readonly("field_pos", &TokenizedPacket::field_pos)
        .def_readonly("label_pos", &TokenizedPacket::label_pos)
        .def_property_readonly("loss_mask", [](const TokenizedPacket& tp) {
            std::vector<bool> mask(tp.loss_mask.begin(), tp.loss_mask.end());
            return mask;
        });

    m.def("normalize_field", &normalize_field, py::arg("raw"), py::arg("descriptor"));
    m.def(
        "tokenize",
        [](const PacketSchema& schema, const std::vector<std::string>& fields,
           int label) {
            Vocabulary vocab = build_vocabulary(schema);
            std::vector<std::string> digits(fields.size());
            for (size_t i = 0; i < fields.size(); ++i)
                digits[i] = normalize_field(fields[i], schema.fields[i]);
            return tokenize_packet(digits, label, schema, vocab);
        },
        py::arg("schema"), py::arg("fields"), py::arg("label"),
        "Normalize raw field values and tokenize them with the label appended");
    m.def(
        "detokenize",
        [](const PacketSchema& schema, const TokenizedPacket& tp) {
            return detokenize(tp, schema, build_vocabulary(schema));
        },
        py::arg("schema"), py::arg("packet"));

    m.def("synth_schema", &synth_schema);
    m.def("synth_label_rule", &synth_label_rule, py::arg("fields"));
    m.def(
        "synth_generate",
        [](int64_t n, uint64_t seed) {
            std::vector<std::pair<std::vector<std::string>, int>> rows;
            for (auto& rec : synth_generate(n, seed))
                rows.emplace_back(std::move(rec.fields), rec.label);
            return rows;
        },
        py::arg("n"), py::arg("seed"));

    m.def(
        "confusion",
        [](const std::vector<int>& truths, const std::vector<int>& preds, int k) {
            ConfusionMatrix cm = confusion(truths, preds, k);
            py::array_t<int64_t> arr({k, k});
            std::copy(cm.counts.begin(), cm.counts.end(), arr.mutable_data());
            return arr;
        },
        py::arg("truths"), py::arg("preds"), py::arg("num_classes"));
    m.def(
        "prf_report",
        [](const std::vector<int>& truths, const std::vector<int>& preds,
           const std::vector<std::string>& names) {
            ConfusionMatrix cm =
                confusion(truths, preds, static_cast<int>(names.size()));
            return report_to_dict(make_report(cm, names));
        },
        py::arg("truths"), py::arg("preds"), py::arg("class_names"));

    py::class_<PyCheckpoint>(m, "Checkpoint")
        .def_static("load",
                    [](const std::string& path) {
                        return PyCheckpoint{load_checkpoint(path)};
                    })
        .def("save", &PyCheckpoint::save, py::arg("path"))
        .def("predict", &PyCheckpoint::predict, py::arg("fields"))
        .def("evaluate", &PyCheckpoint::evaluate, py::arg("records"))
        .def("attention", &PyCheckpoint::attention, py::arg("fields"),
             py::arg("mode") = "mean-over-layers-and-heads")
        .def("parameter_count", &PyCheckpoint::parameter_count)
        .def("epochs_completed", &PyCheckpoint::epochs_completed)
        .def("schema", &PyCheckpoint::schema);

    m.def("train_records", &train_records, py::arg("schema"), py::arg("records"),
          py::arg("config"),
          "Train on (fields, label) records; config is a dict or JSON string");
}
