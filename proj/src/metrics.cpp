#include "packetlm/metrics.hpp"

#include <numeric>
#include <sstream>

#include <json.hpp>

#include "packetlm/error.hpp"

namespace packetlm {

using nlohmann::json;

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

int64_t ConfusionMatrix::support(int true_class) const {
    int64_t s = 0;
    for (int j = 0; j < num_classes; ++j) s += at(true_class, j);
    return s;
}

ConfusionMatrix confusion(const std::vector<int>& truths, const std::vector<int>& preds,
                          int num_classes) {
    if (truths.size() != preds.size())
        fail(Errc::length_mismatch, "truth and prediction sequences differ in length");
    ConfusionMatrix cm(num_classes);
    for (size_t i = 0; i < truths.size(); ++i) {
        int t = truths[i], p = preds[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            fail(Errc::label_out_of_range,
                 "label outside [0, " + std::to_string(num_classes) + ") at sample " +
                     std::to_string(i));
        ++cm.at(t, p);
    }
    return cm;
}

std::vector<ClassScore> per_class_prf(const ConfusionMatrix& cm) {
    const int K = cm.num_classes;
    std::vector<ClassScore> out(K);
    for (int k = 0; k < K; ++k) {
        int64_t tp = cm.at(k, k);
        int64_t fp = 0, fn = 0;
        for (int j = 0; j < K; ++j) {
            if (j == k) continue;
            fp += cm.at(j, k);
            fn += cm.at(k, j);
        }
        ClassScore& s = out[k];
        s.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        s.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        s.f1 = (s.precision + s.recall) > 0.0
                   ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                   : 0.0;
    }
    return out;
}

double support_weighted_mean(const std::vector<double>& values,
                             const std::vector<int64_t>& supports) {
    if (values.size() != supports.size())
        fail(Errc::length_mismatch, "values and supports differ in length");
    int64_t total = std::accumulate(supports.begin(), supports.end(), int64_t{0});
    if (total == 0) return 0.0;
    double acc = 0.0;
    for (size_t k = 0; k < values.size(); ++k)
        acc += static_cast<double>(supports[k]) / static_cast<double>(total) * values[k];
    return acc;
}

double plain_mean(const std::vector<double>& values) {
    if (values.empty()) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

namespace {
std::vector<double> f1_column(const ConfusionMatrix& cm) {
    std::vector<double> f1s;
    for (const auto& s : per_class_prf(cm)) f1s.push_back(s.f1);
    return f1s;
}
std::vector<int64_t> support_column(const ConfusionMatrix& cm) {
    std::vector<int64_t> out;
    for (int k = 0; k < cm.num_classes; ++k) out.push_back(cm.support(k));
    return out;
}
} // namespace

double weighted_f1(const ConfusionMatrix& cm) {
    return support_weighted_mean(f1_column(cm), support_column(cm));
}

double unweighted_macro_f1(const ConfusionMatrix& cm) {
    return plain_mean(f1_column(cm));
}

MetricsReport make_report(const ConfusionMatrix& cm,
                          const std::vector<std::string>& class_names) {
    if (static_cast<int>(class_names.size()) != cm.num_classes)
        fail(Errc::length_mismatch, "class name count does not match matrix size");
    MetricsReport r;
    r.class_names = class_names;
    r.per_class = per_class_prf(cm);
    r.total = cm.total();
    int64_t correct = 0;
    for (int k = 0; k < cm.num_classes; ++k) {
        r.supports.push_back(cm.support(k));
        correct += cm.at(k, k);
    }
    r.accuracy = r.total > 0 ? static_cast<double>(correct) / r.total : 0.0;
    std::vector<double> ps, rs, fs;
    for (const auto& s : r.per_class) {
        ps.push_back(s.precision);
        rs.push_back(s.recall);
        fs.push_back(s.f1);
    }
    r.weighted_precision = support_weighted_mean(ps, r.supports);
    r.weighted_recall = support_weighted_mean(rs, r.supports);
    r.weighted_f1 = support_weighted_mean(fs, r.supports);
    r.macro_precision = plain_mean(ps);
    r.macro_recall = plain_mean(rs);
    r.macro_f1 = plain_mean(fs);
    return r;
}

std::string MetricsReport::to_text() const {
    std::ostringstream os;
    size_t name_w = 24;
    for (const auto& n : class_names) name_w = std::max(name_w, n.size() + 2);
    os << std::left;
    char line[256];
    std::snprintf(line, sizeof(line), "%-*s %9s %9s %9s %9s\n",
                  static_cast<int>(name_w), "class", "precision", "recall", "f1",
                  "support");
    os << line;
    for (size_t k = 0; k < class_names.size(); ++k) {
        std::snprintf(line, sizeof(line), "%-*s %9.4f %9.4f %9.4f %9lld\n",
                      static_cast<int>(name_w), class_names[k].c_str(),
                      per_class[k].precision, per_class[k].recall, per_class[k].f1,
                      static_cast<long long>(supports[k]));
        os << line;
    }
    std::snprintf(line, sizeof(line), "%-*s %9.4f %9.4f %9.4f %9lld\n",
                  static_cast<int>(name_w), "macro avg (weighted)", weighted_precision,
                  weighted_recall, weighted_f1, static_cast<long long>(total));
    os << line;
    std::snprintf(line, sizeof(line), "%-*s %9.4f %9.4f %9.4f %9lld\n",
                  static_cast<int>(name_w), "macro avg (unweighted)", macro_precision,
                  macro_recall, macro_f1, static_cast<long long>(total));
    os << line;
    std::snprintf(line, sizeof(line), "%-*s %9.4f\n", static_cast<int>(name_w),
                  "accuracy", accuracy);
    os << line;
    return os.str();
}

std::string MetricsReport::to_json_text() const {
    json j;
    json rows = json::array();
    for (size_t k = 0; k < class_names.size(); ++k) {
        rows.push_back({{"class", class_names[k]},
                        {"precision", per_class[k].precision},
                        {"recall", per_class[k].recall},
                        {"f1", per_class[k].f1},
                        {"support", supports[k]}});
    }
    j["per_class"] = rows;
    j["weighted"] = {{"precision", weighted_precision},
                     {"recall", weighted_recall},
                     {"f1", weighted_f1}};
    j["macro"] = {{"precision", macro_precision},
                  {"recall", macro_recall},
                  {"f1", macro_f1}};
    j["accuracy"] = accuracy;
    j["total"] = total;
    return j.dump(2);
}

} // namespace packetlm
