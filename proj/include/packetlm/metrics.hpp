#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace packetlm {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<int64_t> counts; // K x K row-major

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k)
        : num_classes(k), counts(static_cast<size_t>(k) * k, 0) {}

    int64_t& at(int true_class, int pred_class) {
        return counts[static_cast<size_t>(true_class) * num_classes + pred_class];
    }
    int64_t at(int true_class, int pred_class) const {
        return counts[static_cast<size_t>(true_class) * num_classes + pred_class];
    }
    int64_t total() const;
    int64_t support(int true_class) const; // row sum
};

struct ClassScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ConfusionMatrix confusion(const std::vector<int>& truths, const std::vector<int>& preds,
                          int num_classes);

// Per class: P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R); 0/0 -> 0.
std::vector<ClassScore> per_class_prf(const ConfusionMatrix& cm);

// The two averaging conventions, exposed directly so reports and tests hit
// the same arithmetic.
double support_weighted_mean(const std::vector<double>& values,
                             const std::vector<int64_t>& supports);
double plain_mean(const std::vector<double>& values);

// Support-weighted mean of per-class F1.
double weighted_f1(const ConfusionMatrix& cm);
// Plain mean of per-class F1.
double unweighted_macro_f1(const ConfusionMatrix& cm);

// Everything a report row needs; both averaging conventions are emitted
// side by side.
struct MetricsReport {
    std::vector<std::string> class_names;
    std::vector<ClassScore> per_class;
    std::vector<int64_t> supports;
    double accuracy = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    int64_t total = 0;

    std::string to_text() const;
    std::string to_json_text() const;
};

MetricsReport make_report(const ConfusionMatrix& cm,
                          const std::vector<std::string>& class_names);

} // namespace packetlm
