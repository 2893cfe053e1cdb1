#pragma once

// Test-set prediction, confusion matrix, and per-class
// precision/recall/F1 reporting.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vitc/dataset.hpp"
#include "vitc/vit.hpp"

namespace vitc::eval {

struct Prediction {
    std::vector<int> labels;
    std::vector<std::vector<float>> logits; // one row per sample
};

/// Argmax predictions over batched forward passes; ties break to the
/// lowest class index. Inputs must already be resized to the model size.
Prediction predict(const vit::ModelParams<float>& params, const std::vector<data::Sample>& samples,
                   int batch_size);

struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<int64_t> counts; // row = true class, column = predicted

    int64_t& at(int t, int p) { return counts[static_cast<size_t>(t * num_classes + p)]; }
    int64_t at(int t, int p) const { return counts[static_cast<size_t>(t * num_classes + p)]; }
    int64_t total() const;
    int64_t row_sum(int t) const;
    int64_t col_sum(int p) const;
    /// Rows divided by their sums; all-zero rows stay zero.
    std::vector<double> row_normalized() const;
};

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes);

struct ClassReport {
    struct Row {
        int64_t support = 0;
        double precision = 0, recall = 0, f1 = 0;
    };
    std::vector<Row> per_class;
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
};

/// precision = diag/colsum, recall = diag/rowsum, f1 = harmonic mean;
/// zero denominators yield 0. Macro rows are unweighted class means;
/// weighted rows are support-weighted.
ClassReport report(const ConfusionMatrix& cm);

void write_report_text(const std::string& path, const ClassReport& rep, const std::vector<std::string>& names);
void write_report_kv(const std::string& path, const ClassReport& rep, const std::vector<std::string>& names);
void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm, const std::vector<std::string>& names);
/// Row-normalized values with 4 decimal places.
void write_confusion_normalized_csv(const std::string& path, const ConfusionMatrix& cm,
                                    const std::vector<std::string>& names);

} // namespace vitc::eval
