#include "vitc/evaluator.hpp"

#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "vitc/common.hpp"
#include "vitc/ops.hpp"

namespace vitc::eval {

Prediction predict(const vit::ModelParams<float>& params, const std::vector<data::Sample>& samples,
                   int batch_size) {
    if (batch_size < 1) throw ValueError("predict: batch_size must be at least 1");
    core::NoGradGuard ng;
    Prediction out;
    out.labels.reserve(samples.size());
    out.logits.reserve(samples.size());
    for (size_t start = 0; start < samples.size(); start += static_cast<size_t>(batch_size)) {
        const size_t end = std::min(samples.size(), start + static_cast<size_t>(batch_size));
        for (size_t i = start; i < end; ++i) {
            core::TensorF logits = vit::forward(data::standardize(samples[i].pixels), params);
            out.labels.push_back(static_cast<int>(core::argmax<float>(logits.data())));
            out.logits.emplace_back(logits.data().begin(), logits.data().end());
        }
    }
    return out;
}

int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), int64_t{0});
}

int64_t ConfusionMatrix::row_sum(int t) const {
    int64_t s = 0;
    for (int p = 0; p < num_classes; ++p) s += at(t, p);
    return s;
}

int64_t ConfusionMatrix::col_sum(int p) const {
    int64_t s = 0;
    for (int t = 0; t < num_classes; ++t) s += at(t, p);
    return s;
}

std::vector<double> ConfusionMatrix::row_normalized() const {
    std::vector<double> out(counts.size(), 0.0);
    for (int t = 0; t < num_classes; ++t) {
        const int64_t rs = row_sum(t);
        if (rs == 0) continue;
        for (int p = 0; p < num_classes; ++p)
            out[static_cast<size_t>(t * num_classes + p)] =
                static_cast<double>(at(t, p)) / static_cast<double>(rs);
    }
    return out;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted, int num_classes) {
    if (truth.size() != predicted.size())
        throw ValueError("confusion: " + std::to_string(truth.size()) + " labels vs " +
                         std::to_string(predicted.size()) + " predictions");
    ConfusionMatrix cm;
    cm.num_classes = num_classes;
    cm.counts.assign(static_cast<size_t>(num_classes) * num_classes, 0);
    for (size_t i = 0; i < truth.size(); ++i) {
        const int t = truth[i], p = predicted[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw ValueError("confusion: label pair (" + std::to_string(t) + "," + std::to_string(p) +
                             ") out of range for " + std::to_string(num_classes) + " classes");
        cm.at(t, p)++;
    }
    return cm;
}

ClassReport report(const ConfusionMatrix& cm) {
    const int k = cm.num_classes;
    ClassReport rep;
    rep.per_class.resize(static_cast<size_t>(k));
    const int64_t total = cm.total();
    int64_t diag = 0;
    for (int c = 0; c < k; ++c) {
        auto& row = rep.per_class[static_cast<size_t>(c)];
        const int64_t tp = cm.at(c, c);
        const int64_t rs = cm.row_sum(c);
        const int64_t cs = cm.col_sum(c);
        row.support = rs;
        row.precision = cs > 0 ? static_cast<double>(tp) / static_cast<double>(cs) : 0.0;
        row.recall = rs > 0 ? static_cast<double>(tp) / static_cast<double>(rs) : 0.0;
        row.f1 = (row.precision + row.recall) > 0
                     ? 2.0 * row.precision * row.recall / (row.precision + row.recall)
                     : 0.0;
        diag += tp;
        rep.macro_precision += row.precision;
        rep.macro_recall += row.recall;
        rep.macro_f1 += row.f1;
        rep.weighted_precision += row.precision * static_cast<double>(rs);
        rep.weighted_recall += row.recall * static_cast<double>(rs);
        rep.weighted_f1 += row.f1 * static_cast<double>(rs);
    }
    rep.accuracy = total > 0 ? static_cast<double>(diag) / static_cast<double>(total) : 0.0;
    rep.macro_precision /= k;
    rep.macro_recall /= k;
    rep.macro_f1 /= k;
    if (total > 0) {
        rep.weighted_precision /= static_cast<double>(total);
        rep.weighted_recall /= static_cast<double>(total);
        rep.weighted_f1 /= static_cast<double>(total);
    }
    return rep;
}

namespace {

std::string class_name(const std::vector<std::string>& names, int c) {
    return c < static_cast<int>(names.size()) ? names[static_cast<size_t>(c)] : ("class" + std::to_string(c));
}

} // namespace

void write_report_text(const std::string& path, const ClassReport& rep, const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report '" + path + "'");
    out << std::left << std::setw(16) << "class" << std::right << std::setw(10) << "support" << std::setw(12)
        << "precision" << std::setw(10) << "recall" << std::setw(10) << "f1" << "\n";
    out << std::fixed << std::setprecision(4);
    for (size_t c = 0; c < rep.per_class.size(); ++c) {
        const auto& row = rep.per_class[c];
        out << std::left << std::setw(16) << class_name(names, static_cast<int>(c)) << std::right << std::setw(10)
            << row.support << std::setw(12) << row.precision << std::setw(10) << row.recall << std::setw(10)
            << row.f1 << "\n";
    }
    int64_t total = 0;
    for (const auto& row : rep.per_class) total += row.support;
    out << std::left << std::setw(16) << "macro_avg" << std::right << std::setw(10) << total << std::setw(12)
        << rep.macro_precision << std::setw(10) << rep.macro_recall << std::setw(10) << rep.macro_f1 << "\n";
    out << std::left << std::setw(16) << "weighted_avg" << std::right << std::setw(10) << total << std::setw(12)
        << rep.weighted_precision << std::setw(10) << rep.weighted_recall << std::setw(10) << rep.weighted_f1
        << "\n";
    out << "accuracy " << rep.accuracy << "\n";
}

void write_report_kv(const std::string& path, const ClassReport& rep, const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report '" + path + "'");
    out.precision(10);
    for (size_t c = 0; c < rep.per_class.size(); ++c) {
        const auto& row = rep.per_class[c];
        const std::string n = class_name(names, static_cast<int>(c));
        out << n << ".support=" << row.support << "\n";
        out << n << ".precision=" << row.precision << "\n";
        out << n << ".recall=" << row.recall << "\n";
        out << n << ".f1=" << row.f1 << "\n";
    }
    out << "accuracy=" << rep.accuracy << "\n";
    out << "macro.precision=" << rep.macro_precision << "\n";
    out << "macro.recall=" << rep.macro_recall << "\n";
    out << "macro.f1=" << rep.macro_f1 << "\n";
    out << "weighted.precision=" << rep.weighted_precision << "\n";
    out << "weighted.recall=" << rep.weighted_recall << "\n";
    out << "weighted.f1=" << rep.weighted_f1 << "\n";
}

void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm,
                         const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write confusion CSV '" + path + "'");
    out << "true\\pred";
    for (int p = 0; p < cm.num_classes; ++p) out << ',' << class_name(names, p);
    out << "\n";
    for (int t = 0; t < cm.num_classes; ++t) {
        out << class_name(names, t);
        for (int p = 0; p < cm.num_classes; ++p) out << ',' << cm.at(t, p);
        out << "\n";
    }
}

void write_confusion_normalized_csv(const std::string& path, const ConfusionMatrix& cm,
                                    const std::vector<std::string>& names) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write confusion CSV '" + path + "'");
    const auto norm = cm.row_normalized();
    out << "true\\pred";
    for (int p = 0; p < cm.num_classes; ++p) out << ',' << class_name(names, p);
    out << "\n";
    out << std::fixed << std::setprecision(4);
    for (int t = 0; t < cm.num_classes; ++t) {
        out << class_name(names, t);
        for (int p = 0; p < cm.num_classes; ++p)
            out << ',' << norm[static_cast<size_t>(t * cm.num_classes + p)];
        out << "\n";
    }
}

} // namespace vitc::eval
