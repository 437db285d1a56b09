#include "srnr/metrics.hpp"

#include <string>

#include "srnr/error.hpp"

namespace srnr {
namespace {

double percent(long num, long den, std::vector<int>& undefined, int cls) {
    if (den == 0) {
        undefined.push_back(cls);
        return 0.0;
    }
    return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

double ratio(long num, long den) {
    return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

ClassMetrics class_metrics(const ClassCounts& c) {
    return {ratio(c.tp, c.tp + c.fp), ratio(c.tn, c.tn + c.fp), ratio(c.tp, c.tp + c.fn),
            ratio(2 * c.tp, 2 * c.tp + c.fn + c.fp)};
}

MetricsReport metrics_from_confusion(const Matrix<long>& confusion) {
    const std::size_t k = confusion.rows();
    MetricsReport m;
    m.confusion = confusion;
    long total = 0, trace = 0;
    std::vector<long> row_sum(k, 0), col_sum(k, 0);
    for (std::size_t t = 0; t < k; ++t)
        for (std::size_t p = 0; p < k; ++p) {
            const long v = confusion(t, p);
            total += v;
            row_sum[t] += v;
            col_sum[p] += v;
            if (t == p) trace += v;
        }
    m.accuracy = total ? 100.0 * static_cast<double>(trace) / static_cast<double>(total) : 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        ClassCounts cc;
        cc.tp = confusion(c, c);
        cc.fn = row_sum[c] - cc.tp;
        cc.fp = col_sum[c] - cc.tp;
        cc.tn = total - cc.tp - cc.fn - cc.fp;
        m.per_class.push_back(cc);
        const int cls = static_cast<int>(c);
        m.pp += percent(cc.tp, cc.tp + cc.fp, m.undefined_pp, cls);
        m.sp += percent(cc.tn, cc.tn + cc.fp, m.undefined_sp, cls);
        m.se += percent(cc.tp, cc.tp + cc.fn, m.undefined_se, cls);
        m.f1 += percent(2 * cc.tp, 2 * cc.tp + cc.fn + cc.fp, m.undefined_f1, cls);
    }
    if (k > 0) {
        const double kd = static_cast<double>(k);
        m.pp /= kd;
        m.sp /= kd;
        m.se /= kd;
        m.f1 /= kd;
    }
    return m;
}

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> truths,
                              std::size_t n_classes) {
    if (predictions.size() != truths.size())
        throw DataError("compute_metrics: " + std::to_string(predictions.size()) +
                        " predictions for " + std::to_string(truths.size()) + " truths");
    Matrix<long> confusion(n_classes, n_classes, 0);
    for (std::size_t i = 0; i < truths.size(); ++i) {
        const int t = truths[i], p = predictions[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= n_classes ||
            static_cast<std::size_t>(p) >= n_classes)
            throw DataError("compute_metrics: label out of range at index " + std::to_string(i));
        ++confusion(static_cast<std::size_t>(t), static_cast<std::size_t>(p));
    }
    return metrics_from_confusion(confusion);
}

nlohmann::json to_json(const MetricsReport& m) {
    nlohmann::json confusion = nlohmann::json::array();
    for (std::size_t r = 0; r < m.confusion.rows(); ++r) {
        const auto row = m.confusion.row(r);
        confusion.push_back(std::vector<long>(row.begin(), row.end()));
    }
    return {{"accuracy", m.accuracy},
            {"pp", m.pp},
            {"sp", m.sp},
            {"se", m.se},
            {"f1", m.f1},
            {"confusion", confusion},
            {"undefined",
             {{"pp", m.undefined_pp}, {"sp", m.undefined_sp}, {"se", m.undefined_se}, {"f1", m.undefined_f1}}}};
}

}  // namespace srnr
