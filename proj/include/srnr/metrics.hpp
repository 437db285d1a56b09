#pragma once

#include <span>
#include <vector>

#include "json.hpp"
#include "srnr/matrix.hpp"

namespace srnr {

struct ClassCounts {
    long tp = 0, fp = 0, tn = 0, fn = 0;
};

struct ClassMetrics {
    double pp = 0.0, sp = 0.0, se = 0.0, f1 = 0.0;  // percent, 0 where undefined
};

ClassMetrics class_metrics(const ClassCounts& c);

/// Accuracy and macro-averaged one-vs-rest PP (precision), Sp (specificity),
/// Se (sensitivity) and F1, all in percent. A class whose denominator is zero
/// contributes 0 to that average and is listed in the matching flag vector.
struct MetricsReport {
    double accuracy = 0.0;
    double pp = 0.0;
    double sp = 0.0;
    double se = 0.0;
    double f1 = 0.0;
    Matrix<long> confusion;  // [truth x prediction]
    std::vector<ClassCounts> per_class;
    std::vector<int> undefined_pp, undefined_sp, undefined_se, undefined_f1;
};

/// Throws DataError on a length mismatch or a label outside [0, n_classes).
MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> truths,
                              std::size_t n_classes);

/// Metrics recomputed from an accumulated confusion matrix.
MetricsReport metrics_from_confusion(const Matrix<long>& confusion);

nlohmann::json to_json(const MetricsReport& m);

}  // namespace srnr
