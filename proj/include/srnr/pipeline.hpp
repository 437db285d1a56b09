#pragma once

// End-to-end experiments: preprocessing, filterbank, calibrated encoding,
// reservoir, features, readout training and evaluation per subject and fold.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "srnr/config.hpp"
#include "srnr/dataset.hpp"
#include "srnr/encoding.hpp"
#include "srnr/filterbank.hpp"
#include "srnr/metrics.hpp"
#include "srnr/readout.hpp"
#include "srnr/reservoir.hpp"

namespace srnr {

inline constexpr int kReportSchemaVersion = 1;

/// Windows of one subject with contiguous class ids.
struct SubjectWindows {
    int subject_id = 0;
    std::size_t n_classes = 0;
    std::vector<Window> windows;
};

/// Content hash of a window (samples and label); used by the leakage audit.
std::uint64_t window_hash(const Window& w);

/// normalize -> split repetitions -> trim -> window -> balance, with class ids
/// mapped to [0, n_classes). Rest (gesture 0) is class 0 when included,
/// otherwise gesture g becomes class g - 1.
SubjectWindows preprocess_subject(const SubjectRecording& subject, int manifest_classes,
                                  const PipelineConfig& cfg);

std::vector<BiquadCascade> design_bands(const PipelineConfig& cfg, double sample_rate);

/// Hooks for instrumentation. Called from worker threads when workers > 1.
class PipelineObserver {
public:
    virtual ~PipelineObserver() = default;
    virtual void on_calibrate(int /*subject*/, int /*fold*/, std::span<const std::uint64_t> /*hashes*/) {}
    virtual void on_train(int /*subject*/, int /*fold*/, std::span<const std::uint64_t> /*hashes*/) {}
    virtual void on_evaluate(int /*subject*/, int /*fold*/, std::span<const std::uint64_t> /*hashes*/) {}
};

struct FoldResult {
    int subject_id = 0;
    int fold = 0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    MetricsReport test;
    double train_accuracy = 0.0;
    std::vector<EpochStats> curve;
    std::vector<double> test_curve;  // held-out accuracy per epoch, if tracked
    std::vector<CalibrationResult> calibration;  // one per gain group (subject or band)
    double mean_input_rate = 0.0;      // Hz, encoder rasters of the fold's windows
    double mean_reservoir_rate = 0.0;  // Hz, reservoir rasters
    nlohmann::json model;  // trained readout; not part of the report JSON
};

struct Summary {
    double mean = 0.0;
    std::optional<double> std;  // sample std, only with >= 2 values
};

struct RunReport {
    int schema_version = kReportSchemaVersion;
    nlohmann::json config;
    std::string version;
    std::string git;
    std::string kernel_isa;
    std::vector<FoldResult> folds;
    std::map<std::string, Summary> summary;  // accuracy, pp, sp, se, f1 over folds
    std::map<int, std::map<std::string, double>> per_subject;  // fold means
    MetricsReport pooled;  // from the summed confusion matrix
    std::map<std::string, double> stage_seconds;
    double total_seconds = 0.0;
};

Summary summarize(std::span<const double> values);

RunReport run_pipeline(const PipelineConfig& cfg, std::span<const SubjectRecording> dataset,
                       int manifest_classes, PipelineObserver* observer = nullptr);

struct SweepRow {
    std::size_t size = 0;
    double mean_acc = 0.0;
    double std_acc = 0.0;
};

std::vector<SweepRow> sweep_network_size(const PipelineConfig& cfg, std::span<const std::size_t> sizes,
                                         std::span<const SubjectRecording> dataset, int manifest_classes);

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

enum class FeatureStage { pre_reservoir, post_reservoir };

struct FeatureMatrix {
    Matrix<double> x;  // one row per window (counts)
    std::vector<int> labels;
    std::vector<int> subjects;
};

/// Spike-count features of every window, with the encoder calibrated per
/// subject on all of its windows.
FeatureMatrix export_features(FeatureStage stage, std::span<const SubjectRecording> dataset,
                              int manifest_classes, const PipelineConfig& cfg);

/// Columns f0..f{D-1},label.
void write_feature_csv(std::ostream& out, const FeatureMatrix& m);

struct SubjectCalibration {
    int subject_id = 0;
    std::vector<CalibrationResult> groups;  // one per gain group
    std::size_t n_windows = 0;
};

std::vector<SubjectCalibration> calibrate_subjects(std::span<const SubjectRecording> dataset,
                                                   int manifest_classes, const PipelineConfig& cfg);

// Report emission.
nlohmann::json to_json(const RunReport& r, bool include_timings = true);
std::string to_markdown(const RunReport& r);
void write_confusion_csv(std::ostream& out, const Matrix<long>& confusion);
void write_metrics_csv(std::ostream& out, const RunReport& r);
void write_curves_csv(std::ostream& out, const RunReport& r);

}  // namespace srnr
