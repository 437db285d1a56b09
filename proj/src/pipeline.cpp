#include "srnr/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "srnr/error.hpp"
#include "srnr/simd/kernels.hpp"
#include "srnr/version.hpp"

namespace srnr {
namespace {

using Clock = std::chrono::steady_clock;

// Seed streams derived from the run seed.
enum SeedStream : std::uint64_t { kSplitStream = 1, kMaskStream = 2, kTrainStream = 3 };

class StageTimer {
public:
    explicit StageTimer(std::map<std::string, double>& sink) : sink_(sink) {}
    template <class F>
    decltype(auto) time(const std::string& stage, F&& f) {
        const auto start = Clock::now();
        struct Add {
            std::map<std::string, double>& sink;
            const std::string& stage;
            Clock::time_point start;
            ~Add() { sink[stage] += std::chrono::duration<double>(Clock::now() - start).count(); }
        } add{sink_, stage, start};
        return f();
    }

private:
    std::map<std::string, double>& sink_;
};

/// Rethrows with the stage name prepended, keeping the error category.
[[noreturn]] void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const Error& e) {
        throw_error(e.kind(), context + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(ErrorKind::runtime, context + ": " + e.what());
    }
}

/// Runs task(i) for i in [0, n) over a bounded pool; the first exception wins.
template <class Task>
void parallel_for(std::size_t n, int workers, Task&& task) {
    const std::size_t width = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
    if (width <= 1) {
        for (std::size_t i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < width; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
}

std::vector<std::uint64_t> hashes_of(const std::vector<Window>& windows,
                                     const std::vector<std::size_t>& idx) {
    std::vector<std::uint64_t> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(window_hash(windows[i]));
    return out;
}

LifParams encoder_params(const PipelineConfig& cfg, double sample_rate) {
    LifParams p = cfg.encoder.neuron;
    p.dt = 1.0 / sample_rate;
    validate(p);
    return p;
}

/// Reservoir bank configs for a raster with time step raster_dt.
std::vector<ReservoirConfig> bank_configs(const PipelineConfig& cfg, std::size_t n_banks,
                                          double raster_dt) {
    LifParams neuron = cfg.reservoir.neuron;
    neuron.input_gain = 1.0;
    neuron.dt = cfg.reservoir.clock == ReservoirClock::aligned ? raster_dt : cfg.reservoir.neuron.dt;
    return make_bank_configs(n_banks, cfg.reservoir.n_neurons, cfg.reservoir.density,
                             derive_seed(cfg.seed, kMaskStream), neuron, cfg.reservoir.spike_current,
                             cfg.reservoir.shared_mask);
}

SpikeRaster reservoir_input(const PipelineConfig& cfg, const SpikeRaster& encoded) {
    if (cfg.reservoir.clock == ReservoirClock::aligned) return encoded;
    const auto factor = static_cast<std::size_t>(std::llround(cfg.reservoir.neuron.dt / encoded.dt));
    return downsample_or(encoded, std::max<std::size_t>(1, factor));
}

double mean_rate(const SpikeRaster& r) {
    if (r.rows() == 0 || r.steps() == 0) return 0.0;
    return static_cast<double>(r.total_spikes()) /
           (static_cast<double>(r.rows()) * static_cast<double>(r.steps()) * r.dt);
}

struct Encoded {
    std::vector<FeatureVector> features;
    double input_rate = 0.0;
    double reservoir_rate = 0.0;
};

/// Encodes, runs the reservoir (optionally) and bins every window.
Encoded encode_all(const PipelineConfig& cfg, const std::vector<Matrix<double>>& expanded,
                   const std::vector<Window>& windows, std::span<const LifParams> encoder, bool through_reservoir,
                   StageTimer& timer) {
    Encoded out;
    std::vector<ReservoirConfig> banks;
    out.features.reserve(expanded.size());
    for (std::size_t i = 0; i < expanded.size(); ++i) {
        const SpikeRaster spikes = timer.time("encode", [&] { return encode_window(expanded[i], encoder); });
        out.input_rate += mean_rate(spikes);
        if (!through_reservoir) {
            out.features.push_back(timer.time(
                "features", [&] { return bin_spike_counts(spikes, cfg.readout.n_bins, windows[i].label); }));
            continue;
        }
        const SpikeRaster states = timer.time("reservoir", [&] {
            const SpikeRaster input = reservoir_input(cfg, spikes);
            if (banks.empty()) banks = bank_configs(cfg, input.rows(), input.dt);
            return run_parallel_reservoirs(input, banks);
        });
        out.reservoir_rate += mean_rate(states);
        out.features.push_back(
            timer.time("features", [&] { return bin_spike_counts(states, cfg.readout.n_bins, windows[i].label); }));
    }
    if (!expanded.empty()) {
        out.input_rate /= static_cast<double>(expanded.size());
        out.reservoir_rate /= static_cast<double>(expanded.size());
    }
    return out;
}

double feature_scale(const PipelineConfig& cfg, std::size_t window_steps) {
    if (cfg.readout.scale == FeatureScale::counts) return 1.0;
    return static_cast<double>(cfg.readout.n_bins) / static_cast<double>(window_steps);
}

struct PreparedSubject {
    SubjectWindows sw;
    std::vector<Matrix<double>> expanded;
    std::vector<Fold> folds;
    double sample_rate = 0.0;
};

PreparedSubject prepare(const SubjectRecording& subject, int manifest_classes, const PipelineConfig& cfg,
                        bool with_folds, StageTimer& timer) {
    PreparedSubject p;
    p.sample_rate = subject.recording.sample_rate;
    try {
        p.sw = timer.time("preprocess", [&] { return preprocess_subject(subject, manifest_classes, cfg); });
        if (p.sw.windows.empty()) throw DataError("no usable windows");
        timer.time("filterbank", [&] {
            const auto bands = design_bands(cfg, p.sample_rate);
            p.expanded.reserve(p.sw.windows.size());
            for (const auto& w : p.sw.windows) p.expanded.push_back(expand_channels(w.samples, bands));
        });
        if (with_folds) {
            SplitSpec split{cfg.split.train_fraction, cfg.split.folds, derive_seed(cfg.seed, kSplitStream),
                            cfg.split.mode};
            p.folds = timer.time("preprocess", [&] { return split_train_test(std::span<const Window>(p.sw.windows), split); });
        }
    } catch (...) {
        rethrow_with_context("subject " + std::to_string(subject.subject_id));
    }
    return p;
}

std::size_t gain_groups(const PipelineConfig& cfg) {
    return cfg.encoder.gain_scope == GainScope::band ? cfg.bands.cutoffs.size() - 1 : 1;
}

/// One calibration per gain group, each on the group's rows of the given windows.
std::vector<CalibrationResult> calibrate_on(const PipelineConfig& cfg, const PreparedSubject& p,
                                            const std::vector<std::size_t>& idx) {
    const LifParams base = encoder_params(cfg, p.sample_rate);
    const std::size_t groups = gain_groups(cfg);
    std::vector<CalibrationResult> out(groups);
    if (!cfg.encoder.calibrate) {
        for (auto& r : out) r.params = base;
        return out;
    }
    const std::size_t rows = p.expanded.empty() ? 0 : p.expanded.front().rows();
    const std::size_t block = rows / groups;
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<Matrix<double>> corpus;
        corpus.reserve(idx.size());
        for (std::size_t i : idx) {
            const Matrix<double>& m = p.expanded[i];
            if (groups == 1) {
                corpus.push_back(m);
                continue;
            }
            Matrix<double> part(block, m.cols());
            for (std::size_t r = 0; r < block; ++r)
                std::copy(m.row(g * block + r).begin(), m.row(g * block + r).end(), part.row(r).begin());
            corpus.push_back(std::move(part));
        }
        out[g] = calibrate_encoder(corpus, base, cfg.encoder.rate_cap);
    }
    return out;
}

std::vector<LifParams> params_of(const std::vector<CalibrationResult>& cal) {
    std::vector<LifParams> out;
    for (const auto& c : cal) out.push_back(c.params);
    return out;
}

template <class T>
std::vector<T> gather(const std::vector<T>& v, const std::vector<std::size_t>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) out.push_back(v[i]);
    return out;
}

FoldResult run_fold(const PipelineConfig& cfg, const PreparedSubject& p, int fold_index,
                    PipelineObserver* observer, StageTimer& timer) {
    const Fold& fold = p.folds[static_cast<std::size_t>(fold_index)];
    const int subject = p.sw.subject_id;
    FoldResult r;
    r.subject_id = subject;
    r.fold = fold_index;
    r.n_train = fold.train.size();
    r.n_test = fold.test.size();

    if (observer) timer.time("audit", [&] { observer->on_calibrate(subject, fold_index, hashes_of(p.sw.windows, fold.train)); });
    r.calibration = timer.time("calibrate", [&] { return calibrate_on(cfg, p, fold.train); });

    const Encoded enc = encode_all(cfg, p.expanded, p.sw.windows, params_of(r.calibration), true, timer);
    r.mean_input_rate = enc.input_rate;
    r.mean_reservoir_rate = enc.reservoir_rate;

    const std::size_t steps = p.sw.windows.front().samples.cols();
    const double scale = feature_scale(cfg, steps);
    const auto train_features = gather(enc.features, fold.train);
    const auto test_features = gather(enc.features, fold.test);
    const Dataset train = timer.time("features", [&] { return make_dataset(train_features, p.sw.n_classes, scale); });
    const Dataset test = timer.time("features", [&] { return make_dataset(test_features, p.sw.n_classes, scale); });

    if (observer) timer.time("audit", [&] { observer->on_train(subject, fold_index, hashes_of(p.sw.windows, fold.train)); });
    std::vector<int> test_pred;
    if (cfg.readout.classifier == Classifier::delta_softmax) {
        TrainOptions opts{cfg.readout.epochs, cfg.readout.alpha, cfg.readout.batch,
                          derive_seed(derive_seed(cfg.seed, kTrainStream),
                                      static_cast<std::uint64_t>(subject) * 1000u + static_cast<std::uint64_t>(fold_index))};
        struct Tracker {
            const Dataset* test;
            std::vector<double>* curve;
        } tracker{&test, &r.test_curve};
        EpochHook hook = nullptr;
        if (cfg.readout.track_test_curve && test.size() > 0) {
            hook = [](const SoftmaxModel& m, int, void* user) {
                auto* t = static_cast<Tracker*>(user);
                const auto pred = predict_all(m, *t->test);
                t->curve->push_back(accuracy(pred, t->test->y));
            };
        }
        const DeltaTrainResult trained =
            timer.time("train", [&] { return train_delta_softmax(train, opts, hook, &tracker); });
        r.curve = trained.curve;
        r.model = to_json(trained.model, config_hash(cfg));
        if (observer) timer.time("audit", [&] { observer->on_evaluate(subject, fold_index, hashes_of(p.sw.windows, fold.test)); });
        timer.time("evaluate", [&] {
            r.train_accuracy = accuracy(predict_all(trained.model, train), train.y);
            test_pred = predict_all(trained.model, test);
        });
    } else {
        SvmOptions opts{cfg.readout.svm_c, cfg.readout.svm_epochs,
                        derive_seed(derive_seed(cfg.seed, kTrainStream),
                                    static_cast<std::uint64_t>(subject) * 1000u + static_cast<std::uint64_t>(fold_index))};
        const LinearSvmModel model = timer.time("train", [&] { return train_linear_svm(train, opts); });
        r.model = to_json(model, config_hash(cfg));
        if (observer) timer.time("audit", [&] { observer->on_evaluate(subject, fold_index, hashes_of(p.sw.windows, fold.test)); });
        timer.time("evaluate", [&] {
            r.train_accuracy = accuracy(predict_all(model, train), train.y);
            test_pred = predict_all(model, test);
        });
    }
    r.test = timer.time("evaluate", [&] { return compute_metrics(test_pred, test.y, p.sw.n_classes); });
    return r;
}

}  // namespace

std::uint64_t window_hash(const Window& w) {
    std::uint64_t h = fnv1a64(w.samples.data(), w.samples.size() * sizeof(double));
    h = fnv1a64(&w.label, sizeof w.label, h);
    return fnv1a64(&w.subject_id, sizeof w.subject_id, h);
}

SubjectWindows preprocess_subject(const SubjectRecording& subject, int manifest_classes,
                                  const PipelineConfig& cfg) {
    RawRecording rec = subject.recording;
    validate(rec);
    normalize_channels(rec);
    std::vector<RawRecording> segments;
    for (const auto& seg : split_repetitions(rec, cfg.include_rest))
        segments.push_back(trim_repetition(seg, cfg.trim_ms));

    SubjectWindows out;
    out.subject_id = subject.subject_id;
    out.n_classes = static_cast<std::size_t>(manifest_classes - (cfg.include_rest ? 0 : 1));
    out.windows = segment_windows(segments, cfg.window_ms, subject.subject_id);
    for (auto& w : out.windows) w.label = cfg.include_rest ? w.label : w.label - 1;
    return out;
}

std::vector<BiquadCascade> design_bands(const PipelineConfig& cfg, double sample_rate) {
    std::vector<BiquadCascade> out;
    const auto& cut = cfg.bands.cutoffs;
    for (std::size_t b = 0; b + 1 < cut.size(); ++b)
        out.push_back(design_butterworth({cut[b], std::min(cut[b + 1], sample_rate / 2.0), cfg.bands.order, sample_rate}));
    return out;
}

Summary summarize(std::span<const double> values) {
    Summary s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() >= 2) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

RunReport run_pipeline(const PipelineConfig& cfg, std::span<const SubjectRecording> dataset,
                       int manifest_classes, PipelineObserver* observer) {
    validate(cfg);
    const auto start = Clock::now();
    RunReport report;
    report.config = to_json(cfg);
    report.version = kVersion;
    report.git = kGitDescribe;
    report.kernel_isa = std::string(simd::active_isa_name());

    const std::size_t n_subjects = dataset.size();
    std::vector<PreparedSubject> prepared(n_subjects);
    std::vector<std::map<std::string, double>> prep_times(n_subjects);
    parallel_for(n_subjects, cfg.workers, [&](std::size_t s) {
        StageTimer timer(prep_times[s]);
        prepared[s] = prepare(dataset[s], manifest_classes, cfg, true, timer);
    });

    struct Unit {
        std::size_t subject;
        int fold;
    };
    std::vector<Unit> units;
    for (std::size_t s = 0; s < n_subjects; ++s)
        for (int f = 0; f < static_cast<int>(prepared[s].folds.size()); ++f) units.push_back({s, f});

    std::vector<FoldResult> results(units.size());
    std::vector<std::map<std::string, double>> unit_times(units.size());
    parallel_for(units.size(), cfg.workers, [&](std::size_t u) {
        StageTimer timer(unit_times[u]);
        try {
            results[u] = run_fold(cfg, prepared[units[u].subject], units[u].fold, observer, timer);
        } catch (...) {
            rethrow_with_context("subject " + std::to_string(prepared[units[u].subject].sw.subject_id) +
                                 ", fold " + std::to_string(units[u].fold));
        }
    });
    const auto reduce_start = Clock::now();
    prepared.clear();
    report.folds = std::move(results);
    std::map<std::string, std::vector<double>> columns;
    std::map<int, std::map<std::string, std::vector<double>>> by_subject;
    std::size_t k = 0;
    for (const auto& f : report.folds) k = std::max(k, f.test.confusion.rows());
    Matrix<long> pooled(k, k, 0);
    for (const auto& f : report.folds) {
        const std::pair<const char*, double> values[] = {
            {"accuracy", f.test.accuracy}, {"pp", f.test.pp}, {"sp", f.test.sp}, {"se", f.test.se}, {"f1", f.test.f1}};
        for (const auto& [name, v] : values) {
            columns[name].push_back(v);
            by_subject[f.subject_id][name].push_back(v);
        }
        columns["train_accuracy"].push_back(f.train_accuracy);
        for (std::size_t r = 0; r < f.test.confusion.rows(); ++r)
            for (std::size_t c = 0; c < f.test.confusion.cols(); ++c) pooled(r, c) += f.test.confusion(r, c);
    }
    for (const auto& [name, vals] : columns) report.summary[name] = summarize(vals);
    for (const auto& [subject, cols] : by_subject)
        for (const auto& [name, vals] : cols) report.per_subject[subject][name] = summarize(vals).mean;
    report.pooled = metrics_from_confusion(pooled);

    for (const auto& times : {std::cref(prep_times), std::cref(unit_times)})
        for (const auto& m : times.get())
            for (const auto& [stage, sec] : m) report.stage_seconds[stage] += sec;
    const auto end = Clock::now();
    report.stage_seconds["aggregate"] += std::chrono::duration<double>(end - reduce_start).count();
    report.total_seconds = std::chrono::duration<double>(end - start).count();
    return report;
}

std::vector<SweepRow> sweep_network_size(const PipelineConfig& cfg, std::span<const std::size_t> sizes,
                                         std::span<const SubjectRecording> dataset, int manifest_classes) {
    if (sizes.empty()) throw ConfigError("sweep: no network sizes given");
    std::vector<SweepRow> rows;
    for (std::size_t n : sizes) {
        PipelineConfig c = cfg;
        c.reservoir.n_neurons = n;
        const RunReport rep = run_pipeline(c, dataset, manifest_classes);
        const Summary& acc = rep.summary.at("accuracy");
        rows.push_back({n, acc.mean, acc.std.value_or(0.0)});
    }
    return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << "size,mean_acc,std_acc\n";
    for (const auto& r : rows) out << r.size << ',' << r.mean_acc << ',' << r.std_acc << '\n';
}

FeatureMatrix export_features(FeatureStage stage, std::span<const SubjectRecording> dataset,
                              int manifest_classes, const PipelineConfig& cfg) {
    validate(cfg);
    FeatureMatrix out;
    std::vector<FeatureVector> all;
    for (const auto& subject : dataset) {
        std::map<std::string, double> ignored;
        StageTimer timer(ignored);
        const PreparedSubject p = prepare(subject, manifest_classes, cfg, false, timer);
        std::vector<std::size_t> idx(p.sw.windows.size());
        std::iota(idx.begin(), idx.end(), 0);
        const auto cal = calibrate_on(cfg, p, idx);
        Encoded enc = encode_all(cfg, p.expanded, p.sw.windows, params_of(cal),
                                 stage == FeatureStage::post_reservoir, timer);
        for (auto& f : enc.features) {
            all.push_back(std::move(f));
            out.subjects.push_back(p.sw.subject_id);
        }
    }
    const std::size_t dim = all.empty() ? 0 : all.front().counts.size();
    out.x = Matrix<double>(all.size(), dim);
    for (std::size_t i = 0; i < all.size(); ++i) {
        if (all[i].counts.size() != dim) throw DataError("export_features: subjects differ in feature width");
        std::copy(all[i].counts.begin(), all[i].counts.end(), out.x.row(i).begin());
        out.labels.push_back(all[i].label);
    }
    return out;
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& m) {
    for (std::size_t c = 0; c < m.x.cols(); ++c) out << 'f' << c << ',';
    out << "label\n";
    for (std::size_t r = 0; r < m.x.rows(); ++r) {
        for (double v : m.x.row(r)) out << v << ',';
        out << m.labels[r] << '\n';
    }
}

std::vector<SubjectCalibration> calibrate_subjects(std::span<const SubjectRecording> dataset,
                                                   int manifest_classes, const PipelineConfig& cfg) {
    validate(cfg);
    std::vector<SubjectCalibration> out;
    for (const auto& subject : dataset) {
        std::map<std::string, double> ignored;
        StageTimer timer(ignored);
        const PreparedSubject p = prepare(subject, manifest_classes, cfg, false, timer);
        std::vector<std::size_t> idx(p.sw.windows.size());
        std::iota(idx.begin(), idx.end(), 0);
        PipelineConfig forced = cfg;
        forced.encoder.calibrate = true;
        out.push_back({subject.subject_id, calibrate_on(forced, p, idx), idx.size()});
    }
    return out;
}

}  // namespace srnr
