// srnr: command line front end for the spiking rotating-neuron reservoir
// pipeline. Subcommands: ingest, synth, run, sweep, export-features, calibrate.
//
// Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "srnr/config.hpp"
#include "srnr/dataset.hpp"
#include "srnr/error.hpp"
#include "srnr/pipeline.hpp"
#include "srnr/simd/kernels.hpp"
#include "srnr/version.hpp"

namespace fs = std::filesystem;
using namespace srnr;

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kData = 3, kRuntime = 4 };

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out_dir = ".";
    std::optional<int> workers;
    std::string kernel;
};

struct DataArgs {
    std::string manifest;
    std::vector<int> subjects;
    std::optional<int> classes;  // restrict to the first K gestures
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML or JSON pipeline configuration");
    cmd->add_option("--seed", c.seed, "Run seed (overrides the config)");
    cmd->add_option("--out-dir", c.out_dir, "Output directory");
    cmd->add_option("--workers", c.workers, "Worker threads for subjects and folds")->check(CLI::PositiveNumber);
    cmd->add_option("--kernel", c.kernel, "Kernel variant: scalar or avx2 (default: best available)");
}

void add_data(CLI::App* cmd, DataArgs& d) {
    cmd->add_option("--manifest", d.manifest, "Dataset manifest (JSON)")->required();
    cmd->add_option("--subjects", d.subjects, "Subject ids to load (default: all)")->delimiter(',');
    cmd->add_option("--classes", d.classes, "Keep only the first K gestures")->check(CLI::PositiveNumber);
}

PipelineConfig resolve_config(const Common& c) {
    PipelineConfig cfg = c.config.empty() ? PipelineConfig{} : load_config(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (c.workers) cfg.workers = *c.workers;
    validate(cfg);
    if (!c.kernel.empty() && !simd::select_isa(c.kernel))
        throw ConfigError("kernel '" + c.kernel + "' is unknown or unsupported on this CPU");
    return cfg;
}

/// Drops samples of gestures above `classes` and returns the class count to use.
int apply_class_limit(std::vector<SubjectRecording>& data, const DatasetManifest& m, std::optional<int> classes) {
    if (!classes) return m.n_classes;
    const int k = *classes;
    if (k + 1 > m.n_classes)
        throw ConfigError("--classes " + std::to_string(k) + " exceeds the manifest's " +
                          std::to_string(m.n_classes - 1) + " gestures");
    for (auto& s : data) {
        RawRecording& rec = s.recording;
        std::vector<std::size_t> keep;
        for (std::size_t t = 0; t < rec.gesture.size(); ++t)
            if (rec.gesture[t] <= k) keep.push_back(t);
        RawRecording out;
        out.sample_rate = rec.sample_rate;
        out.samples = Matrix<double>(rec.samples.rows(), keep.size());
        for (std::size_t ch = 0; ch < rec.samples.rows(); ++ch)
            for (std::size_t i = 0; i < keep.size(); ++i) out.samples(ch, i) = rec.samples(ch, keep[i]);
        for (std::size_t t : keep) {
            out.gesture.push_back(rec.gesture[t]);
            out.repetition.push_back(rec.repetition[t]);
        }
        rec = std::move(out);
        std::erase_if(s.class_samples, [k](const auto& kv) { return kv.first > k; });
    }
    return k + 1;
}

std::vector<SubjectRecording> load_data(const DataArgs& d, DatasetManifest& manifest, int& n_classes) {
    manifest = load_manifest(d.manifest);
    auto data = ingest_dataset(manifest, d.subjects);
    n_classes = apply_class_limit(data, manifest, d.classes);
    return data;
}

std::ofstream open_out(const fs::path& path) {
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::runtime, "cannot write " + path.string());
    return out;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

int cmd_ingest(const Common& c, const DataArgs& d) {
    resolve_config(c);
    DatasetManifest manifest;
    int n_classes = 0;
    const auto data = load_data(d, manifest, n_classes);
    nlohmann::json summary = {{"manifest", to_json(manifest)}, {"subjects", nlohmann::json::array()}};
    for (const auto& s : data) {
        nlohmann::json counts = nlohmann::json::object();
        for (const auto& [label, n] : s.class_samples) counts[std::to_string(label)] = n;
        summary["subjects"].push_back({{"id", s.subject_id},
                                       {"channels", s.recording.channels()},
                                       {"samples", s.recording.length()},
                                       {"sample_rate", s.recording.sample_rate},
                                       {"class_samples", counts}});
        std::cout << "subject " << s.subject_id << ": " << s.recording.channels() << " channels, "
                  << s.recording.length() << " samples, " << s.class_samples.size() << " labels\n";
    }
    write_json(fs::path(c.out_dir) / "ingest_summary.json", summary);
    return kOk;
}

int cmd_synth(const Common& c, int classes, int reps, int subjects, std::size_t channels) {
    const PipelineConfig cfg = resolve_config(c);
    SynthSpec spec;
    spec.n_classes = classes;
    spec.repetitions = reps;
    spec.seed = cfg.seed;
    spec.channels = channels;
    const DatasetManifest m = write_synthetic_dataset(spec, subjects, c.out_dir);
    std::cout << "wrote " << m.subjects.size() << " subjects, " << classes << " gestures + rest, to "
              << (fs::path(c.out_dir) / "manifest.json").string() << '\n';
    return kOk;
}

void write_run_outputs(const fs::path& dir, const RunReport& rep) {
    write_json(dir / "report.json", to_json(rep));
    open_out(dir / "report.md") << to_markdown(rep);
    {
        auto out = open_out(dir / "confusion.csv");
        write_confusion_csv(out, rep.pooled.confusion);
    }
    {
        auto out = open_out(dir / "metrics.csv");
        write_metrics_csv(out, rep);
    }
    {
        auto out = open_out(dir / "curves.csv");
        write_curves_csv(out, rep);
    }
    for (const auto& f : rep.folds)
        if (!f.model.is_null())
            write_json(dir / "models" / ("subject" + std::to_string(f.subject_id) + "_fold" + std::to_string(f.fold) + ".json"),
                       f.model);
}

int cmd_run(const Common& c, const DataArgs& d, const std::string& classifier) {
    PipelineConfig cfg = resolve_config(c);
    if (classifier == "svm") cfg.readout.classifier = Classifier::linear_svm;
    else if (classifier == "delta") cfg.readout.classifier = Classifier::delta_softmax;
    DatasetManifest manifest;
    int n_classes = 0;
    const auto data = load_data(d, manifest, n_classes);
    const RunReport rep = run_pipeline(cfg, data, n_classes);
    write_run_outputs(c.out_dir, rep);
    const auto& acc = rep.summary.at("accuracy");
    std::cout << "accuracy " << acc.mean;
    if (acc.std) std::cout << " +/- " << *acc.std;
    std::cout << " % over " << rep.folds.size() << " folds (" << rep.total_seconds << " s, kernel "
              << rep.kernel_isa << ")\n";
    return kOk;
}

int cmd_sweep(const Common& c, const DataArgs& d, const std::vector<std::size_t>& sizes) {
    const PipelineConfig cfg = resolve_config(c);
    DatasetManifest manifest;
    int n_classes = 0;
    const auto data = load_data(d, manifest, n_classes);
    const auto rows = sweep_network_size(cfg, sizes, data, n_classes);
    auto out = open_out(fs::path(c.out_dir) / "sweep.csv");
    write_sweep_csv(out, rows);
    write_sweep_csv(std::cout, rows);
    return kOk;
}

int cmd_export(const Common& c, const DataArgs& d, const std::string& stage) {
    const PipelineConfig cfg = resolve_config(c);
    DatasetManifest manifest;
    int n_classes = 0;
    const auto data = load_data(d, manifest, n_classes);
    const FeatureStage st = stage == "pre-reservoir" ? FeatureStage::pre_reservoir : FeatureStage::post_reservoir;
    const FeatureMatrix m = export_features(st, data, n_classes, cfg);
    const fs::path path = fs::path(c.out_dir) / ("features_" + stage + ".csv");
    auto out = open_out(path);
    write_feature_csv(out, m);
    std::cout << "wrote " << m.x.rows() << " x " << m.x.cols() << " features to " << path.string() << '\n';
    return kOk;
}

int cmd_calibrate(const Common& c, const DataArgs& d) {
    const PipelineConfig cfg = resolve_config(c);
    DatasetManifest manifest;
    int n_classes = 0;
    const auto data = load_data(d, manifest, n_classes);
    nlohmann::json j = nlohmann::json::array();
    for (const auto& s : calibrate_subjects(data, n_classes, cfg)) {
        nlohmann::json groups = nlohmann::json::array();
        std::cout << "subject " << s.subject_id << ":";
        for (const auto& g : s.groups) {
            groups.push_back(to_json(g));
            std::cout << " gain " << g.params.input_gain << " (peak " << g.max_rate << " Hz)";
        }
        std::cout << '\n';
        j.push_back({{"subject", s.subject_id}, {"windows", s.n_windows}, {"groups", groups}});
    }
    write_json(fs::path(c.out_dir) / "calibration.json", j);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spiking rotating-neuron reservoir for sEMG gesture classification"};
    app.set_version_flag("--version", std::string(kVersion) + " (" + kGitDescribe + ")");
    app.require_subcommand(1);

    Common common;
    DataArgs data;

    auto* ingest = app.add_subcommand("ingest", "Validate a dataset and report per-class sample counts");
    add_common(ingest, common);
    add_data(ingest, data);

    int synth_classes = 5, synth_reps = 6, synth_subjects = 1;
    std::size_t synth_channels = 12;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset with a manifest");
    add_common(synth, common);
    synth->add_option("--classes", synth_classes, "Number of gestures")->check(CLI::Range(2, 1000));
    synth->add_option("--reps", synth_reps, "Repetitions per gesture")->check(CLI::PositiveNumber);
    synth->add_option("--subject-count", synth_subjects, "Number of subjects")->check(CLI::PositiveNumber);
    synth->add_option("--channels", synth_channels, "Electrode channels")->check(CLI::PositiveNumber);

    std::string classifier;
    auto* run = app.add_subcommand("run", "Cross-validated run; writes report.json/.md and CSVs");
    add_common(run, common);
    add_data(run, data);
    run->add_option("--classifier", classifier, "Override the readout: delta or svm")
        ->check(CLI::IsMember({"delta", "svm"}));

    std::vector<std::size_t> sizes{1, 2, 5, 10, 20};
    auto* sweep = app.add_subcommand("sweep", "Accuracy versus reservoir size; writes sweep.csv");
    add_common(sweep, common);
    add_data(sweep, data);
    sweep->add_option("--sizes", sizes, "Network sizes")->delimiter(',');

    std::string stage = "post-reservoir";
    auto* exp = app.add_subcommand("export-features", "Write a labelled spike-count feature matrix");
    add_common(exp, common);
    add_data(exp, data);
    exp->add_option("--stage", stage, "pre-reservoir or post-reservoir")
        ->check(CLI::IsMember({"pre-reservoir", "post-reservoir"}));

    auto* cal = app.add_subcommand("calibrate", "Calibrate the encoder gain per subject");
    add_common(cal, common);
    add_data(cal, data);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*ingest) return cmd_ingest(common, data);
        if (*synth) return cmd_synth(common, synth_classes, synth_reps, synth_subjects, synth_channels);
        if (*run) return cmd_run(common, data, classifier);
        if (*sweep) return cmd_sweep(common, data, sizes);
        if (*exp) return cmd_export(common, data, stage);
        if (*cal) return cmd_calibrate(common, data);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        switch (e.kind()) {
            case ErrorKind::config: return kConfig;
            case ErrorKind::data: return kData;
            default: return kRuntime;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntime;
    }
    return kRuntime;
}
