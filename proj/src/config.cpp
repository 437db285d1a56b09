#include "srnr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include "toml.hpp"

#include "srnr/error.hpp"

namespace srnr {
namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(where + ": expected a table/object");
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

}  // namespace

std::string to_string(Classifier c) {
    return c == Classifier::delta_softmax ? "delta" : "svm";
}

std::string to_string(ReservoirClock c) { return c == ReservoirClock::aligned ? "aligned" : "1ms"; }
std::string to_string(GainScope s) { return s == GainScope::subject ? "subject" : "band"; }

void validate(const PipelineConfig& cfg) {
    std::ostringstream err;
    if (!(cfg.window_ms > 0.0)) err << "window_ms must be positive; ";
    if (!(cfg.trim_ms >= 0.0)) err << "trim_ms must be non-negative; ";
    const auto& cut = cfg.bands.cutoffs;
    if (cut.size() < 2) err << "bands.cutoffs needs at least two edges; ";
    for (std::size_t i = 1; i < cut.size(); ++i)
        if (!(cut[i] > cut[i - 1])) err << "bands.cutoffs must increase; ";
    if (cfg.bands.order < 2 || cfg.bands.order % 2) err << "bands.order must be even and >= 2; ";
    if (!(cfg.encoder.rate_cap > 0.0)) err << "encoder.rate_cap must be positive; ";
    if (cfg.reservoir.n_neurons < 1) err << "reservoir.n_neurons must be >= 1; ";
    if (!(cfg.reservoir.density > 0.0 && cfg.reservoir.density <= 1.0))
        err << "reservoir.density must lie in (0, 1]; ";
    if (cfg.readout.batch < 1) err << "readout.batch must be >= 1; ";
    if (cfg.readout.epochs < 0) err << "readout.epochs must be >= 0; ";
    if (cfg.readout.n_bins < 1) err << "readout.n_bins must be >= 1; ";
    if (!(cfg.readout.alpha >= 0.0)) err << "readout.alpha must be >= 0; ";
    if (!(cfg.readout.svm_c > 0.0)) err << "readout.svm_c must be positive; ";
    if (!(cfg.split.train_fraction > 0.0 && cfg.split.train_fraction < 1.0))
        err << "split.train_fraction must lie in (0, 1); ";
    if (cfg.split.folds < 1) err << "split.folds must be >= 1; ";
    if (cfg.workers < 1) err << "workers must be >= 1; ";
    if (!err.str().empty()) throw ConfigError("config: " + err.str());
    try {
        LifParams reservoir = cfg.reservoir.neuron;
        validate(reservoir);
        LifParams encoder = cfg.encoder.neuron;
        validate(encoder);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

json to_json(const PipelineConfig& cfg) {
    return {
        {"seed", cfg.seed},
        {"window_ms", cfg.window_ms},
        {"trim_ms", cfg.trim_ms},
        {"include_rest", cfg.include_rest},
        {"bands", {{"cutoffs", cfg.bands.cutoffs}, {"order", cfg.bands.order}}},
        {"encoder",
         {{"neuron", to_json(cfg.encoder.neuron)},
          {"rate_cap", cfg.encoder.rate_cap},
          {"calibrate", cfg.encoder.calibrate},
          {"gain_scope", to_string(cfg.encoder.gain_scope)}}},
        {"reservoir",
         {{"n_neurons", cfg.reservoir.n_neurons},
          {"density", cfg.reservoir.density},
          {"spike_current", cfg.reservoir.spike_current},
          {"shared_mask", cfg.reservoir.shared_mask},
          {"clock", to_string(cfg.reservoir.clock)},
          {"neuron", to_json(cfg.reservoir.neuron)}}},
        {"readout",
         {{"classifier", to_string(cfg.readout.classifier)},
          {"alpha", cfg.readout.alpha},
          {"batch", cfg.readout.batch},
          {"epochs", cfg.readout.epochs},
          {"n_bins", cfg.readout.n_bins},
          {"scale", cfg.readout.scale == FeatureScale::rates ? "rates" : "counts"},
          {"svm_c", cfg.readout.svm_c},
          {"svm_epochs", cfg.readout.svm_epochs},
          {"track_test_curve", cfg.readout.track_test_curve}}},
        {"split",
         {{"train_fraction", cfg.split.train_fraction},
          {"folds", cfg.split.folds},
          {"mode", cfg.split.mode == FoldMode::disjoint ? "disjoint" : "reshuffled"}}},
        {"workers", cfg.workers},
    };
}

PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    reject_unknown(j, "config",
                   {"seed", "window_ms", "trim_ms", "include_rest", "bands", "encoder", "reservoir",
                    "readout", "split", "workers"});
    read(j, "seed", cfg.seed, "config");
    read(j, "window_ms", cfg.window_ms, "config");
    read(j, "trim_ms", cfg.trim_ms, "config");
    read(j, "include_rest", cfg.include_rest, "config");
    read(j, "workers", cfg.workers, "config");

    auto lif = [](const json& node, const std::string& where, LifParams defaults) {
        reject_unknown(node, where, {"r", "c", "dt", "v_thr", "v_reset", "v_rest", "input_gain"});
        try {
            return lif_params_from_json(node, defaults);
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        }
    };

    if (j.contains("bands")) {
        const auto& b = j["bands"];
        reject_unknown(b, "bands", {"cutoffs", "order"});
        read(b, "cutoffs", cfg.bands.cutoffs, "bands");
        read(b, "order", cfg.bands.order, "bands");
    }
    if (j.contains("encoder")) {
        const auto& e = j["encoder"];
        reject_unknown(e, "encoder", {"neuron", "rate_cap", "calibrate", "gain_scope"});
        if (e.contains("neuron")) cfg.encoder.neuron = lif(e["neuron"], "encoder.neuron", cfg.encoder.neuron);
        read(e, "rate_cap", cfg.encoder.rate_cap, "encoder");
        read(e, "calibrate", cfg.encoder.calibrate, "encoder");
        std::string scope = to_string(cfg.encoder.gain_scope);
        read(e, "gain_scope", scope, "encoder");
        if (scope == "subject") cfg.encoder.gain_scope = GainScope::subject;
        else if (scope == "band") cfg.encoder.gain_scope = GainScope::band;
        else throw ConfigError("encoder.gain_scope: expected 'subject' or 'band', got '" + scope + "'");
    }
    if (j.contains("reservoir")) {
        const auto& r = j["reservoir"];
        reject_unknown(r, "reservoir",
                       {"n_neurons", "density", "spike_current", "shared_mask", "clock", "neuron"});
        read(r, "n_neurons", cfg.reservoir.n_neurons, "reservoir");
        read(r, "density", cfg.reservoir.density, "reservoir");
        read(r, "spike_current", cfg.reservoir.spike_current, "reservoir");
        read(r, "shared_mask", cfg.reservoir.shared_mask, "reservoir");
        std::string clock = to_string(cfg.reservoir.clock);
        read(r, "clock", clock, "reservoir");
        if (clock == "aligned") cfg.reservoir.clock = ReservoirClock::aligned;
        else if (clock == "1ms") cfg.reservoir.clock = ReservoirClock::ms1;
        else throw ConfigError("reservoir.clock: expected 'aligned' or '1ms', got '" + clock + "'");
        if (r.contains("neuron")) cfg.reservoir.neuron = lif(r["neuron"], "reservoir.neuron", cfg.reservoir.neuron);
    }
    if (j.contains("readout")) {
        const auto& r = j["readout"];
        reject_unknown(r, "readout",
                       {"classifier", "alpha", "batch", "epochs", "n_bins", "scale", "svm_c",
                        "svm_epochs", "track_test_curve"});
        std::string classifier = to_string(cfg.readout.classifier);
        read(r, "classifier", classifier, "readout");
        if (classifier == "delta") cfg.readout.classifier = Classifier::delta_softmax;
        else if (classifier == "svm") cfg.readout.classifier = Classifier::linear_svm;
        else throw ConfigError("readout.classifier: expected 'delta' or 'svm', got '" + classifier + "'");
        read(r, "alpha", cfg.readout.alpha, "readout");
        read(r, "batch", cfg.readout.batch, "readout");
        read(r, "epochs", cfg.readout.epochs, "readout");
        read(r, "n_bins", cfg.readout.n_bins, "readout");
        std::string scale = cfg.readout.scale == FeatureScale::rates ? "rates" : "counts";
        read(r, "scale", scale, "readout");
        if (scale == "rates") cfg.readout.scale = FeatureScale::rates;
        else if (scale == "counts") cfg.readout.scale = FeatureScale::counts;
        else throw ConfigError("readout.scale: expected 'rates' or 'counts', got '" + scale + "'");
        read(r, "svm_c", cfg.readout.svm_c, "readout");
        read(r, "svm_epochs", cfg.readout.svm_epochs, "readout");
        read(r, "track_test_curve", cfg.readout.track_test_curve, "readout");
    }
    if (j.contains("split")) {
        const auto& s = j["split"];
        reject_unknown(s, "split", {"train_fraction", "folds", "mode"});
        read(s, "train_fraction", cfg.split.train_fraction, "split");
        read(s, "folds", cfg.split.folds, "split");
        std::string mode = cfg.split.mode == FoldMode::disjoint ? "disjoint" : "reshuffled";
        read(s, "mode", mode, "split");
        if (mode == "disjoint") cfg.split.mode = FoldMode::disjoint;
        else if (mode == "reshuffled") cfg.split.mode = FoldMode::reshuffled;
        else throw ConfigError("split.mode: expected 'disjoint' or 'reshuffled', got '" + mode + "'");
    }
    validate(cfg);
    return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    json j;
    if (path.extension() == ".toml") {
        try {
            const toml::table table = toml::parse(text.str(), path.string());
            std::ostringstream as_json;
            as_json << toml::json_formatter{table};
            j = json::parse(as_json.str());
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << path.string() << ": " << e.description() << " at line " << e.source().begin.line;
            throw ConfigError(msg.str());
        }
    } else {
        try {
            j = json::parse(text.str());
        } catch (const json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }
    return config_from_json(j);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const PipelineConfig& cfg) {
    const std::string text = to_json(cfg).dump();
    return fnv1a64(text.data(), text.size());
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace srnr
