#include "srnr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "srnr/config.hpp"
#include "srnr/error.hpp"
#include "srnr/filterbank.hpp"

namespace srnr {

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    DatasetManifest m;
    m.base_dir = path.parent_path();
    try {
        m.sample_rate = j.at("sample_rate").get<double>();
        m.channels = j.at("channels").get<std::size_t>();
        m.n_classes = j.at("n_classes").get<int>();
        m.label_column = j.value("label_column", m.label_column);
        m.repetition_column = j.value("repetition_column", m.repetition_column);
        for (const auto& s : j.at("subjects")) {
            SubjectEntry e;
            e.id = s.at("id").get<int>();
            e.file = s.at("file").get<std::string>();
            e.sample_rate = s.value("sample_rate", 0.0);
            m.subjects.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
    if (m.sample_rate <= 0.0) throw DataError(path.string() + ": sample_rate must be positive");
    if (m.channels < 1) throw DataError(path.string() + ": channels must be >= 1");
    if (m.n_classes < 1) throw DataError(path.string() + ": n_classes must be >= 1");
    if (m.subjects.empty()) throw DataError(path.string() + ": no subjects listed");
    return m;
}

nlohmann::json to_json(const DatasetManifest& m) {
    nlohmann::json subjects = nlohmann::json::array();
    for (const auto& s : m.subjects) {
        nlohmann::json e{{"id", s.id}, {"file", s.file.generic_string()}};
        if (s.sample_rate > 0.0) e["sample_rate"] = s.sample_rate;
        subjects.push_back(e);
    }
    return {{"schema_version", 1},
            {"sample_rate", m.sample_rate},
            {"channels", m.channels},
            {"n_classes", m.n_classes},
            {"label_column", m.label_column},
            {"repetition_column", m.repetition_column},
            {"subjects", subjects}};
}

namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? comma : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

}  // namespace

RawRecording read_recording_csv(std::istream& in, const std::string& name,
                                const DatasetManifest& manifest, double sample_rate) {
    std::string line;
    if (!std::getline(in, line) || split_csv(line).size() <= 1)
        throw DataError(name + ": empty file or missing header row");

    const auto header = split_csv(line);
    auto find_column = [&](const std::string& col) -> std::size_t {
        const auto it = std::find(header.begin(), header.end(), col);
        if (it == header.end()) throw DataError(name + ": missing column '" + col + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    std::vector<std::size_t> channel_col(manifest.channels);
    for (std::size_t c = 0; c < manifest.channels; ++c) channel_col[c] = find_column("ch" + std::to_string(c));
    const std::size_t label_col = find_column(manifest.label_column);
    const std::size_t rep_col = find_column(manifest.repetition_column);

    std::vector<std::vector<double>> channels(manifest.channels);
    RawRecording rec;
    rec.sample_rate = sample_rate;
    std::vector<std::size_t> bad_label_rows;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_csv(line);
        if (fields.size() != header.size())
            throw DataError(name + ": row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, header has " +
                            std::to_string(header.size()));
        for (std::size_t c = 0; c < manifest.channels; ++c) {
            double v = 0.0;
            if (!parse_number(fields[channel_col[c]], v) || !std::isfinite(v))
                throw DataError(name + ": row " + std::to_string(row) + ", column 'ch" +
                                std::to_string(c) + "': not a finite number");
            channels[c].push_back(v);
        }
        int label = 0, rep = 0;
        if (!parse_number(fields[label_col], label))
            throw DataError(name + ": row " + std::to_string(row) + ", column '" +
                            manifest.label_column + "': not an integer");
        if (!parse_number(fields[rep_col], rep))
            throw DataError(name + ": row " + std::to_string(row) + ", column '" +
                            manifest.repetition_column + "': not an integer");
        if (label < 0 || label >= manifest.n_classes) bad_label_rows.push_back(row);
        rec.gesture.push_back(label);
        rec.repetition.push_back(rep);
    }
    if (!bad_label_rows.empty()) {
        std::ostringstream msg;
        msg << name << ": column '" << manifest.label_column << "' has class ids outside [0, "
            << manifest.n_classes << ") in " << bad_label_rows.size() << " rows, at lines: ";
        for (std::size_t i = 0; i < std::min<std::size_t>(bad_label_rows.size(), 20); ++i)
            msg << (i ? ", " : "") << bad_label_rows[i];
        if (bad_label_rows.size() > 20) msg << ", ...";
        throw DataError(msg.str());
    }
    if (rec.gesture.empty()) throw DataError(name + ": no sample rows");

    rec.samples = Matrix<double>(manifest.channels, rec.gesture.size());
    for (std::size_t c = 0; c < manifest.channels; ++c)
        std::copy(channels[c].begin(), channels[c].end(), rec.samples.row(c).begin());
    validate(rec);
    return rec;
}

void write_recording_csv(std::ostream& out, const RawRecording& rec) {
    for (std::size_t c = 0; c < rec.channels(); ++c) out << "ch" << c << ',';
    out << "label,repetition\n";
    char buf[64];
    for (std::size_t t = 0; t < rec.length(); ++t) {
        for (std::size_t c = 0; c < rec.channels(); ++c) {
            const auto res = std::to_chars(buf, buf + sizeof buf, rec.samples(c, t));
            out.write(buf, res.ptr - buf);
            out.put(',');
        }
        out << rec.gesture[t] << ',' << rec.repetition[t] << '\n';
    }
}

std::vector<SubjectRecording> ingest_dataset(const DatasetManifest& manifest,
                                             const std::vector<int>& subjects) {
    std::vector<SubjectRecording> out;
    for (const auto& entry : manifest.subjects) {
        if (!subjects.empty() && std::find(subjects.begin(), subjects.end(), entry.id) == subjects.end())
            continue;
        if (entry.sample_rate > 0.0 && entry.sample_rate != manifest.sample_rate) {
            std::ostringstream msg;
            msg << entry.file.string() << ": sample_rate " << entry.sample_rate
                << " Hz is inconsistent with the manifest rate " << manifest.sample_rate << " Hz";
            throw DataError(msg.str());
        }
        const auto path = entry.file.is_absolute() ? entry.file : manifest.base_dir / entry.file;
        std::ifstream in(path);
        if (!in) throw DataError("cannot open " + path.string());
        SubjectRecording s;
        s.subject_id = entry.id;
        s.recording = read_recording_csv(in, path.string(), manifest, manifest.sample_rate);
        for (int g : s.recording.gesture) ++s.class_samples[g];
        out.push_back(std::move(s));
    }
    if (out.empty()) throw DataError("no subjects selected from the manifest");
    return out;
}

RawRecording synthesize_dataset(const SynthSpec& spec) {
    if (spec.n_classes < 2) throw ConfigError("synthesize_dataset: need at least 2 classes");
    if (spec.repetitions < 1) throw ConfigError("synthesize_dataset: need at least 1 repetition");
    if (spec.channels < 1) throw ConfigError("synthesize_dataset: need at least 1 channel");

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const auto bands = default_bands(spec.sample_rate);
    std::vector<BiquadCascade> filters;
    for (const auto& b : bands) filters.push_back(design_butterworth(b));

    const std::size_t n_bands = bands.size();
    const auto K = static_cast<std::size_t>(spec.n_classes);
    const std::size_t C = spec.channels;

    // Class signature: per-channel amplitude and per-channel spectral mix.
    std::vector<double> amp(K * C), mix(K * C * n_bands);
    for (auto& a : amp) a = 0.15 + 0.85 * unit(rng);
    for (auto& m : mix) m = 0.1 + 0.9 * unit(rng);

    const auto move_len = static_cast<std::size_t>(std::llround(spec.movement_s * spec.sample_rate));
    const auto rest_len = static_cast<std::size_t>(std::llround(spec.rest_s * spec.sample_rate));
    const auto ramp = static_cast<std::size_t>(std::llround(0.2 * spec.sample_rate));
    const std::size_t per_rep = move_len + rest_len;
    const std::size_t total = per_rep * K * static_cast<std::size_t>(spec.repetitions);

    RawRecording rec;
    rec.sample_rate = spec.sample_rate;
    rec.samples = Matrix<double>(C, total);
    rec.gesture.resize(total);
    rec.repetition.resize(total);

    // Band-limited noise per (channel, band), generated continuously.
    std::vector<double> white(total);
    std::vector<std::vector<double>> band_noise(C * n_bands);
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t b = 0; b < n_bands; ++b) {
            for (auto& w : white) w = gauss(rng);
            band_noise[c * n_bands + b] = apply_filter(filters[b], white);
        }

    std::size_t t0 = 0;
    for (int rep = 1; rep <= spec.repetitions; ++rep) {
        for (std::size_t k = 0; k < K; ++k) {
            const double jitter = 0.85 + 0.3 * unit(rng);
            for (std::size_t i = 0; i < per_rep; ++i) {
                const std::size_t t = t0 + i;
                const bool moving = i < move_len;
                rec.gesture[t] = moving ? static_cast<int>(k) + 1 : 0;
                rec.repetition[t] = rep;
                double env = 0.0;
                if (moving) {
                    const double up = std::min(1.0, static_cast<double>(i) / static_cast<double>(ramp));
                    const double down =
                        std::min(1.0, static_cast<double>(move_len - i) / static_cast<double>(ramp));
                    env = jitter * std::min(up, down);
                }
                for (std::size_t c = 0; c < C; ++c) {
                    double x = 0.0;
                    for (std::size_t b = 0; b < n_bands; ++b) {
                        const double weight = moving ? amp[k * C + c] * mix[(k * C + c) * n_bands + b] : 0.0;
                        x += (env * weight + 0.03) * band_noise[c * n_bands + b][t];
                    }
                    rec.samples(c, t) = x;
                }
            }
            t0 += per_rep;
        }
    }
    return rec;
}

DatasetManifest write_synthetic_dataset(const SynthSpec& spec, int subjects,
                                        const std::filesystem::path& out_dir) {
    if (subjects < 1) throw ConfigError("synth: need at least one subject");
    std::filesystem::create_directories(out_dir);
    DatasetManifest m;
    m.sample_rate = spec.sample_rate;
    m.channels = spec.channels;
    m.n_classes = spec.n_classes + 1;
    m.base_dir = out_dir;
    for (int s = 1; s <= subjects; ++s) {
        SynthSpec sub = spec;
        sub.seed = derive_seed(spec.seed, static_cast<std::uint64_t>(s));
        const RawRecording rec = synthesize_dataset(sub);
        const std::string file = "subject" + std::to_string(s) + ".csv";
        std::ofstream out(out_dir / file);
        if (!out) throw Error(ErrorKind::runtime, "cannot write " + (out_dir / file).string());
        write_recording_csv(out, rec);
        m.subjects.push_back({s, file, 0.0});
    }
    std::ofstream manifest(out_dir / "manifest.json");
    manifest << to_json(m).dump(2) << '\n';
    return m;
}

}  // namespace srnr
