#pragma once

// Dataset ingestion (CSV + JSON manifest) and the seeded synthetic generator.
//
// Manifest (JSON):
//   {
//     "schema_version": 1,
//     "sample_rate": 2000,
//     "channels": 12,
//     "n_classes": 50,              // labels must lie in [0, n_classes)
//     "label_column": "label",      // optional
//     "repetition_column": "repetition",  // optional
//     "subjects": [{"id": 1, "file": "s1.csv", "sample_rate": 2000}, ...]
//   }
// Paths are relative to the manifest. Each CSV has a header row
// `ch0,...,ch{C-1},label,repetition` and one row per sample.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "srnr/signal.hpp"

namespace srnr {

struct SubjectEntry {
    int id = 0;
    std::filesystem::path file;
    double sample_rate = 0.0;  // 0: use the manifest rate
};

struct DatasetManifest {
    double sample_rate = 2000.0;
    std::size_t channels = 12;
    int n_classes = 50;
    std::string label_column = "label";
    std::string repetition_column = "repetition";
    std::vector<SubjectEntry> subjects;
    std::filesystem::path base_dir;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
nlohmann::json to_json(const DatasetManifest& m);

struct SubjectRecording {
    int subject_id = 0;
    RawRecording recording;
    std::map<int, std::size_t> class_samples;  // label -> sample count
};

/// Reads and validates one CSV. Errors name the file, and the column or rows
/// at fault.
RawRecording read_recording_csv(std::istream& in, const std::string& name,
                                const DatasetManifest& manifest, double sample_rate);

void write_recording_csv(std::ostream& out, const RawRecording& rec);

/// Loads every subject listed in the manifest (or only `subjects`, if non-empty).
std::vector<SubjectRecording> ingest_dataset(const DatasetManifest& manifest,
                                             const std::vector<int>& subjects = {});

struct SynthSpec {
    int n_classes = 5;  // gestures, labelled 1..n_classes; rest is 0
    int repetitions = 6;
    std::uint64_t seed = 0;
    std::size_t channels = 12;
    double sample_rate = 2000.0;
    double movement_s = 5.0;
    double rest_s = 3.0;
};

/// Per gesture and repetition: movement_s of class-specific band-limited
/// activity followed by rest_s of low-level noise. Class signatures (per
/// channel amplitude and spectral mix) are drawn from the seed.
RawRecording synthesize_dataset(const SynthSpec& spec);

/// Synthesizes `subjects` recordings into out_dir with a manifest.json.
DatasetManifest write_synthetic_dataset(const SynthSpec& spec, int subjects,
                                        const std::filesystem::path& out_dir);

}  // namespace srnr
