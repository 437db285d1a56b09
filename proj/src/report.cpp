#include <iomanip>
#include <ostream>
#include <sstream>

#include "srnr/pipeline.hpp"

namespace srnr {
namespace {

nlohmann::json summary_json(const Summary& s) {
    nlohmann::json j{{"mean", s.mean}};
    if (s.std) j["std"] = *s.std;
    return j;
}

std::string pm(const Summary& s) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << s.mean;
    if (s.std) out << " ± " << *s.std;
    return out.str();
}

}  // namespace

nlohmann::json to_json(const RunReport& r, bool include_timings) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : r.folds) {
        nlohmann::json loss = nlohmann::json::array(), train_acc = nlohmann::json::array();
        for (const auto& e : f.curve) {
            loss.push_back(e.mean_loss);
            train_acc.push_back(e.train_accuracy);
        }
        nlohmann::json calibration = nlohmann::json::array();
        for (const auto& c : f.calibration) calibration.push_back(to_json(c));
        folds.push_back({{"subject", f.subject_id},
                         {"fold", f.fold},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test},
                         {"train_accuracy", f.train_accuracy},
                         {"test", to_json(f.test)},
                         {"loss_curve", loss},
                         {"train_accuracy_curve", train_acc},
                         {"test_accuracy_curve", f.test_curve},
                         {"calibration", calibration},
                         {"mean_input_rate_hz", f.mean_input_rate},
                         {"mean_reservoir_rate_hz", f.mean_reservoir_rate}});
    }
    nlohmann::json summary = nlohmann::json::object();
    for (const auto& [name, s] : r.summary) summary[name] = summary_json(s);
    nlohmann::json per_subject = nlohmann::json::object();
    for (const auto& [subject, m] : r.per_subject) per_subject[std::to_string(subject)] = m;

    nlohmann::json j{{"schema_version", r.schema_version},
                     {"version", r.version},
                     {"git", r.git},
                     {"kernel_isa", r.kernel_isa},
                     {"config", r.config},
                     {"summary", summary},
                     {"per_subject", per_subject},
                     {"pooled", to_json(r.pooled)},
                     {"folds", folds}};
    if (include_timings) j["timings"] = {{"stages", r.stage_seconds}, {"total", r.total_seconds}};
    return j;
}

std::string to_markdown(const RunReport& r) {
    std::ostringstream out;
    out << "# Run report\n\n";
    out << "version " << r.version << " (" << r.git << "), kernels: " << r.kernel_isa << "\n\n";
    out << "Classifier: " << r.config["readout"]["classifier"].get<std::string>()
        << ", reservoir size: " << r.config["reservoir"]["n_neurons"].get<std::size_t>()
        << ", folds: " << r.config["split"]["folds"].get<int>() << "\n\n";
    out << "| metric | mean ± std (%) |\n|---|---|\n";
    for (const char* name : {"accuracy", "pp", "sp", "se", "f1", "train_accuracy"}) {
        const auto it = r.summary.find(name);
        if (it != r.summary.end()) out << "| " << name << " | " << pm(it->second) << " |\n";
    }
    out << "\n## Per subject (mean over folds)\n\n| subject | Acc | PP | Sp | Se | F1 |\n|---|---|---|---|---|---|\n";
    out << std::fixed << std::setprecision(1);
    for (const auto& [subject, m] : r.per_subject) {
        out << "| " << subject;
        for (const char* name : {"accuracy", "pp", "sp", "se", "f1"}) out << " | " << m.at(name);
        out << " |\n";
    }
    out << "\n## Stage timings (s)\n\n| stage | seconds |\n|---|---|\n" << std::setprecision(3);
    for (const auto& [stage, sec] : r.stage_seconds) out << "| " << stage << " | " << sec << " |\n";
    out << "| total | " << r.total_seconds << " |\n";
    return out.str();
}

void write_confusion_csv(std::ostream& out, const Matrix<long>& confusion) {
    out << "truth";
    for (std::size_t c = 0; c < confusion.cols(); ++c) out << ",pred" << c;
    out << '\n';
    for (std::size_t r = 0; r < confusion.rows(); ++r) {
        out << r;
        for (long v : confusion.row(r)) out << ',' << v;
        out << '\n';
    }
}

void write_metrics_csv(std::ostream& out, const RunReport& r) {
    out << "subject,fold,accuracy,pp,sp,se,f1,train_accuracy\n";
    for (const auto& f : r.folds)
        out << f.subject_id << ',' << f.fold << ',' << f.test.accuracy << ',' << f.test.pp << ','
            << f.test.sp << ',' << f.test.se << ',' << f.test.f1 << ',' << f.train_accuracy << '\n';
}

void write_curves_csv(std::ostream& out, const RunReport& r) {
    out << "subject,fold,epoch,loss,train_accuracy,test_accuracy\n";
    for (const auto& f : r.folds)
        for (std::size_t e = 0; e < f.curve.size(); ++e) {
            out << f.subject_id << ',' << f.fold << ',' << e + 1 << ',' << f.curve[e].mean_loss << ','
                << f.curve[e].train_accuracy << ',';
            if (e < f.test_curve.size()) out << f.test_curve[e];
            out << '\n';
        }
}

}  // namespace srnr
