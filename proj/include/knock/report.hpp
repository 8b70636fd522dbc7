#pragma once

#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "knock/error.hpp"
#include "knock/pipeline.hpp"
#include "knock/train.hpp"

namespace knock {

inline nlohmann::json metrics_to_json(const MetricsReport& rep) {
    nlohmann::json per_class = nlohmann::json::array();
    for (int c = 0; c < 3; ++c) {
        const auto& m = rep.per_class[c];
        per_class.push_back({{"label", c},
                             {"precision", m.precision},
                             {"recall", m.recall},
                             {"f1", m.f1},
                             {"support", m.support},
                             {"degenerate", m.degenerate}});
    }
    nlohmann::json confusion = nlohmann::json::array();
    for (int t = 0; t < 3; ++t) {
        nlohmann::json row = nlohmann::json::array();
        for (int p = 0; p < 3; ++p) row.push_back(rep.confusion.counts[t][p]);
        confusion.push_back(row);
    }
    return {{"version", 1},
            {"accuracy", rep.accuracy},
            {"precision_macro", rep.precision_macro},
            {"recall_macro", rep.recall_macro},
            {"f1_macro", rep.f1_macro},
            {"per_class", per_class},
            {"confusion", confusion}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
    ConfusionMatrix cm;
    for (int t = 0; t < 3; ++t)
        for (int p = 0; p < 3; ++p) cm.counts[t][p] = j.at("confusion")[t][p].get<long>();
    MetricsReport rep = metrics(cm);
    // trust the stored percentages (they round-trip exactly anyway)
    rep.accuracy = j.at("accuracy").get<double>();
    rep.precision_macro = j.at("precision_macro").get<double>();
    rep.recall_macro = j.at("recall_macro").get<double>();
    rep.f1_macro = j.at("f1_macro").get<double>();
    return rep;
}

inline void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open: " + path);
    return nlohmann::json::parse(in);
}

inline void write_trainlog_csv(const std::string& path,
                               const std::vector<TrainLogEntry>& log) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << "epoch,train_loss,val_loss\n";
    out << std::setprecision(17);
    for (const auto& e : log)
        out << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write: " + path);
    out << "true\\pred,0,1,2\n";
    for (int t = 0; t < 3; ++t)
        out << t << ',' << cm.counts[t][0] << ',' << cm.counts[t][1] << ','
            << cm.counts[t][2] << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json comparison_to_json(const std::string& model_a,
                                         const std::string& model_b,
                                         const std::vector<double>& indicators_a,
                                         const std::vector<double>& indicators_b,
                                         double p_value) {
    return {{"version", 1},
            {"model_a", model_a},
            {"model_b", model_b},
            {"indicators_a", indicators_a},
            {"indicators_b", indicators_b},
            {"p_value", p_value},
            {"verdict", p_value > 0.05 ? "no significant difference"
                                       : "significant difference"}};
}

/// Fixed-width console table with 2-decimal percentages.
inline std::string render_metrics_table(const std::string& title,
                                        const MetricsReport& rep) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(2);
    os << title << '\n';
    os << "  accuracy        " << std::setw(6) << rep.accuracy << " %\n";
    os << "  macro precision " << std::setw(6) << rep.precision_macro << " %\n";
    os << "  macro recall    " << std::setw(6) << rep.recall_macro << " %\n";
    os << "  macro F1        " << std::setw(6) << rep.f1_macro << " %\n";
    static const char* kNames[3] = {"premature ", "mature    ", "overmature"};
    for (int c = 0; c < 3; ++c) {
        const auto& m = rep.per_class[c];
        os << "  class " << c << ' ' << kNames[c] << " precision " << std::setw(6)
           << m.precision << "  recall " << std::setw(6) << m.recall << "  F1 "
           << std::setw(6) << m.f1 << (m.degenerate ? "  [degenerate]" : "") << '\n';
    }
    return os.str();
}

} // namespace knock
