#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npcert/calibration.hpp"

namespace npcert {

// One test item: its certainty score, the willingness label y, and the
// correctness bit used for accuracy (identical to y in the usual setting,
// kept separate so a softer accuracy notion never disturbs y).
struct EvaluationSample {
    double eta = 0.0;
    int y = 0;
    int correct = 0;
};

// Zero-denominator metrics stay empty rather than collapsing to 0; an
// abstain-all predictor is a meaningful regime, not an error.
struct EvaluationReport {
    std::size_t n_total = 0;
    std::size_t n_answered = 0;
    std::optional<double> accuracy_answered;
    std::optional<double> fpr;
    std::optional<double> fnr;
    double answer_rate = 0.0;
};

EvaluationReport evaluate(const CertaintyPredictor& predictor,
                          const std::vector<EvaluationSample>& labeled);

struct CurvePoint {
    double alpha = 0.0;
    double fpr = 0.0;
};

// Calibrate on cal_scores at each grid alpha and report the empirical FPR on
// the test set. The grid must be ascending inside (0,1) and the test set must
// contain at least one y = 0 item.
std::vector<CurvePoint> fpr_alpha_curve(const std::vector<double>& cal_scores,
                                        const std::vector<EvaluationSample>& test,
                                        const std::vector<double>& alphas, double delta);

// Plot-ready delimited table: header row, then one line per point. Numbers are
// written shortest-round-trip, so reading the file back reproduces them
// exactly.
struct CurveTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

void write_curve_table(const std::filesystem::path& path, const CurveTable& table);
CurveTable read_curve_table(const std::filesystem::path& path);

// Flat key-value report document; undefined metrics serialize as null.
std::string report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const std::string& text);

}  // namespace npcert
