#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "npcert/scores.hpp"

namespace npcert {

// Certainty scores of the uncertain-labeled subset plus the error budget:
// alpha caps the false positive rate, delta the probability of missing it.
struct CalibrationInput {
    std::vector<double> scores;
    double alpha = 0.05;
    double delta = 0.05;
};

// Calibrated decision rule: answer iff eta > tau (strict). tau == +inf means
// abstain on everything, which is the sound fallback whenever the
// calibration set is too small for the requested (alpha, delta).
struct CertaintyPredictor {
    double alpha = 0.05;
    double delta = 0.05;
    std::size_t n0 = 0;
    std::size_t k_hat = 1;
    double tau = 0.0;
    ScoreFunction function_id = ScoreFunction::VE;
};

enum class Decision { Certain, Uncertain };

// Upper tail of Binomial(n0, 1-alpha) at k:
//     v(k) = sum_{j=k}^{n0} C(n0,j) (1-alpha)^j alpha^{n0-j},   v(n0+1) = 0.
// Log-space term recursion with compensated summation; the closed form
// v(k) = I_{1-alpha}(k, n0-k+1) (regularized incomplete beta) is kept as a
// cross-check in the tests, not as the computation path.
double binomial_tail_v(std::size_t k, std::size_t n0, double alpha);

// Smallest k in [1, n0+1] with v(k) <= delta; v is non-increasing in k and
// v(n0+1) = 0, so the search always succeeds.
std::size_t select_k_hat(std::size_t n0, double alpha, double delta);

// Sort the calibration scores ascending, append +inf as the (n0+1)-th order
// statistic, and cut at the k_hat-th. Deterministic; order of the input
// scores is irrelevant.
CertaintyPredictor calibrate(const CalibrationInput& input, ScoreFunction function_id);

Decision predict(const CertaintyPredictor& predictor, double eta);

struct ScoreLabel {
    double eta = 0.0;
    int y = 0;
};

// Metrics along candidate thresholds tau' in {tau} followed by every distinct
// eta above it, ascending. FPR is non-increasing and FNR non-decreasing in
// tau'; accuracy is empty when nothing is answered.
struct SweepPoint {
    double threshold = 0.0;
    std::optional<double> accuracy;
    std::optional<double> fpr;
    std::optional<double> fnr;
};

std::vector<SweepPoint> threshold_sweep(const CertaintyPredictor& predictor,
                                        const std::vector<ScoreLabel>& labeled_scores);

// Flat JSON document {alpha, delta, n0, k_hat, tau, function_id, tool_version};
// tau serializes as the literal string "inf" when infinite. Round-trip is
// lossless.
std::string predictor_to_json(const CertaintyPredictor& predictor);
CertaintyPredictor predictor_from_json(const std::string& text);
void save_predictor(const std::filesystem::path& path, const CertaintyPredictor& predictor);
CertaintyPredictor load_predictor(const std::filesystem::path& path);

}  // namespace npcert
