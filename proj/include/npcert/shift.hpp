#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "npcert/calibration.hpp"

namespace npcert {

// Density ratios w_i = dP_target/dP_source evaluated at the calibration
// samples, the quantile level used to pick the bound B, an optional explicit
// B, and the rejection-sampling seed.
struct ShiftConfig {
    std::vector<double> ratios;
    double gamma = 0.9;
    std::optional<double> bound_b;
    std::uint64_t seed = 42;
};

struct DiscriminatorConfig {
    std::size_t feature_dim = 1;
    double learning_rate = 0.1;
    std::size_t epochs = 200;
    double l2 = 0.0;
};

// Linear-logit probabilistic discriminator between source (label 0) and
// target (label 1); the density ratio is the posterior odds corrected by the
// class prior. Richer models are consumed as precomputed ratio files instead.
class DensityRatioModel {
public:
    DensityRatioModel(std::vector<double> weights, double bias, double prior_correction);

    // sigmoid(w.x + b) clamped to [1e-6, 1 - 1e-6].
    double probability(std::span<const double> features) const;

    // p/(1-p) * (n_source/n_target).
    double ratio(std::span<const double> features) const;

    const std::vector<double>& weights() const noexcept { return weights_; }
    double bias() const noexcept { return bias_; }

private:
    std::vector<double> weights_;
    double bias_;
    double prior_correction_;
};

// Full-batch gradient descent on the logistic loss, zero-initialized, with
// optional L2 on the weights. Deterministic for fixed inputs.
DensityRatioModel estimate_density_ratio(const std::vector<std::vector<double>>& source_features,
                                         const std::vector<std::vector<double>>& target_features,
                                         const DiscriminatorConfig& config);

// Empirical gamma-quantile (nearest-rank, upper) of the ratios. gamma = 1
// gives the maximum. Ratios above the bound are accepted with probability 1.
double clip_bound_b(const std::vector<double>& ratios, double gamma);

// Accept index i iff a Uniform(0, B] draw keyed by (seed, i) falls at or
// below ratios[i]; equivalently with probability min(ratios[i], B)/B.
// Returned indexes ascend, and each decision is independent of list length.
std::vector<std::size_t> rejection_sample(const std::vector<double>& ratios, double bound_b,
                                          std::uint64_t seed);

struct ShiftCalibration {
    CertaintyPredictor predictor;
    std::size_t accepted_count = 0;
    double bound_b = 0.0;
    bool empty_acceptance = false;  // nothing survived rejection; abstain-all
};

// Rejection-sample the calibration scores down to the target law, then run
// the plain threshold selection on the accepted subset. The predictor's n0
// is the accepted count.
ShiftCalibration calibrate_under_shift(const std::vector<double>& scores,
                                       const ShiftConfig& config, double alpha, double delta,
                                       ScoreFunction function_id);

// One numeric value per line, aligned with a records file.
std::vector<double> load_ratio_file(const std::filesystem::path& path);

// One feature row per line, whitespace- or comma-separated reals.
std::vector<std::vector<double>> load_feature_matrix(const std::filesystem::path& path);

}  // namespace npcert
