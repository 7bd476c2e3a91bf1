#include "npcert/shift.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "npcert/errors.hpp"
#include "npcert/rng.hpp"

namespace npcert {

namespace {

constexpr double kProbClamp = 1e-6;

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void check_ratios(const std::vector<double>& ratios) {
    for (double w : ratios) {
        if (!std::isfinite(w) || w < 0.0) {
            throw invalid_input_error("density ratios must be finite and >= 0");
        }
    }
}

}  // namespace

DensityRatioModel::DensityRatioModel(std::vector<double> weights, double bias,
                                     double prior_correction)
    : weights_(std::move(weights)), bias_(bias), prior_correction_(prior_correction) {}

double DensityRatioModel::probability(std::span<const double> features) const {
    if (features.size() != weights_.size()) {
        throw invalid_input_error("feature dimension does not match the trained model");
    }
    double z = bias_;
    for (std::size_t d = 0; d < weights_.size(); ++d) z += weights_[d] * features[d];
    return std::clamp(sigmoid(z), kProbClamp, 1.0 - kProbClamp);
}

double DensityRatioModel::ratio(std::span<const double> features) const {
    const double p = probability(features);
    return p / (1.0 - p) * prior_correction_;
}

DensityRatioModel estimate_density_ratio(const std::vector<std::vector<double>>& source_features,
                                         const std::vector<std::vector<double>>& target_features,
                                         const DiscriminatorConfig& config) {
    if (source_features.empty() || target_features.empty()) {
        throw invalid_input_error("both feature sets must be nonempty");
    }
    if (config.feature_dim == 0) throw invalid_input_error("feature_dim must be positive");
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
        throw invalid_input_error("learning_rate must be positive and finite");
    }
    if (config.epochs == 0) throw invalid_input_error("epochs must be positive");
    if (config.l2 < 0.0 || !std::isfinite(config.l2)) {
        throw invalid_input_error("l2 must be non-negative and finite");
    }

    const std::size_t dim = config.feature_dim;
    auto check_rows = [dim](const std::vector<std::vector<double>>& rows) {
        for (const auto& row : rows) {
            if (row.size() != dim) {
                throw invalid_input_error("feature rows must all have feature_dim entries");
            }
            for (double v : row) {
                if (!std::isfinite(v)) throw invalid_input_error("features must be finite");
            }
        }
    };
    check_rows(source_features);
    check_rows(target_features);

    const std::size_t n_source = source_features.size();
    const std::size_t n_target = target_features.size();
    const double inv_n = 1.0 / static_cast<double>(n_source + n_target);

    std::vector<double> w(dim, 0.0);
    double b = 0.0;
    std::vector<double> grad(dim);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        auto accumulate = [&](const std::vector<std::vector<double>>& rows, double label) {
            for (const auto& row : rows) {
                double z = b;
                for (std::size_t d = 0; d < dim; ++d) z += w[d] * row[d];
                const double err = sigmoid(z) - label;
                for (std::size_t d = 0; d < dim; ++d) grad[d] += err * row[d];
                grad_b += err;
            }
        };
        accumulate(target_features, 1.0);
        accumulate(source_features, 0.0);
        for (std::size_t d = 0; d < dim; ++d) {
            w[d] -= config.learning_rate * (grad[d] * inv_n + config.l2 * w[d]);
        }
        b -= config.learning_rate * grad_b * inv_n;
    }

    const double prior_correction =
        static_cast<double>(n_source) / static_cast<double>(n_target);
    return DensityRatioModel(std::move(w), b, prior_correction);
}

double clip_bound_b(const std::vector<double>& ratios, double gamma) {
    if (ratios.empty()) throw invalid_input_error("clip_bound_b requires nonempty ratios");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw invalid_input_error("gamma must lie in (0,1]");
    check_ratios(ratios);
    if (std::all_of(ratios.begin(), ratios.end(), [](double w) { return w == 0.0; })) {
        throw invalid_input_error("all ratios are zero (degenerate target support)");
    }

    const std::size_t n = ratios.size();
    // Nearest-rank upper quantile: ceil(gamma * n), guarded against the
    // product landing a hair above an exact integer.
    auto rank = static_cast<std::size_t>(
        std::ceil(gamma * static_cast<double>(n) - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, n);

    std::vector<double> sorted = ratios;
    std::nth_element(sorted.begin(), sorted.begin() + (rank - 1), sorted.end());
    return sorted[rank - 1];
}

std::vector<std::size_t> rejection_sample(const std::vector<double>& ratios, double bound_b,
                                          std::uint64_t seed) {
    if (!(bound_b > 0.0) || !std::isfinite(bound_b)) {
        throw invalid_input_error("bound_b must be positive and finite");
    }
    check_ratios(ratios);

    std::vector<std::size_t> accepted;
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        // U on (0, B]: a zero ratio is never accepted, a ratio at the bound
        // always is.
        const double u = bound_b * (1.0 - indexed_uniform01(seed, i));
        if (u <= ratios[i]) accepted.push_back(i);
    }
    return accepted;
}

ShiftCalibration calibrate_under_shift(const std::vector<double>& scores,
                                       const ShiftConfig& config, double alpha, double delta,
                                       ScoreFunction function_id) {
    if (config.ratios.size() != scores.size()) {
        throw invalid_input_error("ratios must align one-to-one with the calibration scores");
    }
    if (config.bound_b && !(*config.bound_b > 0.0)) {
        throw invalid_input_error("bound_b must be positive");
    }

    const double bound =
        config.bound_b ? *config.bound_b : clip_bound_b(config.ratios, config.gamma);
    const auto accepted = rejection_sample(config.ratios, bound, config.seed);

    std::vector<double> kept;
    kept.reserve(accepted.size());
    for (std::size_t i : accepted) kept.push_back(scores[i]);

    ShiftCalibration result;
    result.predictor = calibrate({std::move(kept), alpha, delta}, function_id);
    result.accepted_count = accepted.size();
    result.bound_b = bound;
    result.empty_acceptance = accepted.empty();
    return result;
}

std::vector<double> load_ratio_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");

    std::vector<double> ratios;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::stringstream ss(line);
        double v = 0.0;
        if (!(ss >> v)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            throw parse_error(lineno, "expected one numeric ratio");
        }
        std::string residue;
        if (ss >> residue) throw parse_error(lineno, "expected exactly one value per line");
        if (!std::isfinite(v) || v < 0.0) {
            throw parse_error(lineno, "ratios must be finite and >= 0");
        }
        ratios.push_back(v);
    }
    return ratios;
}

std::vector<std::vector<double>> load_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::stringstream ss(line);
        std::vector<double> row;
        double v = 0.0;
        while (ss >> v) {
            if (!std::isfinite(v)) throw parse_error(lineno, "features must be finite");
            row.push_back(v);
        }
        if (!ss.eof()) throw parse_error(lineno, "bad numeric feature cell");
        if (row.empty()) continue;
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw parse_error(lineno, "inconsistent feature dimension");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace npcert
