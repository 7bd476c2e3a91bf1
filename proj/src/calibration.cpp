#include "npcert/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "npcert/distributions.hpp"
#include "npcert/errors.hpp"
#include "npcert/version.hpp"

namespace npcert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_levels(double alpha, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw invalid_input_error("alpha must lie strictly inside (0,1)");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw invalid_input_error("delta must lie strictly inside (0,1)");
    }
}

}  // namespace

double binomial_tail_v(std::size_t k, std::size_t n0, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw invalid_input_error("alpha must lie strictly inside (0,1)");
    }
    if (k < 1 || k > n0 + 1) {
        throw invalid_input_error("k must lie in [1, n0+1]");
    }
    if (k == n0 + 1) return 0.0;

    const double log_p = std::log1p(-alpha);  // ln(1-alpha)
    const double log_q = std::log(alpha);
    const double log_ratio = log_p - log_q;

    const double log_first = log_binomial_coefficient(n0, k) +
                             static_cast<double>(k) * log_p +
                             static_cast<double>(n0 - k) * log_q;

    // Terms can straddle hundreds of orders of magnitude, so locate the peak
    // first and sum exp(l_j - max) with Kahan compensation.
    double max_log = log_first;
    double l = log_first;
    for (std::size_t j = k; j < n0; ++j) {
        l += std::log(static_cast<double>(n0 - j)) - std::log(static_cast<double>(j + 1)) +
             log_ratio;
        max_log = std::max(max_log, l);
    }

    double sum = 0.0;
    double comp = 0.0;
    l = log_first;
    for (std::size_t j = k;; ++j) {
        const double term = std::exp(l - max_log);
        const double y = term - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if (j == n0) break;
        l += std::log(static_cast<double>(n0 - j)) - std::log(static_cast<double>(j + 1)) +
             log_ratio;
    }

    return std::clamp(std::exp(max_log) * sum, 0.0, 1.0);
}

std::size_t select_k_hat(std::size_t n0, double alpha, double delta) {
    check_levels(alpha, delta);
    // v(k) is non-increasing in k and v(n0+1) = 0 <= delta, so binary-search
    // the first index under the cap.
    std::size_t lo = 1;
    std::size_t hi = n0 + 1;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (binomial_tail_v(mid, n0, alpha) <= delta) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    return lo;
}

CertaintyPredictor calibrate(const CalibrationInput& input, ScoreFunction function_id) {
    check_levels(input.alpha, input.delta);
    for (double s : input.scores) {
        if (!std::isfinite(s)) {
            throw invalid_input_error("calibration scores must all be finite");
        }
    }

    std::vector<double> sorted = input.scores;
    std::stable_sort(sorted.begin(), sorted.end());

    const std::size_t n0 = sorted.size();
    const std::size_t k_hat = select_k_hat(n0, input.alpha, input.delta);

    CertaintyPredictor predictor;
    predictor.alpha = input.alpha;
    predictor.delta = input.delta;
    predictor.n0 = n0;
    predictor.k_hat = k_hat;
    predictor.tau = (k_hat <= n0) ? sorted[k_hat - 1] : kInf;
    predictor.function_id = function_id;
    return predictor;
}

Decision predict(const CertaintyPredictor& predictor, double eta) {
    if (!std::isfinite(eta)) {
        throw invalid_input_error("eta must be finite");
    }
    // Strict comparison: a score exactly at the threshold abstains.
    return eta > predictor.tau ? Decision::Certain : Decision::Uncertain;
}

std::vector<SweepPoint> threshold_sweep(const CertaintyPredictor& predictor,
                                        const std::vector<ScoreLabel>& labeled_scores) {
    if (labeled_scores.empty()) {
        throw invalid_input_error("threshold_sweep requires a nonempty labeled set");
    }
    for (const auto& ls : labeled_scores) {
        if (!std::isfinite(ls.eta)) throw invalid_input_error("eta must be finite");
        if (ls.y != 0 && ls.y != 1) throw invalid_input_error("labels must be 0 or 1");
    }

    std::vector<double> candidates{predictor.tau};
    for (const auto& ls : labeled_scores) {
        if (ls.eta > predictor.tau) candidates.push_back(ls.eta);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    std::vector<SweepPoint> sweep;
    sweep.reserve(candidates.size());
    for (double threshold : candidates) {
        std::size_t answered = 0, answered_pos = 0, neg = 0, neg_answered = 0, pos = 0,
                    pos_abstained = 0;
        for (const auto& ls : labeled_scores) {
            const bool ans = ls.eta > threshold;
            if (ans) ++answered;
            if (ls.y == 1) {
                ++pos;
                if (ans) ++answered_pos;
                if (!ans) ++pos_abstained;
            } else {
                ++neg;
                if (ans) ++neg_answered;
            }
        }
        SweepPoint point;
        point.threshold = threshold;
        if (answered > 0) {
            point.accuracy = static_cast<double>(answered_pos) / static_cast<double>(answered);
        }
        if (neg > 0) point.fpr = static_cast<double>(neg_answered) / static_cast<double>(neg);
        if (pos > 0) point.fnr = static_cast<double>(pos_abstained) / static_cast<double>(pos);
        sweep.push_back(point);
    }

    // Raising the threshold can only shrink the answered set; checked
    // unconditionally so a regression cannot ship a non-monotone sweep.
    for (std::size_t i = 1; i < sweep.size(); ++i) {
        if (sweep[i].fpr && *sweep[i].fpr > *sweep[i - 1].fpr) {
            throw numeric_error("threshold sweep produced a non-monotone FPR");
        }
        if (sweep[i].fnr && *sweep[i].fnr < *sweep[i - 1].fnr) {
            throw numeric_error("threshold sweep produced a non-monotone FNR");
        }
    }
    return sweep;
}

namespace {

void validate_predictor(const CertaintyPredictor& p) {
    check_levels(p.alpha, p.delta);
    if (p.k_hat < 1 || p.k_hat > p.n0 + 1) {
        throw invalid_input_error("predictor k_hat out of [1, n0+1]");
    }
    if (p.k_hat == p.n0 + 1 && !std::isinf(p.tau)) {
        throw invalid_input_error("predictor with k_hat = n0+1 must have tau = +inf");
    }
    if (p.k_hat <= p.n0 && !std::isfinite(p.tau)) {
        throw invalid_input_error("predictor with k_hat <= n0 must have finite tau");
    }
    // k_hat must be the first index whose tail bound clears delta; a document
    // claiming otherwise was not produced by this selection rule.
    if (binomial_tail_v(p.k_hat, p.n0, p.alpha) > p.delta) {
        throw invalid_input_error("predictor k_hat does not satisfy v(k_hat) <= delta");
    }
    if (p.k_hat > 1 && binomial_tail_v(p.k_hat - 1, p.n0, p.alpha) <= p.delta) {
        throw invalid_input_error("predictor k_hat is not the smallest admissible index");
    }
}

}  // namespace

std::string predictor_to_json(const CertaintyPredictor& predictor) {
    validate_predictor(predictor);
    nlohmann::ordered_json doc;
    doc["alpha"] = predictor.alpha;
    doc["delta"] = predictor.delta;
    doc["n0"] = predictor.n0;
    doc["k_hat"] = predictor.k_hat;
    if (std::isinf(predictor.tau)) {
        doc["tau"] = "inf";
    } else {
        doc["tau"] = predictor.tau;
    }
    doc["function_id"] = to_string(predictor.function_id);
    doc["tool_version"] = kToolVersion;
    return doc.dump();
}

CertaintyPredictor predictor_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input_error(std::string("bad predictor document: ") + e.what());
    }
    try {
        CertaintyPredictor p;
        p.alpha = doc.at("alpha").get<double>();
        p.delta = doc.at("delta").get<double>();
        p.n0 = doc.at("n0").get<std::size_t>();
        p.k_hat = doc.at("k_hat").get<std::size_t>();
        const auto& tau = doc.at("tau");
        if (tau.is_string()) {
            if (tau.get<std::string>() != "inf") {
                throw invalid_input_error("predictor tau must be a number or \"inf\"");
            }
            p.tau = kInf;
        } else {
            p.tau = tau.get<double>();
        }
        p.function_id = score_function_from_string(doc.at("function_id").get<std::string>());
        validate_predictor(p);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input_error(std::string("bad predictor document: ") + e.what());
    }
}

void save_predictor(const std::filesystem::path& path, const CertaintyPredictor& predictor) {
    const std::string body = predictor_to_json(predictor) + "\n";
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        out << body;
        if (!out) throw io_error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

CertaintyPredictor load_predictor(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return predictor_from_json(text);
}

}  // namespace npcert
