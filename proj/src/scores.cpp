#include "npcert/scores.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "npcert/dataset_io.hpp"
#include "npcert/errors.hpp"
#include "npcert/linalg.hpp"

namespace npcert {

const char* to_string(ScoreFunction fn) {
    switch (fn) {
        case ScoreFunction::VE: return "ve";
        case ScoreFunction::SE: return "se";
        case ScoreFunction::KLE: return "kle";
    }
    throw invalid_input_error("unknown score function");
}

ScoreFunction score_function_from_string(std::string_view name) {
    if (name == "ve") return ScoreFunction::VE;
    if (name == "se") return ScoreFunction::SE;
    if (name == "kle") return ScoreFunction::KLE;
    throw invalid_input_error("unknown score function '" + std::string(name) +
                              "' (expected ve, se, or kle)");
}

namespace {

// Shared by VE and frequency-mode SE so the two code paths produce
// bit-identical sums: the counts are sorted before accumulating.
double entropy_from_counts(std::vector<std::size_t> counts, std::size_t total) {
    std::sort(counts.begin(), counts.end());
    double h = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / static_cast<double>(total);
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

}  // namespace

CertaintyScore vanilla_entropy(const std::vector<std::string>& answers) {
    if (answers.empty()) {
        throw invalid_input_error("vanilla_entropy requires at least one answer");
    }
    std::map<std::string, std::size_t> counts;
    for (const auto& answer : answers) ++counts[canonicalize(answer)];

    std::vector<std::size_t> freq;
    freq.reserve(counts.size());
    for (const auto& [text, count] : counts) freq.push_back(count);

    return {-entropy_from_counts(std::move(freq), answers.size()), ScoreFunction::VE,
            answers.size()};
}

CertaintyScore semantic_entropy(const std::vector<AnswerSample>& samples) {
    if (samples.empty()) {
        throw invalid_input_error("semantic_entropy requires at least one sample");
    }
    std::size_t with_logprob = 0;
    for (const auto& sample : samples) {
        if (!sample.cluster_id) {
            throw invalid_input_error("semantic_entropy requires a cluster_id on every sample");
        }
        if (*sample.cluster_id < 0) {
            throw invalid_input_error("cluster ids must be non-negative");
        }
        if (sample.log_prob) {
            if (*sample.log_prob > 0.0) {
                throw invalid_input_error("log probabilities must be <= 0");
            }
            ++with_logprob;
        }
    }
    if (with_logprob != 0 && with_logprob != samples.size()) {
        throw invalid_input_error(
            "semantic_entropy: either all samples carry log_prob or none do");
    }

    const std::size_t k = samples.size();
    double se = 0.0;
    if (with_logprob == 0) {
        // Frequency mode: cluster masses are frequencies and the score is the
        // predictive entropy of that distribution, which coincides with the
        // vanilla entropy whenever clusters are exactly the distinct answers.
        std::map<int, std::size_t> counts;
        for (const auto& sample : samples) ++counts[*sample.cluster_id];
        std::vector<std::size_t> freq;
        freq.reserve(counts.size());
        for (const auto& [id, count] : counts) freq.push_back(count);
        se = entropy_from_counts(std::move(freq), k);
    } else {
        // Probability mode: sum the sequence probabilities per cluster,
        // renormalize over the k samples, and average -ln mass across the
        // nonempty clusters. Per-cluster terms are sorted before every
        // summation so the score is exactly permutation-invariant.
        std::map<int, std::vector<double>> cluster_probs;
        for (const auto& sample : samples) {
            cluster_probs[*sample.cluster_id].push_back(std::exp(*sample.log_prob));
        }

        std::vector<double> masses;
        for (auto& [id, probs] : cluster_probs) {
            std::sort(probs.begin(), probs.end());
            double m = 0.0;
            for (double p : probs) m += p;
            if (m <= 0.0) {
                throw invalid_input_error("cluster " + std::to_string(id) +
                                          " has zero total probability mass");
            }
            masses.push_back(m);
        }
        std::sort(masses.begin(), masses.end());
        double total = 0.0;
        for (double m : masses) total += m;
        double sum_log = 0.0;
        for (double m : masses) sum_log += std::log(m / total);
        se = std::max(-sum_log / static_cast<double>(masses.size()), 0.0);
    }
    return {-se, ScoreFunction::SE, k};
}

SemanticKernel normalize_kernel(const std::vector<std::vector<double>>& raw) {
    const std::size_t n = raw.size();
    if (n == 0) throw invalid_input_error("kernel must be nonempty");
    for (const auto& row : raw) {
        if (row.size() != n) throw invalid_input_error("kernel must be square");
        for (double v : row) {
            if (!std::isfinite(v)) throw invalid_input_error("kernel entries must be finite");
        }
    }

    double max_abs = 0.0;
    for (const auto& row : raw)
        for (double v : row) max_abs = std::max(max_abs, std::fabs(v));
    if (max_abs == 0.0) throw invalid_input_error("kernel must not be all zero");

    std::vector<double> sym(n * n);
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            asym = std::max(asym, std::fabs(raw[i][j] - raw[j][i]));
            sym[i * n + j] = 0.5 * (raw[i][j] + raw[j][i]);
        }
    }
    if (asym > 1e-6) {
        throw invalid_input_error("kernel must be symmetric within 1e-6");
    }

    auto eigen = symmetric_eigen(sym, n, /*want_vectors=*/true);

    if (eigen.values.front() >= 0.0) {
        // Already PSD: a pure trace rescale keeps the entries exact.
        double trace = 0.0;
        for (std::size_t i = 0; i < n; ++i) trace += sym[i * n + i];
        if (!(trace > 0.0)) throw invalid_input_error("kernel trace must be positive");
        for (double& v : sym) v /= trace;
        return {n, std::move(sym)};
    }

    double trace = 0.0;
    for (double& lambda : eigen.values) {
        lambda = std::max(lambda, 0.0);
        trace += lambda;
    }
    if (!(trace > 0.0)) {
        throw invalid_input_error("kernel has no positive spectrum after clipping");
    }

    std::vector<double> out(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = eigen.values[j] / trace;
        if (w == 0.0) continue;
        for (std::size_t r = 0; r < n; ++r) {
            const double vr = eigen.vectors[r * n + j];
            for (std::size_t c = r; c < n; ++c) {
                out[r * n + c] += w * vr * eigen.vectors[c * n + j];
            }
        }
    }
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < r; ++c) out[r * n + c] = out[c * n + r];

    return {n, std::move(out)};
}

double von_neumann_entropy(const SemanticKernel& kernel) {
    if (kernel.dim == 0 || kernel.entries.size() != kernel.dim * kernel.dim) {
        throw invalid_input_error("kernel dimensions are inconsistent");
    }
    for (double v : kernel.entries) {
        if (!std::isfinite(v)) throw numeric_error("kernel entries must be finite");
    }
    auto eigen = symmetric_eigen(kernel.entries, kernel.dim, /*want_vectors=*/false);

    double vne = 0.0;
    for (double lambda : eigen.values) {
        if (lambda < 1e-12) continue;  // 0 ln 0 = 0
        vne -= lambda * std::log(lambda);
    }
    return std::max(vne, 0.0);
}

CertaintyScore kernel_language_entropy(const SemanticKernel& kernel) {
    return {-von_neumann_entropy(kernel), ScoreFunction::KLE, kernel.dim};
}

CertaintyScore score_record(const QuestionRecord& record, ScoreFunction fn) {
    switch (fn) {
        case ScoreFunction::VE: {
            if (record.answers.empty()) {
                throw invalid_input_error("record '" + record.id +
                                          "': answers required for the ve score");
            }
            std::vector<std::string> texts;
            texts.reserve(record.answers.size());
            for (const auto& sample : record.answers) texts.push_back(sample.text);
            return vanilla_entropy(texts);
        }
        case ScoreFunction::SE: {
            if (record.answers.empty()) {
                throw invalid_input_error("record '" + record.id +
                                          "': answers required for the se score");
            }
            for (const auto& sample : record.answers) {
                if (!sample.cluster_id) {
                    throw invalid_input_error("record '" + record.id +
                                              "': clusters required for the se score");
                }
            }
            return semantic_entropy(record.answers);
        }
        case ScoreFunction::KLE: {
            if (!record.kernel) {
                throw invalid_input_error("record '" + record.id +
                                          "': kernel required for the kle score");
            }
            return kernel_language_entropy(normalize_kernel(*record.kernel));
        }
    }
    throw invalid_input_error("unknown score function");
}

std::vector<int> exact_match_cluster_ids(const std::vector<std::string>& answers) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(answers.size());
    int next = 0;
    for (const auto& answer : answers) {
        const std::string key = canonicalize(answer);
        auto [it, inserted] = ids.try_emplace(key, next);
        if (inserted) ++next;
        out.push_back(it->second);
    }
    return out;
}

}  // namespace npcert
