#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace npcert {

struct QuestionRecord;  // dataset_io.hpp

enum class ScoreFunction { VE, SE, KLE };

const char* to_string(ScoreFunction fn);
ScoreFunction score_function_from_string(std::string_view name);

// One sampled answer. log_prob is the natural-log sequence probability of the
// whole answer; cluster_id indexes a semantic equivalence class.
struct AnswerSample {
    std::string text;
    std::optional<double> log_prob;
    std::optional<int> cluster_id;

    bool operator==(const AnswerSample&) const = default;
};

// Symmetric PSD unit-trace kernel over k sampled answers, row-major.
struct SemanticKernel {
    std::size_t dim = 0;
    std::vector<double> entries;

    double at(std::size_t i, std::size_t j) const { return entries[i * dim + j]; }
};

// Certainty eta = -entropy, so larger means more certain and 0 means the
// sampled answers carry no dispersion at all.
struct CertaintyScore {
    double value = 0.0;
    ScoreFunction function_id = ScoreFunction::VE;
    std::size_t k_samples = 0;
};

// Entropy of the empirical frequency distribution over distinct canonicalized
// answers, negated. Natural log.
CertaintyScore vanilla_entropy(const std::vector<std::string>& answers);

// Entropy over semantic clusters, negated. With per-sample log probabilities
// the cluster masses are renormalized summed probabilities and the score is
// the mean negative log mass over nonempty clusters; without them the cluster
// masses are frequencies and the score is the predictive entropy of that
// frequency distribution (the same quantity vanilla_entropy computes when
// every cluster is a single distinct answer).
CertaintyScore semantic_entropy(const std::vector<AnswerSample>& samples);

// Symmetrize, clip negative eigenvalues to zero, rescale to unit trace.
SemanticKernel normalize_kernel(const std::vector<std::vector<double>>& raw);

// Von Neumann entropy -Tr[K ln K] by eigendecomposition; eigenvalues below
// 1e-12 contribute nothing (0 ln 0 = 0).
double von_neumann_entropy(const SemanticKernel& kernel);

CertaintyScore kernel_language_entropy(const SemanticKernel& kernel);

// Dispatch on the record's fields; throws invalid_input_error naming the
// missing field when the record cannot support the requested function.
CertaintyScore score_record(const QuestionRecord& record, ScoreFunction fn);

// Degraded clustering fallback: one cluster per distinct canonicalized answer,
// ids in order of first appearance.
std::vector<int> exact_match_cluster_ids(const std::vector<std::string>& answers);

}  // namespace npcert
