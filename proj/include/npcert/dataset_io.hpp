#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "npcert/scores.hpp"

namespace npcert {

// One question with its evaluated answer, the k resamples used for scoring,
// optional precomputed kernel, reference answers, and an optional explicit
// label (which overrides reference-based alignment).
struct QuestionRecord {
    std::string id;
    std::string question;
    std::string generated;
    std::vector<AnswerSample> answers;
    std::optional<std::vector<std::vector<double>>> kernel;
    std::vector<std::string> reference;
    std::optional<int> label;

    bool operator==(const QuestionRecord&) const = default;
};

struct SplitResult {
    std::vector<std::string> certain_ids;    // y = 1
    std::vector<std::string> uncertain_ids;  // y = 0
};

// Lowercase, collapse whitespace, strip surrounding punctuation and leading
// English articles ("a", "an", "the"). Idempotent.
std::string canonicalize(std::string_view text);

// 1 iff the canonicalized generation matches any canonicalized reference.
int label_correctness(const std::string& generated, const std::vector<std::string>& reference);

// Explicit label when present, otherwise alignment against the references.
int effective_label(const QuestionRecord& record);

SplitResult split_certain_uncertain(const std::vector<QuestionRecord>& records);

// Line-delimited JSON records. Unknown fields are ignored; malformed lines
// raise parse_error carrying the line number.
std::vector<QuestionRecord> load_records(std::istream& in);
std::vector<QuestionRecord> load_records_file(const std::filesystem::path& path);

void save_records(std::ostream& out, const std::vector<QuestionRecord>& records);
void save_records_file(const std::filesystem::path& path, const std::vector<QuestionRecord>& records);

}  // namespace npcert
