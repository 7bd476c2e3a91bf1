#include "npcert/dataset_io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "npcert/errors.hpp"

namespace npcert {

namespace {

bool is_space_byte(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct_byte(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

std::string lower_collapse(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (is_space_byte(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return out;
}

std::string strip_edge_punct(std::string s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && is_punct_byte(s[begin])) ++begin;
    while (end > begin && is_punct_byte(s[end - 1])) --end;
    return s.substr(begin, end - begin);
}

std::string strip_leading_article(std::string s) {
    for (const char* article : {"a ", "an ", "the "}) {
        const std::size_t len = std::char_traits<char>::length(article);
        if (s.size() > len && s.compare(0, len, article) == 0) {
            return s.substr(len);
        }
    }
    return s;
}

}  // namespace

std::string canonicalize(std::string_view text) {
    std::string cur = lower_collapse(text);
    // Punctuation stripping can expose new edge whitespace or another leading
    // article, so iterate to a fixed point; that also makes the map idempotent
    // by construction.
    for (;;) {
        std::string next = strip_leading_article(strip_edge_punct(lower_collapse(cur)));
        if (next == cur) return cur;
        cur = std::move(next);
    }
}

int label_correctness(const std::string& generated, const std::vector<std::string>& reference) {
    if (reference.empty()) {
        throw invalid_input_error("label_correctness requires a nonempty reference list");
    }
    const std::string g = canonicalize(generated);
    for (const auto& r : reference) {
        if (g == canonicalize(r)) return 1;
    }
    return 0;
}

int effective_label(const QuestionRecord& record) {
    if (record.label) return *record.label;
    if (record.reference.empty()) {
        throw invalid_input_error("record '" + record.id +
                                  "' has no label and an empty reference list");
    }
    return label_correctness(record.generated, record.reference);
}

SplitResult split_certain_uncertain(const std::vector<QuestionRecord>& records) {
    SplitResult result;
    for (const auto& record : records) {
        (effective_label(record) == 1 ? result.certain_ids : result.uncertain_ids)
            .push_back(record.id);
    }
    return result;
}

namespace {

QuestionRecord record_from_json(const nlohmann::json& doc, std::size_t lineno) {
    if (!doc.is_object()) throw parse_error(lineno, "record must be a JSON object");

    QuestionRecord record;
    try {
        record.id = doc.at("id").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw parse_error(lineno, "record needs a string 'id'");
    }
    if (record.id.empty()) throw parse_error(lineno, "record id must be nonempty");

    try {
        if (doc.contains("question")) record.question = doc.at("question").get<std::string>();
        if (doc.contains("generated")) record.generated = doc.at("generated").get<std::string>();

        std::vector<std::string> answers;
        if (doc.contains("answers")) {
            answers = doc.at("answers").get<std::vector<std::string>>();
        }
        std::vector<double> logprobs;
        if (doc.contains("answer_logprobs")) {
            logprobs = doc.at("answer_logprobs").get<std::vector<double>>();
            if (logprobs.size() != answers.size()) {
                throw parse_error(lineno, "answer_logprobs length must match answers");
            }
            for (double lp : logprobs) {
                if (std::isnan(lp) || lp > 0.0) {
                    throw parse_error(lineno, "answer_logprobs entries must be <= 0");
                }
            }
        }
        std::vector<int> clusters;
        if (doc.contains("clusters")) {
            clusters = doc.at("clusters").get<std::vector<int>>();
            if (clusters.size() != answers.size()) {
                throw parse_error(lineno, "clusters length must match answers");
            }
            for (int c : clusters) {
                if (c < 0) throw parse_error(lineno, "cluster ids must be non-negative");
            }
        }
        record.answers.reserve(answers.size());
        for (std::size_t i = 0; i < answers.size(); ++i) {
            AnswerSample sample;
            sample.text = std::move(answers[i]);
            if (!logprobs.empty()) sample.log_prob = logprobs[i];
            if (!clusters.empty()) sample.cluster_id = clusters[i];
            record.answers.push_back(std::move(sample));
        }

        if (doc.contains("kernel")) {
            auto kernel = doc.at("kernel").get<std::vector<std::vector<double>>>();
            if (kernel.empty()) throw parse_error(lineno, "kernel must be nonempty");
            for (const auto& row : kernel) {
                if (row.size() != kernel.size()) {
                    throw parse_error(lineno, "kernel must be square");
                }
            }
            if (!record.answers.empty() && kernel.size() != record.answers.size()) {
                throw parse_error(lineno, "kernel dimension must match the answer count");
            }
            record.kernel = std::move(kernel);
        }

        if (doc.contains("reference")) {
            record.reference = doc.at("reference").get<std::vector<std::string>>();
        }
        if (doc.contains("label")) {
            const int label = doc.at("label").get<int>();
            if (label != 0 && label != 1) throw parse_error(lineno, "label must be 0 or 1");
            record.label = label;
        }
    } catch (const nlohmann::json::exception& e) {
        throw parse_error(lineno, std::string("bad field type: ") + e.what());
    }
    return record;
}

}  // namespace

std::vector<QuestionRecord> load_records(std::istream& in) {
    std::vector<QuestionRecord> records;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw parse_error(lineno, std::string("invalid JSON: ") + e.what());
        }
        QuestionRecord record = record_from_json(doc, lineno);
        if (!seen_ids.insert(record.id).second) {
            throw parse_error(lineno, "duplicate record id '" + record.id + "'");
        }
        records.push_back(std::move(record));
    }
    return records;
}

std::vector<QuestionRecord> load_records_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");
    return load_records(in);
}

void save_records(std::ostream& out, const std::vector<QuestionRecord>& records) {
    for (const auto& record : records) {
        nlohmann::ordered_json doc;
        doc["id"] = record.id;
        doc["question"] = record.question;
        doc["generated"] = record.generated;

        std::vector<std::string> answers;
        std::size_t with_logprob = 0, with_cluster = 0;
        for (const auto& s : record.answers) {
            answers.push_back(s.text);
            if (s.log_prob) ++with_logprob;
            if (s.cluster_id) ++with_cluster;
        }
        doc["answers"] = answers;
        if (with_logprob == record.answers.size() && with_logprob > 0) {
            std::vector<double> logprobs;
            for (const auto& s : record.answers) logprobs.push_back(*s.log_prob);
            doc["answer_logprobs"] = logprobs;
        } else if (with_logprob > 0) {
            throw invalid_input_error("record '" + record.id +
                                      "' mixes samples with and without log_prob");
        }
        if (with_cluster == record.answers.size() && with_cluster > 0) {
            std::vector<int> clusters;
            for (const auto& s : record.answers) clusters.push_back(*s.cluster_id);
            doc["clusters"] = clusters;
        } else if (with_cluster > 0) {
            throw invalid_input_error("record '" + record.id +
                                      "' mixes samples with and without cluster_id");
        }
        if (record.kernel) doc["kernel"] = *record.kernel;
        doc["reference"] = record.reference;
        if (record.label) doc["label"] = *record.label;

        out << doc.dump() << '\n';
    }
}

void save_records_file(const std::filesystem::path& path,
                       const std::vector<QuestionRecord>& records) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        save_records(out, records);
        if (!out) throw io_error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace npcert
