#include "npcert/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "npcert/errors.hpp"

namespace npcert {

EvaluationReport evaluate(const CertaintyPredictor& predictor,
                          const std::vector<EvaluationSample>& labeled) {
    if (labeled.empty()) {
        throw invalid_input_error("evaluate requires a nonempty labeled set");
    }

    std::size_t answered = 0, answered_correct = 0;
    std::size_t neg = 0, neg_answered = 0;
    std::size_t pos = 0, pos_abstained = 0;
    for (const auto& sample : labeled) {
        if (sample.y != 0 && sample.y != 1) throw invalid_input_error("y must be 0 or 1");
        if (sample.correct != 0 && sample.correct != 1) {
            throw invalid_input_error("correct must be 0 or 1");
        }
        const bool ans = predict(predictor, sample.eta) == Decision::Certain;
        if (ans) {
            ++answered;
            if (sample.correct == 1) ++answered_correct;
        }
        if (sample.y == 0) {
            ++neg;
            if (ans) ++neg_answered;
        } else {
            ++pos;
            if (!ans) ++pos_abstained;
        }
    }

    EvaluationReport report;
    report.n_total = labeled.size();
    report.n_answered = answered;
    if (answered > 0) {
        report.accuracy_answered =
            static_cast<double>(answered_correct) / static_cast<double>(answered);
    }
    if (neg > 0) report.fpr = static_cast<double>(neg_answered) / static_cast<double>(neg);
    if (pos > 0) report.fnr = static_cast<double>(pos_abstained) / static_cast<double>(pos);
    report.answer_rate = static_cast<double>(answered) / static_cast<double>(report.n_total);
    return report;
}

std::vector<CurvePoint> fpr_alpha_curve(const std::vector<double>& cal_scores,
                                        const std::vector<EvaluationSample>& test,
                                        const std::vector<double>& alphas, double delta) {
    if (alphas.empty()) throw invalid_input_error("alpha grid must be nonempty");
    for (std::size_t i = 0; i < alphas.size(); ++i) {
        if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) {
            throw invalid_input_error("alpha grid values must lie in (0,1)");
        }
        if (i > 0 && !(alphas[i] > alphas[i - 1])) {
            throw invalid_input_error("alpha grid must be strictly ascending");
        }
    }
    const bool any_negative =
        std::any_of(test.begin(), test.end(), [](const auto& s) { return s.y == 0; });
    if (!any_negative) {
        throw invalid_input_error("fpr_alpha_curve needs at least one y = 0 test item");
    }

    std::vector<CurvePoint> curve;
    curve.reserve(alphas.size());
    for (double alpha : alphas) {
        CalibrationInput input{cal_scores, alpha, delta};
        const auto predictor = calibrate(input, ScoreFunction::VE);
        const auto report = evaluate(predictor, test);
        curve.push_back({alpha, *report.fpr});
    }
    return curve;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& token, std::size_t lineno) {
    double v = 0.0;
    const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        throw parse_error(lineno, "bad numeric cell '" + token + "'");
    }
    return v;
}

}  // namespace

void write_curve_table(const std::filesystem::path& path, const CurveTable& table) {
    if (table.columns.empty() || table.rows.empty()) {
        throw invalid_input_error("refusing to write an empty curve table");
    }
    for (const auto& row : table.rows) {
        if (row.size() != table.columns.size()) {
            throw invalid_input_error("curve row width does not match the header");
        }
    }

    std::ostringstream body;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        if (c) body << '\t';
        body << table.columns[c];
    }
    body << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) body << '\t';
            body << format_double(row[c]);
        }
        body << '\n';
    }

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        out << body.str();
        if (!out) throw io_error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

CurveTable read_curve_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open '" + path.string() + "'");

    CurveTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, '\t')) cells.push_back(cell);
        if (lineno == 1) {
            table.columns = cells;
            continue;
        }
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, lineno));
        if (row.size() != table.columns.size()) {
            throw parse_error(lineno, "row width does not match the header");
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) throw invalid_input_error("curve table has no header");
    return table;
}

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json doc;
    doc["n_total"] = report.n_total;
    doc["n_answered"] = report.n_answered;
    doc["accuracy_answered"] =
        report.accuracy_answered ? nlohmann::json(*report.accuracy_answered) : nlohmann::json();
    doc["fpr"] = report.fpr ? nlohmann::json(*report.fpr) : nlohmann::json();
    doc["fnr"] = report.fnr ? nlohmann::json(*report.fnr) : nlohmann::json();
    doc["answer_rate"] = report.answer_rate;
    return doc.dump();
}

EvaluationReport report_from_json(const std::string& text) {
    try {
        const auto doc = nlohmann::json::parse(text);
        EvaluationReport report;
        report.n_total = doc.at("n_total").get<std::size_t>();
        report.n_answered = doc.at("n_answered").get<std::size_t>();
        if (!doc.at("accuracy_answered").is_null()) {
            report.accuracy_answered = doc.at("accuracy_answered").get<double>();
        }
        if (!doc.at("fpr").is_null()) report.fpr = doc.at("fpr").get<double>();
        if (!doc.at("fnr").is_null()) report.fnr = doc.at("fnr").get<double>();
        report.answer_rate = doc.at("answer_rate").get<double>();
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw invalid_input_error(std::string("bad report document: ") + e.what());
    }
}

}  // namespace npcert
