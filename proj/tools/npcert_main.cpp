// npcert command-line front end: ingestion -> scoring -> calibration ->
// prediction -> evaluation -> simulation.
//
// Exit codes: 0 success, 2 input validation failure, 3 numeric failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "npcert/calibration.hpp"
#include "npcert/dataset_io.hpp"
#include "npcert/errors.hpp"
#include "npcert/evaluation.hpp"
#include "npcert/scores.hpp"
#include "npcert/shift.hpp"
#include "npcert/simulation.hpp"
#include "npcert/version.hpp"

namespace {

using namespace npcert;

constexpr const char* kRefusalMarker = "I-REFUSE-TO-ANSWER";

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

struct CommonOptions {
    std::string records_path;
    std::string out_path;
    double alpha = 0.05;
    double delta = 0.05;
    std::string score_fn = "ve";
    std::uint64_t seed = 42;
    int expect_k = 0;  // 0: no check
};

// Flag ranges are rejected before any file is touched.
void validate_levels(double alpha, double delta) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw invalid_input_error("--alpha must lie strictly inside (0,1)");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw invalid_input_error("--delta must lie strictly inside (0,1)");
    }
}

void validate_gamma(double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw invalid_input_error("--gamma must lie in (0,1]");
    }
}

void write_text_atomic(const std::filesystem::path& path, const std::string& body) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw io_error("cannot open '" + tmp.string() + "' for writing");
        out << body;
        if (!out) throw io_error("failed writing '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void check_expected_k(const std::vector<QuestionRecord>& records, int expect_k) {
    if (expect_k <= 0) return;
    for (const auto& r : records) {
        if (r.answers.size() != static_cast<std::size_t>(expect_k)) {
            throw invalid_input_error("record '" + r.id + "' has " +
                                      std::to_string(r.answers.size()) + " answers, expected " +
                                      std::to_string(expect_k));
        }
    }
}

// Scores of the uncertain (y = 0) records, in file order.
std::vector<double> uncertain_scores(const std::vector<QuestionRecord>& records,
                                     ScoreFunction fn) {
    std::vector<double> scores;
    for (const auto& record : records) {
        if (effective_label(record) == 0) {
            scores.push_back(score_record(record, fn).value);
        }
    }
    return scores;
}

void print_predictor_summary(const CertaintyPredictor& p) {
    std::cout << "n0: " << p.n0 << "\nk_hat: " << p.k_hat << "\ntau: ";
    if (std::isinf(p.tau)) {
        std::cout << "inf";
    } else {
        std::cout << p.tau;
    }
    std::cout << "\n";
    if (std::isinf(p.tau)) {
        std::cout << "warning: calibration set too small for (alpha, delta); "
                     "the predictor abstains on every question\n";
    }
}

int cmd_calibrate(const CommonOptions& opt) {
    validate_levels(opt.alpha, opt.delta);
    const auto records = load_records_file(opt.records_path);
    check_expected_k(records, opt.expect_k);
    const auto fn = score_function_from_string(opt.score_fn);
    const auto predictor = calibrate({uncertain_scores(records, fn), opt.alpha, opt.delta}, fn);
    save_predictor(opt.out_path, predictor);
    print_predictor_summary(predictor);
    return kExitOk;
}

int cmd_predict(const std::string& predictor_path, const CommonOptions& opt) {
    const auto predictor = load_predictor(predictor_path);
    const auto records = load_records_file(opt.records_path);

    std::ostringstream body;
    for (const auto& record : records) {
        const double eta = score_record(record, predictor.function_id).value;
        const bool certain = predict(predictor, eta) == Decision::Certain;
        nlohmann::ordered_json line;
        line["id"] = record.id;
        line["eta"] = eta;
        line["decision"] = certain ? "certain" : "uncertain";
        line["output"] = certain ? record.generated : std::string(kRefusalMarker);
        body << line.dump() << '\n';
    }
    write_text_atomic(opt.out_path, body.str());
    std::cout << "decisions: " << records.size() << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::string& predictor_path, const CommonOptions& opt) {
    const auto predictor = load_predictor(predictor_path);
    const auto records = load_records_file(opt.records_path);
    if (records.empty()) throw invalid_input_error("records file is empty");

    std::vector<EvaluationSample> samples;
    samples.reserve(records.size());
    for (const auto& record : records) {
        const int y = effective_label(record);
        const double eta = score_record(record, predictor.function_id).value;
        samples.push_back({eta, y, y});
    }
    const auto report = evaluate(predictor, samples);
    write_text_atomic(opt.out_path, report_to_json(report) + "\n");
    std::cout << report_to_json(report) << "\n";
    return kExitOk;
}

int cmd_shift_calibrate(const CommonOptions& opt, const std::string& ratios_path,
                        const std::string& source_features_path,
                        const std::string& target_features_path, double gamma,
                        std::optional<double> bound_b, const DiscriminatorConfig& dr) {
    validate_levels(opt.alpha, opt.delta);
    validate_gamma(gamma);
    const auto records = load_records_file(opt.records_path);
    check_expected_k(records, opt.expect_k);
    const auto fn = score_function_from_string(opt.score_fn);

    // Per-record ratios, aligned with the records file, then restricted to
    // the uncertain subset actually used for calibration.
    std::vector<double> record_ratios;
    if (!ratios_path.empty()) {
        record_ratios = load_ratio_file(ratios_path);
        if (record_ratios.size() != records.size()) {
            throw invalid_input_error("ratio file has " + std::to_string(record_ratios.size()) +
                                      " values for " + std::to_string(records.size()) +
                                      " records");
        }
    } else {
        const auto source = load_feature_matrix(source_features_path);
        const auto target = load_feature_matrix(target_features_path);
        if (source.size() != records.size()) {
            throw invalid_input_error("feature matrix has " + std::to_string(source.size()) +
                                      " rows for " + std::to_string(records.size()) + " records");
        }
        if (source.empty() || target.empty()) {
            throw invalid_input_error("feature files must be nonempty");
        }
        DiscriminatorConfig config = dr;
        config.feature_dim = source.front().size();
        const auto model = estimate_density_ratio(source, target, config);
        record_ratios.reserve(source.size());
        for (const auto& row : source) record_ratios.push_back(model.ratio(row));
    }

    ShiftConfig config;
    config.gamma = gamma;
    config.bound_b = bound_b;
    config.seed = opt.seed;
    std::vector<double> scores;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (effective_label(records[i]) == 0) {
            scores.push_back(score_record(records[i], fn).value);
            config.ratios.push_back(record_ratios[i]);
        }
    }

    std::cout << "seed: " << opt.seed << "\n";
    const auto result = calibrate_under_shift(scores, config, opt.alpha, opt.delta, fn);
    save_predictor(opt.out_path, result.predictor);
    std::cout << "bound_b: " << result.bound_b << "\naccepted: " << result.accepted_count
              << " of " << scores.size() << "\n";
    if (result.empty_acceptance) {
        std::cout << "warning: rejection sampling accepted no records; "
                     "the predictor abstains on every question\n";
    }
    print_predictor_summary(result.predictor);
    return kExitOk;
}

struct SimulateOptions {
    std::string kind = "type1";
    std::string p0 = "uniform";
    std::string p1 = "beta:2,1";
    std::string source = "uniform";
    std::string target = "beta:2,1";
    double p_y = 0.5;
    double tau_oracle = std::numeric_limits<double>::quiet_NaN();
    std::size_t n0 = 1000;
    std::vector<std::size_t> n0_grid{100, 1000, 10000};
    double alpha = 0.05;
    double delta = 0.05;
    double gamma = 0.9;
    double bound_b = 0.0;  // 0: derive from gamma quantile
    bool unit_ratios = false;
    std::size_t trials = 2000;
    std::uint64_t seed = 42;
    std::string out_path;
};

int cmd_simulate(const SimulateOptions& opt) {
    validate_levels(opt.alpha, opt.delta);
    validate_gamma(opt.gamma);
    std::cout << "seed: " << opt.seed << "\n";
    if (opt.kind == "type1") {
        SyntheticWorld world;
        world.p0 = parse_law(opt.p0);
        world.p1 = parse_law(opt.p1);
        world.p_y = opt.p_y;
        if (!std::isnan(opt.tau_oracle)) world.tau_oracle = opt.tau_oracle;
        const auto report =
            run_type1_trials(world, opt.n0, opt.alpha, opt.delta, opt.trials, opt.seed);
        write_text_atomic(opt.out_path, trial_report_to_json(report) + "\n");
        std::cout << trial_report_to_json(report) << "\n";
        return kExitOk;
    }
    if (opt.kind == "type2") {
        SyntheticWorld world;
        world.p0 = parse_law(opt.p0);
        world.p1 = parse_law(opt.p1);
        world.p_y = opt.p_y;
        if (std::isnan(opt.tau_oracle)) {
            throw invalid_input_error("simulate type2 requires --tau-oracle");
        }
        world.tau_oracle = opt.tau_oracle;
        const auto rows =
            run_type2_study(world, opt.n0_grid, opt.alpha, opt.delta, opt.trials, opt.seed);
        CurveTable table;
        table.columns = {"n0", "median_type2_excess"};
        for (const auto& row : rows) {
            table.rows.push_back({static_cast<double>(row.n0), row.median_excess});
        }
        write_curve_table(opt.out_path, table);
        for (const auto& row : rows) {
            std::cout << "n0 " << row.n0 << ": median excess " << row.median_excess << "\n";
        }
        return kExitOk;
    }
    if (opt.kind == "shift") {
        ShiftWorld world;
        world.source = parse_law(opt.source);
        world.target = parse_law(opt.target);
        world.gamma = opt.gamma;
        if (opt.bound_b > 0.0) world.bound_b = opt.bound_b;
        if (opt.unit_ratios) {
            world.ratio = [](double) { return 1.0; };
            if (!world.bound_b) world.bound_b = 1.0;
        }
        const auto report =
            run_shift_trials(world, opt.n0, opt.alpha, opt.delta, opt.trials, opt.seed);
        write_text_atomic(opt.out_path, trial_report_to_json(report) + "\n");
        std::cout << trial_report_to_json(report) << "\n";
        return kExitOk;
    }
    throw invalid_input_error("unknown simulate kind '" + opt.kind +
                              "' (expected type1, type2, or shift)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distribution-free certainty calibration for selective question answering"};
    app.set_version_flag("--version", npcert::kToolVersion);
    // key = value lines; prefix keys with the subcommand, either as a
    // "[simulate]" section header or dotted ("simulate.trials = 100").
    app.set_config("--config", "", "Key = value config file");
    app.require_subcommand(1);

    CommonOptions common;
    std::string predictor_path;

    auto* cal = app.add_subcommand(
        "calibrate", "Select the answer/abstain threshold from labeled records");
    cal->add_option("--records", common.records_path, "Records file (JSON lines)")
        ->required();
    cal->add_option("--alpha", common.alpha, "Type I error cap, in (0,1)")->required();
    cal->add_option("--delta", common.delta, "Chance of exceeding the cap, in (0,1)")
        ->default_val(0.05);
    cal->add_option("--score-fn", common.score_fn, "Certainty score: ve, se, or kle")
        ->default_val("ve");
    cal->add_option("--expect-k", common.expect_k, "Require this many answer samples per record");
    cal->add_option("--out", common.out_path, "Predictor output path")->required();

    auto* pred = app.add_subcommand("predict", "Apply a saved predictor to records");
    pred->add_option("--predictor", predictor_path, "Predictor file")->required();
    pred->add_option("--records", common.records_path, "Records file (JSON lines)")->required();
    pred->add_option("--out", common.out_path, "Decisions output path")->required();

    auto* eval = app.add_subcommand("evaluate", "Score a predictor on labeled records");
    eval->add_option("--predictor", predictor_path, "Predictor file")->required();
    eval->add_option("--records", common.records_path, "Records file (JSON lines)")->required();
    eval->add_option("--out", common.out_path, "Report output path")->required();

    std::string ratios_path, source_features_path, target_features_path;
    double gamma = 0.9;
    double bound_b = 0.0;
    DiscriminatorConfig dr;
    auto* shift = app.add_subcommand(
        "shift-calibrate", "Calibrate under covariate shift via rejection sampling");
    shift->add_option("--records", common.records_path, "Records file (JSON lines)")->required();
    shift->add_option("--alpha", common.alpha, "Type I error cap, in (0,1)")->required();
    shift->add_option("--delta", common.delta, "Chance of exceeding the cap, in (0,1)")
        ->default_val(0.05);
    shift->add_option("--score-fn", common.score_fn, "Certainty score: ve, se, or kle")
        ->default_val("ve");
    shift->add_option("--expect-k", common.expect_k,
                      "Require this many answer samples per record");
    shift->add_option("--ratios", ratios_path,
                      "Density ratio file, one value per record line");
    shift->add_option("--source-features", source_features_path,
                      "Feature matrix for the records (rows aligned)");
    shift->add_option("--target-features", target_features_path,
                      "Feature matrix sampled from the target domain");
    shift->add_option("--gamma", gamma, "Quantile level for the ratio bound B")
        ->default_val(0.9);
    shift->add_option("--bound-b", bound_b, "Explicit ratio bound B (overrides --gamma)");
    shift->add_option("--dr-learning-rate", dr.learning_rate, "Discriminator learning rate")
        ->default_val(0.1);
    shift->add_option("--dr-epochs", dr.epochs, "Discriminator epochs")->default_val(500);
    shift->add_option("--dr-l2", dr.l2, "Discriminator L2 penalty")->default_val(0.0);
    shift->add_option("--seed", common.seed, "Rejection sampling seed")->default_val(42);
    shift->add_option("--out", common.out_path, "Predictor output path")->required();

    SimulateOptions sim;
    auto* simulate = app.add_subcommand(
        "simulate", "Monte Carlo checks of the error guarantees on synthetic worlds");
    simulate->add_option("--kind", sim.kind, "type1, type2, or shift")->default_val("type1");
    simulate->add_option("--p0", sim.p0, "Uncertain-class score law")->default_val("uniform");
    simulate->add_option("--p1", sim.p1, "Certain-class score law")->default_val("beta:2,1");
    simulate->add_option("--p-y", sim.p_y, "Marginal probability of the certain class")
        ->default_val(0.5);
    simulate->add_option("--tau-oracle", sim.tau_oracle,
                         "Oracle threshold for the chosen alpha (type2)");
    simulate->add_option("--source", sim.source, "Shift source law")->default_val("uniform");
    simulate->add_option("--target", sim.target, "Shift target law")->default_val("beta:2,1");
    simulate->add_option("--n0", sim.n0, "Calibration size per trial")->default_val(1000);
    simulate->add_option("--n0-grid", sim.n0_grid, "Calibration sizes for type2")
        ->delimiter(',');
    simulate->add_option("--alpha", sim.alpha, "Type I error cap")->default_val(0.05);
    simulate->add_option("--delta", sim.delta, "Chance of exceeding the cap")->default_val(0.05);
    simulate->add_option("--gamma", sim.gamma, "Quantile level for the ratio bound")
        ->default_val(0.9);
    simulate->add_option("--bound-b", sim.bound_b, "Explicit ratio bound (shift)");
    simulate->add_flag("--unit-ratios", sim.unit_ratios,
                       "Negative control: pretend there is no shift");
    simulate->add_option("--trials", sim.trials, "Monte Carlo trials")->default_val(2000);
    simulate->add_option("--seed", sim.seed, "Trial seed")->default_val(42);
    simulate->add_option("--out", sim.out_path, "Report or curve output path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitInput;
    }

    try {
        if (cal->parsed()) return cmd_calibrate(common);
        if (pred->parsed()) return cmd_predict(predictor_path, common);
        if (eval->parsed()) return cmd_evaluate(predictor_path, common);
        if (shift->parsed()) {
            const bool have_ratios = !ratios_path.empty();
            const bool any_features =
                !source_features_path.empty() || !target_features_path.empty();
            const bool have_features =
                !source_features_path.empty() && !target_features_path.empty();
            if (have_ratios ? any_features : !have_features) {
                throw npcert::invalid_input_error(
                    "provide either --ratios or both --source-features and --target-features");
            }
            std::optional<double> b;
            if (bound_b > 0.0) b = bound_b;
            return cmd_shift_calibrate(common, ratios_path, source_features_path,
                                       target_features_path, gamma, b, dr);
        }
        if (simulate->parsed()) return cmd_simulate(sim);
        return kExitInput;
    } catch (const npcert::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const npcert::invalid_input_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    } catch (const npcert::numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const npcert::io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
