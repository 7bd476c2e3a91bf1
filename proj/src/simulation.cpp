#include "npcert/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "npcert/errors.hpp"
#include "npcert/rng.hpp"
#include "npcert/shift.hpp"

namespace npcert {

// ---------------------------------------------------------------------------
// BigUint / ExactRational
// ---------------------------------------------------------------------------

BigUint::BigUint(std::uint64_t value) {
    while (value != 0) {
        limbs_.push_back(static_cast<std::uint32_t>(value & 0xFFFFFFFFULL));
        value >>= 32;
    }
}

BigUint BigUint::pow(std::uint64_t base, unsigned exponent) {
    BigUint result(1);
    for (unsigned i = 0; i < exponent; ++i) result.mul_small(base);
    return result;
}

BigUint& BigUint::operator+=(const BigUint& other) {
    const std::size_t n = std::max(limbs_.size(), other.limbs_.size());
    limbs_.resize(n, 0);
    std::uint64_t carry = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::uint64_t sum = carry + limbs_[i];
        if (i < other.limbs_.size()) sum += other.limbs_[i];
        limbs_[i] = static_cast<std::uint32_t>(sum & 0xFFFFFFFFULL);
        carry = sum >> 32;
    }
    if (carry) limbs_.push_back(static_cast<std::uint32_t>(carry));
    return *this;
}

BigUint& BigUint::mul_small(std::uint64_t factor) {
    if (factor >= (1ULL << 32)) {
        throw invalid_input_error("BigUint::mul_small factor must fit in 32 bits");
    }
    if (factor == 0 || limbs_.empty()) {
        limbs_.clear();
        return *this;
    }
    std::uint64_t carry = 0;
    for (auto& limb : limbs_) {
        const std::uint64_t prod = static_cast<std::uint64_t>(limb) * factor + carry;
        limb = static_cast<std::uint32_t>(prod & 0xFFFFFFFFULL);
        carry = prod >> 32;
    }
    while (carry) {
        limbs_.push_back(static_cast<std::uint32_t>(carry & 0xFFFFFFFFULL));
        carry >>= 32;
    }
    return *this;
}

long double BigUint::to_long_double() const {
    long double value = 0.0L;
    for (auto it = limbs_.rbegin(); it != limbs_.rend(); ++it) {
        value = value * 4294967296.0L + static_cast<long double>(*it);
    }
    return value;
}

std::string BigUint::to_decimal_string() const {
    if (limbs_.empty()) return "0";
    std::vector<std::uint32_t> work = limbs_;
    std::string digits;
    while (!work.empty()) {
        std::uint64_t rem = 0;
        for (std::size_t i = work.size(); i-- > 0;) {
            const std::uint64_t cur = (rem << 32) | work[i];
            work[i] = static_cast<std::uint32_t>(cur / 10);
            rem = cur % 10;
        }
        digits.push_back(static_cast<char>('0' + rem));
        while (!work.empty() && work.back() == 0) work.pop_back();
    }
    return std::string(digits.rbegin(), digits.rend());
}

double ExactRational::to_double() const {
    if (den.is_zero()) throw numeric_error("rational with zero denominator");
    if (num.is_zero()) return 0.0;
    return static_cast<double>(num.to_long_double() / den.to_long_double());
}

bool ExactRational::equals_fraction(std::uint64_t p, std::uint64_t q) const {
    if (q == 0) throw invalid_input_error("fraction denominator must be nonzero");
    // num/den == p/q  <=>  num*q == den*p, exactly.
    BigUint lhs = num;
    lhs.mul_small(q);
    BigUint rhs = den;
    rhs.mul_small(p);
    return lhs == rhs;
}

ExactRational oracle_v_exact(std::size_t k, std::size_t n0, std::uint64_t alpha_num,
                             std::uint64_t alpha_den) {
    constexpr std::size_t kMaxN0 = 30;
    if (n0 > kMaxN0) {
        throw invalid_input_error("oracle_v_exact supports n0 <= 30 only");
    }
    if (alpha_num == 0 || alpha_den == 0 || alpha_num >= alpha_den) {
        throw invalid_input_error("alpha must be a fraction strictly inside (0,1)");
    }
    if (alpha_den >= (1ULL << 32)) {
        throw invalid_input_error("alpha denominator must fit in 32 bits");
    }
    if (k < 1 || k > n0 + 1) {
        throw invalid_input_error("k must lie in [1, n0+1]");
    }

    // v(k) = sum_{j=k}^{n0} C(n0,j) (den-num)^j num^{n0-j} / den^{n0}.
    ExactRational result;
    result.den = BigUint::pow(alpha_den, static_cast<unsigned>(n0));
    result.num = BigUint(0);
    if (k == n0 + 1) return result;

    // Pascal row for C(n0, j); n0 <= 30 keeps every entry far below 2^32.
    std::vector<std::uint64_t> choose(n0 + 1, 1);
    for (std::size_t j = 1; j <= n0; ++j) {
        choose[j] = choose[j - 1] * (n0 - j + 1) / j;
    }

    const std::uint64_t success = alpha_den - alpha_num;  // numerator of 1-alpha
    for (std::size_t j = k; j <= n0; ++j) {
        BigUint term = BigUint::pow(success, static_cast<unsigned>(j));
        term.mul_small(choose[j]);
        for (std::size_t i = 0; i < n0 - j; ++i) term.mul_small(alpha_num);
        result.num += term;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Trial runners
// ---------------------------------------------------------------------------

namespace {

std::vector<double> draw_scores(const ScoreLaw& law, std::size_t n, SplitMix64& rng) {
    std::vector<double> scores(n);
    for (auto& s : scores) s = law_sample(law, rng);
    return scores;
}

double true_type1_error(const ScoreLaw& law, double tau) {
    if (std::isinf(tau) && tau > 0.0) return 0.0;  // abstain-all answers nothing
    return 1.0 - law_cdf(law, tau);
}

void check_world(const SyntheticWorld& world) {
    if (!(world.p_y > 0.0 && world.p_y < 1.0)) {
        throw invalid_input_error("p_y must lie strictly inside (0,1)");
    }
}

}  // namespace

TrialReport run_type1_trials(const SyntheticWorld& world, std::size_t n0, double alpha,
                             double delta, std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw invalid_input_error("trials must be positive");
    check_world(world);

    std::size_t exceed = 0;
    double excess_sum = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        SplitMix64 rng(derive_seed(seed, t));
        const auto scores = draw_scores(world.p0, n0, rng);
        const auto predictor = calibrate({scores, alpha, delta}, ScoreFunction::VE);
        if (true_type1_error(world.p0, predictor.tau) > alpha) ++exceed;
        if (world.tau_oracle) {
            const double tau_cdf = std::isinf(predictor.tau)
                                       ? 1.0
                                       : law_cdf(world.p1, predictor.tau);
            excess_sum += std::max(0.0, tau_cdf - law_cdf(world.p1, *world.tau_oracle));
        }
    }

    TrialReport report;
    report.trials = trials;
    report.exceed_count = exceed;
    report.exceed_rate = static_cast<double>(exceed) / static_cast<double>(trials);
    report.mean_type2_excess = world.tau_oracle ? excess_sum / static_cast<double>(trials) : 0.0;
    report.seed = seed;
    return report;
}

std::vector<Type2Row> run_type2_study(const SyntheticWorld& world,
                                      const std::vector<std::size_t>& n0_grid, double alpha,
                                      double delta, std::size_t trials, std::uint64_t seed) {
    if (!world.tau_oracle) {
        throw invalid_input_error("run_type2_study requires a world with tau_oracle");
    }
    if (trials == 0) throw invalid_input_error("trials must be positive");
    if (n0_grid.empty()) throw invalid_input_error("n0 grid must be nonempty");
    check_world(world);

    const double oracle_cdf = law_cdf(world.p1, *world.tau_oracle);

    std::vector<Type2Row> rows;
    rows.reserve(n0_grid.size());
    for (std::size_t g = 0; g < n0_grid.size(); ++g) {
        const std::size_t n0 = n0_grid[g];
        std::vector<double> excesses(trials);
        for (std::size_t t = 0; t < trials; ++t) {
            SplitMix64 rng(derive_seed(seed, g * trials + t));
            const auto scores = draw_scores(world.p0, n0, rng);
            const auto predictor = calibrate({scores, alpha, delta}, ScoreFunction::VE);
            const double tau_cdf =
                std::isinf(predictor.tau) ? 1.0 : law_cdf(world.p1, predictor.tau);
            excesses[t] = std::max(0.0, tau_cdf - oracle_cdf);
        }
        std::sort(excesses.begin(), excesses.end());
        const double median = (trials % 2 == 1)
                                  ? excesses[trials / 2]
                                  : 0.5 * (excesses[trials / 2 - 1] + excesses[trials / 2]);
        rows.push_back({n0, median});
    }
    return rows;
}

TrialReport run_shift_trials(const ShiftWorld& world, std::size_t n0, double alpha, double delta,
                             std::size_t trials, std::uint64_t seed) {
    if (trials == 0) throw invalid_input_error("trials must be positive");

    const auto ratio_fn = world.ratio
                              ? world.ratio
                              : std::function<double(double)>([&world](double x) {
                                    const double ps = law_pdf(world.source, x);
                                    if (!(ps > 0.0)) {
                                        throw numeric_error(
                                            "density ratio undefined off the source support");
                                    }
                                    return law_pdf(world.target, x) / ps;
                                });

    std::size_t exceed = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        SplitMix64 rng(derive_seed(seed, t));
        const auto scores = draw_scores(world.source, n0, rng);

        ShiftConfig config;
        config.ratios.reserve(n0);
        for (double x : scores) config.ratios.push_back(ratio_fn(x));
        config.gamma = world.gamma;
        config.bound_b = world.bound_b;
        config.seed = derive_seed(seed ^ 0x5851F42D4C957F2DULL, t);

        const auto shifted = calibrate_under_shift(scores, config, alpha, delta,
                                                   ScoreFunction::VE);
        if (true_type1_error(world.target, shifted.predictor.tau) > alpha) ++exceed;
    }

    TrialReport report;
    report.trials = trials;
    report.exceed_count = exceed;
    report.exceed_rate = static_cast<double>(exceed) / static_cast<double>(trials);
    report.mean_type2_excess = 0.0;
    report.seed = seed;
    return report;
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov helpers
// ---------------------------------------------------------------------------

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) {
        throw invalid_input_error("KS statistic requires two nonempty samples");
    }
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());

    double d = 0.0;
    std::size_t i = 0, j = 0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_two_sample_critical(std::size_t n, std::size_t m, double level) {
    if (n == 0 || m == 0) throw invalid_input_error("sample sizes must be positive");
    if (!(level > 0.0 && level < 1.0)) throw invalid_input_error("level must lie in (0,1)");
    const double c = std::sqrt(-0.5 * std::log(level / 2.0));
    const double nn = static_cast<double>(n);
    const double mm = static_cast<double>(m);
    return c * std::sqrt((nn + mm) / (nn * mm));
}

std::string trial_report_to_json(const TrialReport& report) {
    nlohmann::ordered_json doc;
    doc["trials"] = report.trials;
    doc["exceed_count"] = report.exceed_count;
    doc["exceed_rate"] = report.exceed_rate;
    doc["mean_type2_excess"] = report.mean_type2_excess;
    doc["seed"] = report.seed;
    return doc.dump();
}

}  // namespace npcert
