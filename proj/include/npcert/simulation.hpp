#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "npcert/calibration.hpp"
#include "npcert/distributions.hpp"

namespace npcert {

// ---------------------------------------------------------------------------
// Exact arithmetic oracle for the binomial tail
// ---------------------------------------------------------------------------

// Unsigned big integer, base 2^32 limbs. Only what the exact oracle needs.
class BigUint {
public:
    BigUint() = default;
    explicit BigUint(std::uint64_t value);

    static BigUint pow(std::uint64_t base, unsigned exponent);

    BigUint& operator+=(const BigUint& other);
    BigUint& mul_small(std::uint64_t factor);  // factor < 2^32

    bool operator==(const BigUint& other) const { return limbs_ == other.limbs_; }
    bool is_zero() const { return limbs_.empty(); }

    long double to_long_double() const;
    std::string to_decimal_string() const;

private:
    std::vector<std::uint32_t> limbs_;  // little-endian, no trailing zeros
};

// num/den held exactly; to_double() is correct to well below 1e-15 absolute
// for values in [0,1].
struct ExactRational {
    BigUint num;
    BigUint den;

    double to_double() const;
    bool equals_fraction(std::uint64_t p, std::uint64_t q) const;
};

// The binomial tail sum evaluated in exact integer arithmetic for rational
// alpha = alpha_num/alpha_den. Ground truth for binomial_tail_v; n0 is capped
// at 30 to keep the arithmetic budget small.
ExactRational oracle_v_exact(std::size_t k, std::size_t n0, std::uint64_t alpha_num,
                             std::uint64_t alpha_den);

// ---------------------------------------------------------------------------
// Synthetic worlds
// ---------------------------------------------------------------------------

// Analytic score laws for the two classes, the marginal probability of the
// certain class, and (when it is analytically known) the oracle threshold for
// the alpha the study runs at.
struct SyntheticWorld {
    ScoreLaw p0 = UniformLaw{};
    ScoreLaw p1 = UniformLaw{};
    double p_y = 0.5;
    std::optional<double> tau_oracle;
};

struct TrialReport {
    std::size_t trials = 0;
    std::size_t exceed_count = 0;
    double exceed_rate = 0.0;
    double mean_type2_excess = 0.0;
    std::uint64_t seed = 0;
};

// Per trial: draw n0 calibration scores from p0, calibrate, and compute the
// TRUE Type I error 1 - F_{p0}(tau) from the analytic CDF (no test-set
// noise). Counts trials whose true error exceeds alpha.
TrialReport run_type1_trials(const SyntheticWorld& world, std::size_t n0, double alpha,
                             double delta, std::size_t trials, std::uint64_t seed);

struct Type2Row {
    std::size_t n0 = 0;
    double median_excess = 0.0;
};

// Median excess Type II error F_{p1}(tau) - F_{p1}(tau_oracle), floored at 0,
// per calibration size in the grid. Requires world.tau_oracle.
std::vector<Type2Row> run_type2_study(const SyntheticWorld& world,
                                      const std::vector<std::size_t>& n0_grid, double alpha,
                                      double delta, std::size_t trials, std::uint64_t seed);

// Covariate-shift world: calibration draws come from `source` while the Type I
// error is measured under `target`. `ratio` is dP_target/dP_source; when it is
// not supplied it is derived from the two densities.
struct ShiftWorld {
    ScoreLaw source = UniformLaw{};
    ScoreLaw target = UniformLaw{};
    std::function<double(double)> ratio;
    std::optional<double> bound_b;
    double gamma = 0.9;
};

TrialReport run_shift_trials(const ShiftWorld& world, std::size_t n0, double alpha, double delta,
                             std::size_t trials, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Distribution comparison helpers
// ---------------------------------------------------------------------------

double ks_two_sample_statistic(std::vector<double> a, std::vector<double> b);

// Asymptotic critical value c(level) * sqrt((n+m)/(n*m)).
double ks_two_sample_critical(std::size_t n, std::size_t m, double level);

std::string trial_report_to_json(const TrialReport& report);

}  // namespace npcert
