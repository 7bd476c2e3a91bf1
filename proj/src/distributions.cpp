#include "npcert/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "npcert/errors.hpp"

namespace npcert {

double log_binomial_coefficient(std::size_t n, std::size_t k) {
    if (k > n) return -std::numeric_limits<double>::infinity();
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

namespace {

// Continued fraction for the incomplete beta, modified Lentz method.
double beta_continued_fraction(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 1e-15;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;

    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;

    for (int m = 1; m <= kMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;

        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) return h;
    }
    throw numeric_error("incomplete beta continued fraction failed to converge");
}

}  // namespace

double incomplete_beta_reg(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0)) {
        throw invalid_input_error("incomplete beta requires a > 0 and b > 0");
    }
    if (std::isnan(x)) throw invalid_input_error("incomplete beta: x is NaN");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;

    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_continued_fraction(a, b, x) / a;
    }
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_pdf(double x) {
    static const double kInvSqrt2Pi = 0.3989422804014326779399461;
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double sample_standard_normal(SplitMix64& rng) {
    // Box-Muller; the second deviate is discarded to keep calls stateless.
    double u1 = rng.next_double();
    while (u1 <= 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double sample_gamma(SplitMix64& rng, double shape) {
    if (!(shape > 0.0)) throw invalid_input_error("gamma shape must be positive");
    if (shape < 1.0) {
        // Boost: Gamma(a) = Gamma(a+1) * U^{1/a}
        double u = rng.next_double();
        while (u <= 0.0) u = rng.next_double();
        return sample_gamma(rng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double z;
        double v;
        do {
            z = sample_standard_normal(rng);
            v = 1.0 + c * z;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.next_double();
        if (u < 1.0 - 0.0331 * z * z * z * z) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * z * z + d * (1.0 - v + std::log(v))) {
            return d * v;
        }
    }
}

// ---------------------------------------------------------------------------
// Score laws
// ---------------------------------------------------------------------------

namespace {

double trunc_normal_mass(const TruncNormalLaw& l) {
    return normal_cdf((l.hi - l.mu) / l.sigma) - normal_cdf((l.lo - l.mu) / l.sigma);
}

void validate_law(const ScoreLaw& law) {
    if (const auto* b = std::get_if<BetaLaw>(&law)) {
        if (!(b->a > 0.0) || !(b->b > 0.0)) {
            throw invalid_input_error("beta law requires positive shape parameters");
        }
    } else if (const auto* t = std::get_if<TruncNormalLaw>(&law)) {
        if (!(t->sigma > 0.0)) throw invalid_input_error("truncnorm law requires sigma > 0");
        if (!(t->lo < t->hi)) throw invalid_input_error("truncnorm law requires lo < hi");
        if (!(trunc_normal_mass(*t) > 0.0)) {
            throw invalid_input_error("truncnorm law has no mass on [lo, hi]");
        }
    }
}

}  // namespace

double law_cdf(const ScoreLaw& law, double x) {
    validate_law(law);
    return std::visit(
        [x](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, UniformLaw>) {
                return std::clamp(x, 0.0, 1.0);
            } else if constexpr (std::is_same_v<T, BetaLaw>) {
                if (x <= 0.0) return 0.0;
                if (x >= 1.0) return 1.0;
                return incomplete_beta_reg(l.a, l.b, x);
            } else {
                if (x <= l.lo) return 0.0;
                if (x >= l.hi) return 1.0;
                const double lo_cdf = normal_cdf((l.lo - l.mu) / l.sigma);
                return (normal_cdf((x - l.mu) / l.sigma) - lo_cdf) / trunc_normal_mass(l);
            }
        },
        law);
}

double law_pdf(const ScoreLaw& law, double x) {
    validate_law(law);
    return std::visit(
        [x](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, UniformLaw>) {
                return (x >= 0.0 && x <= 1.0) ? 1.0 : 0.0;
            } else if constexpr (std::is_same_v<T, BetaLaw>) {
                if (x <= 0.0 || x >= 1.0) return 0.0;
                const double log_norm = std::lgamma(l.a + l.b) - std::lgamma(l.a) - std::lgamma(l.b);
                return std::exp(log_norm + (l.a - 1.0) * std::log(x) +
                                (l.b - 1.0) * std::log1p(-x));
            } else {
                if (x < l.lo || x > l.hi) return 0.0;
                return normal_pdf((x - l.mu) / l.sigma) / (l.sigma * trunc_normal_mass(l));
            }
        },
        law);
}

double law_quantile(const ScoreLaw& law, double p) {
    validate_law(law);
    if (!(p >= 0.0 && p <= 1.0)) throw invalid_input_error("quantile level must lie in [0,1]");
    return std::visit(
        [&law, p](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, UniformLaw>) {
                return p;
            } else if constexpr (std::is_same_v<T, BetaLaw>) {
                if (p == 0.0) return 0.0;
                if (p == 1.0) return 1.0;
                if (l.b == 1.0) return std::pow(p, 1.0 / l.a);
                if (l.a == 1.0) return 1.0 - std::pow(1.0 - p, 1.0 / l.b);
                double lo = 0.0, hi = 1.0;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (law_cdf(law, mid) < p ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            } else {
                if (p == 0.0) return l.lo;
                if (p == 1.0) return l.hi;
                double lo = l.lo, hi = l.hi;
                for (int it = 0; it < 200; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    (law_cdf(law, mid) < p ? lo : hi) = mid;
                }
                return 0.5 * (lo + hi);
            }
        },
        law);
}

double law_sample(const ScoreLaw& law, SplitMix64& rng) {
    validate_law(law);
    return std::visit(
        [&rng](const auto& l) -> double {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, UniformLaw>) {
                return rng.next_double();
            } else if constexpr (std::is_same_v<T, BetaLaw>) {
                // Inverse CDF when one shape is 1 (keeps draws a monotone map
                // of a single uniform); gamma ratio otherwise.
                if (l.b == 1.0) return std::pow(rng.next_double(), 1.0 / l.a);
                if (l.a == 1.0) return 1.0 - std::pow(1.0 - rng.next_double(), 1.0 / l.b);
                const double g1 = sample_gamma(rng, l.a);
                const double g2 = sample_gamma(rng, l.b);
                return g1 / (g1 + g2);
            } else {
                for (;;) {
                    const double z = l.mu + l.sigma * sample_standard_normal(rng);
                    if (z >= l.lo && z <= l.hi) return z;
                }
            }
        },
        law);
}

ScoreLaw parse_law(const std::string& spec) {
    const auto colon = spec.find(':');
    const std::string name = spec.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(spec.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                args.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw invalid_input_error("bad numeric argument in law spec '" + spec + "'");
            }
        }
    }
    ScoreLaw law;
    if (name == "uniform") {
        if (!args.empty()) throw invalid_input_error("uniform law takes no arguments");
        law = UniformLaw{};
    } else if (name == "beta") {
        if (args.size() != 2) throw invalid_input_error("beta law needs 'beta:a,b'");
        law = BetaLaw{args[0], args[1]};
    } else if (name == "truncnorm") {
        if (args.size() != 2 && args.size() != 4) {
            throw invalid_input_error("truncnorm law needs 'truncnorm:mu,sigma[,lo,hi]'");
        }
        TruncNormalLaw t{args[0], args[1], 0.0, 1.0};
        if (args.size() == 4) {
            t.lo = args[2];
            t.hi = args[3];
        }
        law = t;
    } else {
        throw invalid_input_error("unknown score law '" + name + "'");
    }
    validate_law(law);
    return law;
}

std::string law_to_string(const ScoreLaw& law) {
    char buf[128];
    return std::visit(
        [&buf](const auto& l) -> std::string {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, UniformLaw>) {
                return "uniform";
            } else if constexpr (std::is_same_v<T, BetaLaw>) {
                std::snprintf(buf, sizeof(buf), "beta:%g,%g", l.a, l.b);
                return buf;
            } else {
                std::snprintf(buf, sizeof(buf), "truncnorm:%g,%g,%g,%g", l.mu, l.sigma, l.lo, l.hi);
                return buf;
            }
        },
        law);
}

}  // namespace npcert
