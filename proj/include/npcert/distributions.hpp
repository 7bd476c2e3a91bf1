#pragma once

#include <string>
#include <variant>

#include "npcert/rng.hpp"

namespace npcert {

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

// ln C(n, k) via lgamma.
double log_binomial_coefficient(std::size_t n, std::size_t k);

// Regularized incomplete beta I_x(a, b), modified Lentz continued fraction.
// Serves as an independent cross-check of the binomial tail sum through the
// identity  sum_{j=k}^{n} C(n,j) p^j (1-p)^{n-j} = I_p(k, n-k+1).
double incomplete_beta_reg(double a, double b, double x);

// Standard normal CDF.
double normal_cdf(double x);

// Standard normal density.
double normal_pdf(double x);

// ---------------------------------------------------------------------------
// Samplers (sequential stream; draw counts may vary per call)
// ---------------------------------------------------------------------------

double sample_standard_normal(SplitMix64& rng);

// Marsaglia-Tsang for shape >= 1, boosted for shape < 1. Unit scale.
double sample_gamma(SplitMix64& rng, double shape);

// ---------------------------------------------------------------------------
// Continuous score laws on a bounded support
// ---------------------------------------------------------------------------

struct UniformLaw {};  // Uniform(0,1)

struct BetaLaw {
    double a = 1.0;
    double b = 1.0;
};

struct TruncNormalLaw {
    double mu = 0.0;
    double sigma = 1.0;
    double lo = 0.0;
    double hi = 1.0;
};

using ScoreLaw = std::variant<UniformLaw, BetaLaw, TruncNormalLaw>;

double law_cdf(const ScoreLaw& law, double x);
double law_pdf(const ScoreLaw& law, double x);
double law_quantile(const ScoreLaw& law, double p);
double law_sample(const ScoreLaw& law, SplitMix64& rng);

// "uniform" | "beta:a,b" | "truncnorm:mu,sigma[,lo,hi]"
ScoreLaw parse_law(const std::string& spec);
std::string law_to_string(const ScoreLaw& law);

}  // namespace npcert
