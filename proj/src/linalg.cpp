#include "npcert/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "npcert/errors.hpp"

namespace npcert {

SymmetricEigenResult symmetric_eigen(const std::vector<double>& matrix, std::size_t n,
                                     bool want_vectors) {
    if (n == 0 || matrix.size() != n * n) {
        throw invalid_input_error("symmetric_eigen: matrix must be n x n with n >= 1");
    }
    for (double v : matrix) {
        if (!std::isfinite(v)) throw numeric_error("symmetric_eigen: non-finite entry");
    }

    std::vector<double> a = matrix;
    std::vector<double> v;
    if (want_vectors) {
        v.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
    }

    auto at = [&a, n](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

    double frob2 = 0.0;
    for (double x : a) frob2 += x * x;
    const double stop = frob2 * 1e-30;  // (1e-15 * ||A||_F)^2

    constexpr int kMaxSweeps = 100;
    bool converged = false;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        double off2 = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off2 += at(p, q) * at(p, q);
        if (off2 * 2.0 <= stop) {
            converged = true;
            break;
        }

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = at(p, q);
                if (apq == 0.0) continue;

                const double theta = 0.5 * (at(q, q) - at(p, p)) / apq;
                double t = 1.0 / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                const double delta = t * apq;
                at(p, p) -= delta;
                at(q, q) += delta;
                at(p, q) = 0.0;
                at(q, p) = 0.0;

                for (std::size_t r = 0; r < n; ++r) {
                    if (r == p || r == q) continue;
                    const double arp = at(r, p);
                    const double arq = at(r, q);
                    at(r, p) = arp - s * (arq + tau * arp);
                    at(p, r) = at(r, p);
                    at(r, q) = arq + s * (arp - tau * arq);
                    at(q, r) = at(r, q);
                }
                if (want_vectors) {
                    for (std::size_t r = 0; r < n; ++r) {
                        const double vrp = v[r * n + p];
                        const double vrq = v[r * n + q];
                        v[r * n + p] = vrp - s * (vrq + tau * vrp);
                        v[r * n + q] = vrq + s * (vrp - tau * vrq);
                    }
                }
            }
        }
    }

    if (!converged) {
        throw numeric_error("symmetric_eigen: Jacobi sweeps exhausted before convergence");
    }

    SymmetricEigenResult result;
    result.dim = n;
    result.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) result.values[i] = at(i, i);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&result](std::size_t i, std::size_t j) {
        return result.values[i] < result.values[j];
    });

    std::vector<double> sorted_values(n);
    for (std::size_t j = 0; j < n; ++j) sorted_values[j] = result.values[order[j]];
    result.values = std::move(sorted_values);

    if (want_vectors) {
        result.vectors.assign(n * n, 0.0);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t r = 0; r < n; ++r) result.vectors[r * n + j] = v[r * n + order[j]];
    }
    return result;
}

}  // namespace npcert
