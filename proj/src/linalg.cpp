#include "dispo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dispo {

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    }
    return t;
}

Matrix multiply(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: shape mismatch");
    Matrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

RightSingularSystem right_singular_system(const Matrix& a, double tolerance, int max_sweeps) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    // Work column-major: columns are the vectors being orthogonalized.
    std::vector<std::vector<double>> w(n, std::vector<double>(m));
    for (std::size_t r = 0; r < m; ++r) {
        for (std::size_t c = 0; c < n; ++c) w[c][r] = a(r, c);
    }
    std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double alpha = 0.0;
                double beta = 0.0;
                double gamma = 0.0;
                for (std::size_t r = 0; r < m; ++r) {
                    alpha += w[p][r] * w[p][r];
                    beta += w[q][r] * w[q][r];
                    gamma += w[p][r] * w[q][r];
                }
                if (gamma == 0.0 || std::abs(gamma) <= tolerance * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t r = 0; r < m; ++r) {
                    const double wp = w[p][r];
                    const double wq = w[q][r];
                    w[p][r] = c * wp - s * wq;
                    w[q][r] = s * wp + c * wq;
                }
                for (std::size_t r = 0; r < n; ++r) {
                    const double vp = v[p][r];
                    const double vq = v[q][r];
                    v[p][r] = c * vp - s * vq;
                    v[q][r] = s * vp + c * vq;
                }
            }
        }
        if (!rotated) break;
    }

    std::vector<double> norms(n);
    for (std::size_t c = 0; c < n; ++c) {
        double s = 0.0;
        for (double x : w[c]) s += x * x;
        norms[c] = std::sqrt(s);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return norms[i] > norms[j]; });

    RightSingularSystem out;
    out.singular_values.resize(n);
    out.v = Matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        out.singular_values[k] = norms[order[k]];
        for (std::size_t r = 0; r < n; ++r) out.v(r, k) = v[order[k]][r];
    }
    return out;
}

}  // namespace dispo
