#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>

namespace aberrant_mix {

/// Cholesky factor of a symmetric matrix; throws NotPositiveDefinite naming
/// the first failing leading minor. `what` labels the matrix in the message.
Eigen::LLT<Eigen::MatrixXd> cholesky_checked(const Eigen::MatrixXd& matrix, const std::string& what);

/// Order of the first leading minor whose Cholesky pivot is <= 0, or 0 if
/// the matrix is positive definite.
int first_failing_minor(const Eigen::MatrixXd& matrix);

/// Sum with a fixed pairwise (recursive halving) order, so results do not
/// depend on how per-element terms were scheduled.
double pairwise_sum(std::span<const double> values);

inline double log_sigmoid(double x) {
    return x < 0.0 ? x - std::log1p(std::exp(x)) : -std::log1p(std::exp(-x));
}

inline double logistic(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline double log_sum_exp(double a, double b) {
    const double hi = a > b ? a : b;
    if (std::isinf(hi) && hi < 0) {
        return hi;
    }
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

}  // namespace aberrant_mix
