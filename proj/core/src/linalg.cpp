#include "aberrant_mix/linalg.hpp"

#include "aberrant_mix/error.hpp"

namespace aberrant_mix {

int first_failing_minor(const Eigen::MatrixXd& matrix) {
    const Eigen::Index n = matrix.rows();
    Eigen::MatrixXd l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double pivot = matrix(j, j);
        for (Eigen::Index k = 0; k < j; ++k) {
            pivot -= l(j, k) * l(j, k);
        }
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            return static_cast<int>(j) + 1;
        }
        l(j, j) = std::sqrt(pivot);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double s = matrix(i, j);
            for (Eigen::Index k = 0; k < j; ++k) {
                s -= l(i, k) * l(j, k);
            }
            l(i, j) = s / l(j, j);
        }
    }
    return 0;
}

Eigen::LLT<Eigen::MatrixXd> cholesky_checked(const Eigen::MatrixXd& matrix, const std::string& what) {
    if (matrix.rows() != matrix.cols()) {
        throw InvalidArgument(what + ": matrix is not square");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(matrix);
    if (llt.info() != Eigen::Success || !llt.matrixLLT().allFinite()) {
        int minor = first_failing_minor(matrix);
        if (minor == 0) {
            minor = static_cast<int>(matrix.rows());
        }
        throw NotPositiveDefinite(what + " is not positive definite", minor);
    }
    return llt;
}

double pairwise_sum(std::span<const double> values) {
    constexpr std::size_t kLeaf = 8;
    if (values.size() <= kLeaf) {
        double s = 0.0;
        for (double v : values) {
            s += v;
        }
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

}  // namespace aberrant_mix
