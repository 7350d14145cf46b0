#include "switchcode/eigensym.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace switchcode {

namespace {

double max_abs_asymmetry(const Matrix& a) {
    double worst = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = i + 1; j < a.cols(); ++j) {
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
        }
    }
    return worst;
}

double off_diagonal_norm(const Matrix& a) {
    double sum = 0.0;
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            if (i != j) sum += a(i, j) * a(i, j);
        }
    }
    return std::sqrt(sum);
}

}  // namespace

SymmetricEigen eigen_symmetric(const Matrix& input) {
    if (input.rows() != input.cols()) {
        throw std::invalid_argument("eigen_symmetric: matrix must be square");
    }
    const Index n = input.rows();
    const double scale = std::max(1.0, input.cwiseAbs().maxCoeff());
    if (max_abs_asymmetry(input) > 1e-9 * scale) {
        throw std::invalid_argument("eigen_symmetric: matrix is not symmetric");
    }

    Matrix a = 0.5 * (input + input.transpose());
    Matrix v = Matrix::Identity(n, n);  // columns accumulate eigenvectors

    const double frob = std::max(a.norm(), 1e-300);
    const double tol = 1e-13 * frob;
    const int max_sweeps = 64;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (off_diagonal_norm(a) <= tol) break;
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t =
                    (theta >= 0.0 ? 1.0 : -1.0) /
                    (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a(p, p), aqq = a(q, q);
                Vector col_p = a.col(p), col_q = a.col(q);
                a.col(p) = c * col_p - s * col_q;
                a.col(q) = s * col_p + c * col_q;
                Vector row_p = a.row(p), row_q = a.row(q);
                a.row(p) = c * row_p.transpose() - s * row_q.transpose();
                a.row(q) = s * row_p.transpose() + c * row_q.transpose();
                // Rotated entries have closed forms; write them exactly.
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;

                Vector v_p = v.col(p), v_q = v.col(q);
                v.col(p) = c * v_p - s * v_q;
                v.col(q) = s * v_p + c * v_q;
            }
        }
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index lhs, Index rhs) {
        return a(lhs, lhs) > a(rhs, rhs);
    });

    SymmetricEigen result;
    result.eigenvalues.resize(n);
    result.eigenvectors.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        result.eigenvalues[i] = a(order[i], order[i]);
        Vector row = v.col(order[i]);
        Index largest = 0;
        for (Index j = 1; j < n; ++j) {
            if (std::abs(row[j]) > std::abs(row[largest])) largest = j;
        }
        if (row[largest] < 0.0) row = -row;
        result.eigenvectors.row(i) = row.transpose();
    }
    return result;
}

}  // namespace switchcode
