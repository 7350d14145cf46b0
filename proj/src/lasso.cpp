#include "switchcode/lasso.hpp"

#include <cmath>

namespace switchcode {

namespace {

double soft(double v, double t) {
    if (v > t) return v - t;
    if (v < -t) return v + t;
    return 0.0;
}

// Largest eigenvalue of D^T D by power iteration on v -> D^T (D v).
double lipschitz_estimate(const Matrix& d) {
    const Index k = d.cols();
    Vector v = Vector::Constant(k, 1.0 / std::sqrt(double(k)));
    double l = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vector w = d.transpose() * (d * v);
        const double norm = w.norm();
        if (norm < 1e-300) return 0.0;
        l = norm;  // Rayleigh growth factor of the unit vector
        v = w / norm;
    }
    return l;
}

}  // namespace

void LassoProblem::validate() const {
    if (dictionary.rows() < 1 || dictionary.cols() < 1) {
        throw std::invalid_argument("lasso: empty dictionary");
    }
    if (x.size() != dictionary.rows()) {
        throw std::invalid_argument("lasso: signal length mismatch");
    }
    if (!dictionary.allFinite() || !x.allFinite()) {
        throw std::invalid_argument("lasso: non-finite problem data");
    }
    if (lambda < 0.0) throw std::invalid_argument("lasso: lambda must be nonnegative");
    if (!(tol > 0.0)) throw std::invalid_argument("lasso: tol must be positive");
    if (max_iter < 1) throw std::invalid_argument("lasso: max_iter must be positive");
}

double lasso_objective(const LassoProblem& p, const Vector& u) {
    const double quad = (p.dictionary * u - p.x).squaredNorm();
    const double l1 = p.lambda * u.cwiseAbs().sum();
    return (p.half_quadratic ? 0.5 * quad : quad) + l1;
}

LassoResult lasso_encode(const LassoProblem& p) {
    p.validate();
    const Index k = p.dictionary.cols();
    LassoResult result;
    result.u = Vector::Zero(k);
    result.objective_history.push_back(lasso_objective(p, result.u));

    const double l_raw = lipschitz_estimate(p.dictionary);
    if (l_raw < 1e-12) {
        // Zero dictionary: u = 0 is already optimal.
        result.converged = true;
        return result;
    }
    // Power iteration converges from below; pad so the step never overshoots.
    const double l = l_raw * (1.0 + 1e-3);
    const double step = 1.0 / l;
    const double threshold = p.effective_lambda() * step;

    Vector u = result.u;
    Vector y = u;           // FISTA extrapolation point (== u for ISTA)
    double t = 1.0;

    for (Index it = 0; it < p.max_iter; ++it) {
        const Vector& base = p.use_fista ? y : u;
        Vector grad_point = base - step * (p.dictionary.transpose() *
                                           (p.dictionary * base - p.x));
        Vector next(k);
        for (Index j = 0; j < k; ++j) next[j] = soft(grad_point[j], threshold);

        const double change = (next - u).lpNorm<Eigen::Infinity>();
        if (p.use_fista) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = next + ((t - 1.0) / t_next) * (next - u);
            t = t_next;
        }
        u = std::move(next);
        result.iterations = it + 1;
        result.objective_history.push_back(lasso_objective(p, u));
        if (change < p.tol) {
            result.converged = true;
            break;
        }
    }
    result.u = std::move(u);
    return result;
}

double kkt_residual(const LassoProblem& p, const Vector& u) {
    if (u.size() != p.dictionary.cols()) {
        throw std::invalid_argument("kkt_residual: code length mismatch");
    }
    const double lambda = p.effective_lambda();
    const Vector corr = p.dictionary.transpose() * (p.dictionary * u - p.x);
    double worst = 0.0;
    for (Index j = 0; j < u.size(); ++j) {
        double v;
        if (u[j] > 0.0) {
            v = std::abs(corr[j] + lambda);
        } else if (u[j] < 0.0) {
            v = std::abs(corr[j] - lambda);
        } else {
            v = std::max(0.0, std::abs(corr[j]) - lambda);
        }
        worst = std::max(worst, v);
    }
    return worst;
}

}  // namespace switchcode
