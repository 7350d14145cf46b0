#pragma once

#include <vector>

#include "switchcode/common.hpp"

namespace switchcode {

// Sparse coding problem: minimize 1/2 ||D u - x||^2 + lambda ||u||_1.
//
// The 1/2 factor is a deliberate convention: it makes the closed form
// u = soft(D^T x, lambda) exact for orthonormal dictionaries.  Setting
// half_quadratic = false selects the unhalved objective
// ||D u - x||^2 + lambda ||u||_1 instead, which is the same problem with the
// threshold halved.
struct LassoProblem {
    Matrix dictionary;  // n x k, columns are atoms
    Vector x;
    double lambda = 0.0;
    double tol = 1e-10;
    Index max_iter = 50000;
    bool half_quadratic = true;
    // FISTA accelerates but gives up the per-iteration monotonicity that
    // plain ISTA guarantees.
    bool use_fista = false;

    void validate() const;
    // lambda expressed in the half-quadratic convention the solver runs in.
    double effective_lambda() const {
        return half_quadratic ? lambda : 0.5 * lambda;
    }
};

struct LassoResult {
    Vector u;
    bool converged = false;
    Index iterations = 0;
    // Objective (in the problem's own convention) at u = 0 and after every
    // iterate.
    std::vector<double> objective_history;
};

double lasso_objective(const LassoProblem& p, const Vector& u);

// Iterative soft-thresholding from u = 0 with step 1/L, L the largest
// eigenvalue of D^T D (power iteration, padded slightly upward so an
// underestimate cannot break monotonicity).  Stops when the iterate change
// falls below tol in the infinity norm.
LassoResult lasso_encode(const LassoProblem& p);

// Worst coordinate-wise violation of the subgradient optimality condition
// D^T(Du - x) + lambda * sign(u) = 0 (half-quadratic convention; the unhalved
// variant substitutes lambda/2):
//   u_j != 0  ->  |d_j.(Du - x) + lambda * sign(u_j)|
//   u_j == 0  ->  max(0, |d_j.(Du - x)| - lambda)
double kkt_residual(const LassoProblem& p, const Vector& u);

}  // namespace switchcode
