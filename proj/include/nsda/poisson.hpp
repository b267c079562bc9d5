#pragma once

#include <vector>

#include "nsda/fields.hpp"

namespace nsda {

// Both solvers treat lap(psi) = -omega on the unit square with psi = 0 on
// x, y in {0, 1}. On the grid the unknowns are nodes 1..n-1 in each
// direction; node 0 and the node one past n-1 (x = 1) carry the boundary
// value. omega on node 0 is ignored.

struct MultigridConfig {
    int pre_smooth = 2;
    int post_smooth = 2;
    int coarsest_n = 4;
    double tol = 1e-10;
    int max_cycles = 50;

    void validate() const;
};

struct PoissonStats {
    int cycles = 0;
    double relative_residual = 0.0;
    /// Relative residual before the first cycle and after each cycle.
    std::vector<double> history;
};

/// V-cycles with red-black Gauss-Seidel smoothing, full-weighting restriction
/// and bilinear prolongation until the relative residual drops below cfg.tol.
/// Throws NonConvergenceError after cfg.max_cycles.
ScalarField solve_poisson_multigrid(const ScalarField& omega, const MultigridConfig& cfg = {},
                                    const ScalarField* initial_guess = nullptr, PoissonStats* stats = nullptr);

/// Direct solve of the same five-point system in the discrete sine basis.
ScalarField solve_poisson_spectral(const ScalarField& omega);

/// L2 norm of lap(psi) + omega over the unknown nodes, using the Dirichlet
/// five-point operator.
double residual(const ScalarField& psi, const ScalarField& omega);

/// L2 norm of omega over the unknown nodes (the residual of psi = 0).
double rhs_norm(const ScalarField& omega);

}  // namespace nsda
