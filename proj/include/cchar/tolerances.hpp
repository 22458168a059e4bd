#pragma once

namespace cchar {

/// Every numerical threshold used by the library. Passed explicitly to each
/// operation; there is no global default instance.
struct Tolerances {
    // symplectic linear algebra
    double sympl = 1e-9;         // ‖MᵀJM − J‖_max accepted by make_symplectic
    double circle = 1e-8;        // relative distance of |λ| to 1 for the unit circle
    double cluster_gap = 1e-4;   // eigenvalues closer than this form one cluster
    double rank = 1e-7;          // relative singular-value threshold for kernels

    // path index
    double degenerate = 1e-9;    // eigenvalue within this of ω ⇒ degenerate endpoint
    double coorient_eps = 1e-5;  // ε in the co-orientation probe M e^{sεJ}
    double coorient_tol = 1e-12;
    double perturb_eps = 1e-6;   // terminal-arc rotation for degenerate endpoints
    int max_depth = 40;          // bisection depth for adaptive refinement

    // iteration
    double splitting_eps = 1e-4;
    int q_max = 64;              // largest denominator accepted as rational
    double rational = 1e-9;      // |θ/π − p/q| accepted as rational
    double slope = 1e-2;         // residual tolerance of the mean-index regression
    double fit = 1e-6;
    double growth = 1e4;         // spectral-radius growth up to which iterates are indexed directly

    // hypersurface
    double energy = 1e-9;
    double drift_cap = 1e-6;
    double orbit_closure = 1e-7;
    double symmetry = 1e-6;
    double symmetry_gap = 1e-3;
    double integrator = 1e-12;   // abs/rel tolerance of the adaptive integrator
    double x_min = 1e-12;

    // dual action
    double gradient = 1e-8;
    double eigen = 1e-8;         // relative eigenvalue threshold for Morse counts
    double duplicate = 1e-4;
    double ratio = 1e-4;
};

}  // namespace cchar
