#pragma once

#include <functional>
#include <vector>

#include "cchar/sympl.hpp"

namespace cchar {

/// γ : [0, τ] → Sp(2n) with γ(0) = I, held as an ordered sample grid. When the
/// path came from a closed form or an integrator, `evaluator` re-queries the
/// source at arbitrary t; otherwise refinement interpolates along the
/// one-parameter subgroup joining neighbouring samples.
class SymplecticPath {
public:
    using Evaluator = std::function<Mat(double)>;

    SymplecticPath() = default;

    /// Validates every sample. `step_cap` bounds ‖M_{i+1} − M_i‖_max.
    static SymplecticPath from_samples(double tau, std::vector<double> times, std::vector<Mat> mats,
                                       const Tolerances& tol, double step_cap = 0.5);

    /// Samples `eval` on a grid of at least `min_samples` points, refined until
    /// consecutive samples are within `step_cap`.
    static SymplecticPath from_generator(double tau, Evaluator eval, int min_samples,
                                         const Tolerances& tol, double step_cap = 0.25);

    /// Unchecked assembly for constructions that preserve the invariants
    /// (iterates, concatenations of validated paths).
    static SymplecticPath from_parts(double tau, std::vector<double> times, std::vector<Mat> mats,
                                     Evaluator eval, int depth);

    int half_dim() const { return static_cast<int>(mats_.front().rows()) / 2; }
    double tau() const { return tau_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<Mat>& mats() const { return mats_; }
    std::size_t size() const { return times_.size(); }
    const Mat& endpoint() const { return mats_.back(); }
    SymplecticMatrix endpoint_symplectic() const { return trust_symplectic(mats_.back()); }
    bool has_evaluator() const { return static_cast<bool>(eval_); }
    int refinement_depth() const { return depth_; }

    /// γ(t) for t ∈ [0, τ].
    Mat at(double t) const;

private:
    double tau_ = 0.0;
    std::vector<double> times_;
    std::vector<Mat> mats_;
    Evaluator eval_;
    int depth_ = 0;
};

struct OmegaIndex {
    Complex omega;
    int index = 0;
    int nullity = 0;
    bool degenerate_endpoint = false;
    int upper_index = 0;  // index reached through the opposite perturbation
};

/// D_ω(M) = (−1)^{n−1} ω̄ⁿ det(M − ωI); real for symplectic M.
double d_omega(const Mat& m, Complex omega);

/// ξ_n(t) = diag(2 − t/τ, (2 − t/τ)⁻¹)^{⋄n}.
Mat xi_matrix(int n, double t, double tau);
SymplecticPath special_path_xi(int n, double tau, const Tolerances& tol, int samples = 17);

/// γᵐ(t) = γ(t − jτ) γ(τ)ʲ on [jτ, (j+1)τ].
SymplecticPath iterate_path(const SymplecticPath& path, int m);

/// Counts co-oriented passages of a symplectic path through Sp(2n)⁰_ω.
///
/// The degeneracy det(ω̄M − I) = 0 is transported to a unitary matrix U(M) by
/// the Potapov–Ginzburg transform with respect to the Hermitian form iJ; ω̄M
/// has eigenvalue 1 exactly when U(M) does, with the same multiplicity. The
/// eigenphases of U move continuously on the circle, so the intersection
/// number is the net number of eigenphases passing through 0, which stays
/// well defined when several eigenvalues cross at once.
class SpectralFlow {
public:
    struct Node {
        double s = 0.0;
        Mat m;
        CMat u;                      // unitary image of ω̄M
        std::vector<double> phases;  // eigenphases of u, in (−π, π]
    };
    using Evaluator = std::function<Mat(double)>;

    SpectralFlow(int n, Complex omega, const Tolerances& tol);

    Node node(double s, Mat m) const;

    /// Net crossings from a to b. Intervals whose eigenphase motion is not
    /// provably smaller than the clearance around the counting cut are bisected
    /// through `eval`; every interval is additionally split 2^extra_depth times.
    int flow(const Node& a, const Node& b, const Evaluator& eval, int extra_depth = 0) const;

    /// flow() repeated with one more level of uniform refinement until two
    /// successive counts agree.
    int verified_flow(const Node& a, const Node& b, const Evaluator& eval) const;

    Complex omega() const { return omega_; }

private:
    int flow_rec(const Node& a, const Node& b, const Evaluator& eval, int depth, int forced) const;

    int n_;
    Complex omega_;
    Tolerances tol_;
    CMat basis_;  // unitary, diagonalises iJ as diag(I_n, −I_n)
};

/// Returns the angular gap used to perturb a degenerate endpoint: a fraction of
/// the smallest distance between distinct eigenvalue angles of m on the circle.
double endpoint_perturbation(const Mat& m, const Tolerances& tol);

/// (i_ω(γ), ν_ω(γ)). Degenerate endpoints are resolved by appending the arc
/// γ(τ)e^{∓sεJ}; the index is the smaller of the two resulting counts.
OmegaIndex omega_index(const SymplecticPath& path, Complex omega, const Tolerances& tol);

/// Net crossings along ξ_n followed by `path`, accumulated up to each path
/// sample. `path_nodes`, when given, receives the nodes of the samples.
std::vector<int> cumulative_crossings(const SymplecticPath& path, const SpectralFlow& sf,
                                      std::vector<SpectralFlow::Node>* path_nodes = nullptr);

/// Turns the crossing count accumulated up to `end` into (i_ω, ν_ω), resolving
/// a degenerate endpoint with the two terminal arcs.
OmegaIndex close_endpoint(const SpectralFlow& sf, const SpectralFlow::Node& end, int prefix,
                          const Tolerances& tol);

/// Whether ω coincides with an eigenvalue of m on the unit circle.
bool is_degenerate_at(const Mat& m, Complex omega, const Tolerances& tol);

void to_json(nlohmann::json& j, const SymplecticPath& p);
SymplecticPath path_from_json(const nlohmann::json& j, const Tolerances& tol);

}  // namespace cchar
