#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cchar/hypersurface.hpp"

namespace cchar {

/// Mean-zero loop u : R/Z → R^{2n}, u(t) = Σ_{k=1..K} a_k cos 2πkt + b_k sin 2πkt.
/// The complex coefficients are c_{±k} = (a_k ∓ i b_k)/2.
struct Loop {
    int n = 0;
    int K = 0;
    Mat a;  // 2n × K, column k−1 holds a_k
    Mat b;

    static Loop zero(int n, int K);
    static Loop from_flat(int n, int K, const Vec& v);
    Vec flat() const;  // [a_1, b_1, a_2, b_2, …]

    Vec at(double t) const;
    CVec coefficient(int k) const;  // c_k for 1 ≤ |k| ≤ K

    Loop resized(int new_k) const;        // zero-padded or truncated
    Loop shifted(double theta) const;     // u(· + θ)
    Loop scaled(double s) const;
    /// Critical loop of the m-th iterate: m^{(α−1)/(α−2)} u(m·).
    Loop iterate(int m, double alpha) const;
};

/// Mu with (Mu)' = u and zero mean.
Loop primitive_zero_mean(const Loop& u);

/// Samples of a loop on the uniform grid t_i = i/N.
Loop loop_from_samples(const std::vector<Vec>& samples, int K);

struct ConjugateValue {
    double value = 0.0;
    Vec gradient;
};

/// H*_α(y) = sup_x (x·y − H_α(x)) = c_α j°(y)^β, β = α/(α−1), c_α = (α−1)α^{−β}.
ConjugateValue fenchel_conjugate(const ConvexBody& body, double alpha, const Vec& y);
Mat conjugate_hessian(const ConvexBody& body, double alpha, const Vec& y);

struct PhiValue {
    double value = 0.0;
    Vec gradient;  // with respect to Loop::flat()
};

/// Φ(u) = ∫₀¹ ½Ju·Mu + H*_α(−Ju) dt, quadrature on 8K nodes.
PhiValue phi_with_gradient(const Loop& u, const ConvexBody& body, double alpha);
double phi(const Loop& u, const ConvexBody& body, double alpha);

/// ∇²Φ in the coordinates of Loop::flat(), on the same quadrature grid.
Mat phi_hessian(const Loop& u, const ConvexBody& body, double alpha);

/// Φ at the critical loop of a characteristic with action A.
double phi_critical_value(double action, double alpha);

struct MorseData {
    int index = 0;
    int nullity = 0;
    int K_low = 0;   // the two truncations on which the counts agreed
    int K_high = 0;
};

/// (i(u), ν(u)) from the eigenvalues of ∇²Φ; repeated on growing truncations
/// until two successive ones agree.
MorseData morse_data(const Loop& u, const ConvexBody& body, double alpha, const Tolerances& tol);

/// Critical loop whose recovered orbit is c traversed once in unit time.
Loop loop_from_characteristic(const ClosedCharacteristic& c, const ConvexBody& body, double alpha, int K,
                              const Tolerances& tol);

struct SolverBudget {
    int restarts = 32;
    int K = 64;
    int K_search = 16;
    int max_iters = 400;
    double g_tol = 1e-8;
    std::uint64_t seed = 1;
};

SolverBudget budget_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SolverBudget& b);

struct CriticalPoint {
    Loop loop;  // prime loop
    double phi_value = 0.0;
    double gradient_norm = 0.0;
    MorseData morse;
    int multiplicity = 1;  // the converged loop covered the prime orbit this often
    ClosedCharacteristic orbit;
};

struct SearchResult {
    std::vector<CriticalPoint> points;  // sorted by Φ
    std::vector<std::string> diagnostics;
    int converged_restarts = 0;
};

/// Newton refinement of a loop toward ∇Φ = 0; returns the final gradient norm.
double polish_critical_point(Loop& u, const ConvexBody& body, double alpha, double g_tol, int max_iters);

/// Recovers the closed characteristic of a critical loop, reducing iterates to
/// the prime orbit. `multiplicity` receives the covering number.
ClosedCharacteristic recover_orbit(const Loop& u, const ConvexBody& body, double alpha, const Tolerances& tol,
                                   const std::string& label, int* multiplicity = nullptr, Loop* prime = nullptr);

/// Multistart search for critical points of Φ with S¹, Z₂ and iterate
/// duplicates removed.
SearchResult find_critical_points(const ConvexBody& body, double alpha, const SolverBudget& budget,
                                  const Tolerances& tol);

}  // namespace cchar
