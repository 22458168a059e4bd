#pragma once

#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "cchar/iteration.hpp"

namespace cchar::testing {

inline Mat random_symmetric(int dim, std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> g(0.0, scale);
    Mat s(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = i; j < dim; ++j) s(i, j) = s(j, i) = g(rng);
    return s;
}

// exp(J S) with S symmetric is symplectic
inline Mat random_symplectic(int n, std::mt19937_64& rng, double scale = 0.4) {
    return Mat((standard_j(n) * random_symmetric(2 * n, rng, scale)).exp());
}

// γ(t) = exp(t J S), a linear Hamiltonian flow
inline SymplecticPath linear_flow(const Mat& s, double tau, const Tolerances& tol) {
    const Mat a = standard_j(static_cast<int>(s.rows()) / 2) * s;
    return SymplecticPath::from_generator(tau, [a](double t) { return Mat((t * a).exp()); }, 17, tol);
}

inline SymplecticPath rotation_path(double theta, const Tolerances& tol) {
    return SymplecticPath::from_generator(1.0, [theta](double t) { return form_r(theta * t).matrix(); }, 9, tol);
}

// R(2πt) times the shear (1 0; ct 1): ends at a conjugate of N1(1, −c)
inline Mat sheared_turn(double c, double t) {
    Mat s = Mat::Identity(2, 2);
    s(1, 0) = c * t;
    return form_r(2 * 3.14159265358979323846 * t).matrix() * s;
}

}  // namespace cchar::testing
