#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cchar/path_index.hpp"

namespace cchar {

/// Strictly convex body containing the origin, described by its gauge j with
/// Σ = j⁻¹(1).
///
/// Ellipsoids E(r) have j(x)² = Σ_k (q_k² + p_k²)/r_k². Gauge-table bodies are
/// given by a boundary oracle F(x) = Σ w_i x_i² + β Σ x_i⁴ with Σ = F⁻¹(1);
/// their gauge is found by radial root-finding.
class ConvexBody {
public:
    enum class Kind { Ellipsoid, GaugeTable };

    static ConvexBody ellipsoid(std::vector<double> radii);
    static ConvexBody gauge_table(std::vector<double> quadratic, double quartic);

    Kind kind() const { return kind_; }
    int half_dim() const { return n_; }
    bool symmetric() const { return symmetric_; }
    const std::vector<double>& radii() const { return radii_; }
    const std::vector<double>& quadratic() const { return quadratic_; }
    double quartic() const { return quartic_; }

    double gauge(const Vec& x) const;
    Vec gauge_gradient(const Vec& x) const;
    Mat gauge_hessian(const Vec& x) const;

    /// Support-function gauge j°(y) = max{x·y : j(x) ≤ 1}. `argmax` receives
    /// the maximiser, which is also ∇j°(y).
    double polar_gauge(const Vec& y, Vec* argmax = nullptr) const;
    Mat polar_hessian(const Vec& y) const;

    /// Largest Euclidean distance between two points of Σ.
    double diameter() const;

private:
    double boundary(const Vec& x) const;
    Vec boundary_gradient(const Vec& x) const;
    Mat boundary_hessian(const Vec& x) const;

    Kind kind_ = Kind::Ellipsoid;
    int n_ = 0;
    bool symmetric_ = true;
    std::vector<double> radii_;
    std::vector<double> quadratic_;
    double quartic_ = 0.0;
};

ConvexBody body_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const ConvexBody& b);

struct HamiltonianValue {
    double value = 0.0;
    Vec gradient;
};

/// H_α = j^α and its gradient. Throws OriginSingularity near x = 0.
HamiltonianValue hamiltonian_alpha(const ConvexBody& body, double alpha, const Vec& x, const Tolerances& tol);
Mat hamiltonian_hessian(const ConvexBody& body, double alpha, const Vec& x, const Tolerances& tol);

struct FlowStats {
    int steps = 0;
    double max_drift = 0.0;         // |H_α − 1| before each reprojection
    double max_reprojection = 0.0;  // |j(y) − 1| removed by rescaling
    int resymplectifications = 0;
    double max_sympl_residual = 0.0;
};

/// Orbit samples with dense evaluation: `at` re-integrates from the nearest
/// stored sample.
class Trajectory {
public:
    Trajectory() = default;
    Trajectory(std::vector<double> times, std::vector<Vec> states, std::function<Vec(double)> eval)
        : times_(std::move(times)), states_(std::move(states)), eval_(std::move(eval)) {}

    const std::vector<double>& times() const { return times_; }
    const std::vector<Vec>& states() const { return states_; }
    Vec at(double t) const { return eval_(t); }

private:
    std::vector<double> times_;
    std::vector<Vec> states_;
    std::function<Vec(double)> eval_;
};

/// Integrates ẏ = JH'_α(y) from x0 ∈ Σ over [0, t_end].
Trajectory flow_orbit(const ConvexBody& body, double alpha, const Vec& x0, double t_end, const Tolerances& tol,
                      FlowStats* stats = nullptr);

struct ClosedCharacteristic {
    std::string label;
    double period = 0.0;
    double action = 0.0;
    double alpha = 1.5;
    Trajectory trajectory;
    SymplecticPath monodromy_path;
    bool symmetric_orbit = false;
    FlowStats stats;

    SymplecticMatrix monodromy() const { return monodromy_path.endpoint_symplectic(); }
};

/// Integrates the orbit through x0 together with its variational equation
/// over one period and validates closure and energy.
ClosedCharacteristic integrate_characteristic(const ConvexBody& body, double alpha, const Vec& x0, double period,
                                              const Tolerances& tol, std::string label);

/// The fundamental solution γ_y of ẇ = JH''_α(y(t))w over [0, τ].
SymplecticPath monodromy(const ConvexBody& body, double alpha, const ClosedCharacteristic& c, const Tolerances& tol);

/// A = ½∫₀^τ (q·ṗ − p·q̇) dt, ẏ from the Hamiltonian field; trapezoidal rule,
/// spectrally accurate for the periodic integrand.
double action(const ConvexBody& body, double alpha, const Trajectory& y, double period, const Tolerances& tol,
              int samples = 256);

bool detect_symmetric(const ClosedCharacteristic& c, const ConvexBody& body, const Tolerances& tol);

/// The n planar circles of E(r) with closed-form trajectory and monodromy path.
std::vector<ClosedCharacteristic> ellipsoid_characteristics(const std::vector<double>& radii, double alpha,
                                                            const Tolerances& tol);

/// Closed-form γ_y(t) for the circle in the plane of radius r_j.
Mat ellipsoid_monodromy(const std::vector<double>& radii, int j, double alpha, double t);

void write_trajectory_csv(std::ostream& os, const Trajectory& y, double period, int samples);

}  // namespace cchar
