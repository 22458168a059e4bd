#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cchar/tolerances.hpp"

namespace cchar {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Complex = std::complex<double>;

/// Standard symplectic matrix J = (0 −I_n; I_n 0) of size 2n.
Mat standard_j(int n);

/// ‖MᵀJM − J‖_max, scaled by max(1, ‖M‖²_max) so long iterates of sheared
/// monodromies are judged relative to their size.
double symplectic_residual(const Mat& m);

/// A 2n×2n real matrix that passed the symplectic gate. Immutable.
class SymplecticMatrix {
public:
    SymplecticMatrix() = default;

    int half_dim() const { return static_cast<int>(m_.rows()) / 2; }
    int dim() const { return static_cast<int>(m_.rows()); }
    const Mat& matrix() const { return m_; }
    double residual() const { return residual_; }

    SymplecticMatrix operator*(const SymplecticMatrix& other) const;
    SymplecticMatrix inverse() const;  // −J Mᵀ J, exact for symplectic M
    SymplecticMatrix pow(int k) const;

    static SymplecticMatrix identity(int n);

private:
    friend SymplecticMatrix make_symplectic(const Mat& raw, double tol);
    friend SymplecticMatrix trust_symplectic(Mat raw);
    Mat m_;
    double residual_ = 0.0;
};

/// Validation gate. Throws SymplecticViolation when the residual exceeds tol.
SymplecticMatrix make_symplectic(const Mat& raw, double tol);

/// Wraps a matrix produced by an exactly structure-preserving construction
/// (products and ⋄-products of validated factors); records the residual.
SymplecticMatrix trust_symplectic(Mat raw);

/// Block-interleaving product: A-blocks of both factors on the diagonal of the
/// first n₁+n₂ coordinates, B-, C-, D-blocks placed correspondingly.
SymplecticMatrix diamond(const SymplecticMatrix& a, const SymplecticMatrix& b);
SymplecticMatrix diamond_power(const SymplecticMatrix& a, int k);

// Basic normal forms.
SymplecticMatrix form_d(double lambda);             // diag(λ, 1/λ)
SymplecticMatrix form_n1(double lambda, double b);  // (λ b; 0 λ)
SymplecticMatrix form_r(double theta);              // rotation by θ
SymplecticMatrix rotation_j(int n, double s);       // e^{sJ} = cos s I + sin s J

/// ν_ω(M) = dim_C ker(M − ωI), by singular values.
int nullity(const Mat& m, Complex omega, const Tolerances& tol);

struct UnitEigen {
    Complex omega;
    int alg_mult = 0;
    int geo_mult = 0;
    double angle() const;  // in [0, 2π)
};

struct UnitSpectrum {
    std::vector<UnitEigen> entries;  // sorted by angle in [0, 2π)
    int off_circle = 0;
    int total_alg() const;
    const UnitEigen* find(Complex omega, double tol) const;
};

/// One cluster of the full eigenvalue multiset; used by the decomposer.
struct EigenCluster {
    Complex center;
    int size = 0;
    bool on_circle = false;
};

std::vector<EigenCluster> eigen_clusters(const Mat& m, const Tolerances& tol);
UnitSpectrum unit_circle_spectrum(const SymplecticMatrix& m, const Tolerances& tol);
int elliptic_height(const SymplecticMatrix& m, const Tolerances& tol);

struct NormalFormFactor {
    enum class Kind { D, N1, R, N2, ResidualG };
    Kind kind = Kind::ResidualG;
    double lambda = 0.0;  // D, N1
    double b = 0.0;       // N1
    double theta = 0.0;   // R, N2 (radians)
    bool non_semisimple = false;
    SymplecticMatrix block;
};

struct NormalFormDecomposition {
    std::vector<NormalFormFactor> factors;
    int p_minus = 0;  // N1(1,1) blocks
    int p_zero = 0;   // I₂ blocks
    int p_plus = 0;   // N1(1,−1) blocks
    bool warning = false;
    SymplecticMatrix product() const;
    std::vector<double> rotation_angles() const;  // θ of every R factor
};

NormalFormDecomposition normal_form_decompose(const SymplecticMatrix& m, const Tolerances& tol);

std::string to_string(NormalFormFactor::Kind k);

void to_json(nlohmann::json& j, const SymplecticMatrix& m);
SymplecticMatrix symplectic_from_json(const nlohmann::json& j, double tol);
nlohmann::json matrix_to_json(const Mat& m);
Mat matrix_from_json(const nlohmann::json& j);

}  // namespace cchar
