#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cchar/path_index.hpp"

namespace cchar {

enum class OrbitClass { Elliptic, Hyperbolic, NondegenerateOther, IrrationallyElliptic, DegenerateOther };

std::string to_string(OrbitClass c);

/// Outcome of the continued-fraction test on x = θ/π.
struct Rationality {
    double value = 0.0;
    bool rational = false;
    long p = 0;
    long q = 1;
    double error = 0.0;  // |x − p/q| of the witness convergent
};

Rationality rationality(double x, int q_max, double tol);

struct AngleVerdict {
    double theta = 0.0;  // radians
    Rationality over_pi;
};

/// i(γ,m) and ν(γ,m) for arbitrary m from the ω-index profile of γ: i_ω is
/// constant on the arcs between eigenvalue angles of γ(τ), so summing i_ω over
/// the m-th roots of unity reduces to counting roots per arc.
class IterateTable {
public:
    static IterateTable from_path(const SymplecticPath& path, const Tolerances& tol);

    int index(long m) const;
    int nullity(long m) const;
    double mean_index() const;

    struct Cut {
        double angle = 0.0;  // in [0, 2π)
        int index = 0;       // i_ω at the eigenvalue
        int nullity = 0;
        std::optional<Rationality> over_two_pi;  // exact hit test when rational
    };
    const std::vector<Cut>& cuts() const { return cuts_; }
    const std::vector<int>& arcs() const { return arcs_; }  // arcs_[j] on (cut j, cut j+1)

private:
    bool hits(const Cut& c, long m, long* k) const;
    std::vector<Cut> cuts_;
    std::vector<int> arcs_;
};

struct IndexProfile {
    int n = 0;
    int m_max = 0;
    int direct_depth = 0;  // iterates up to here are indexed on γᵐ itself, the rest from the table
    std::map<int, int> i_of_m;
    std::map<int, int> nu_of_m;
    double mean_index = 0.0;
    double slope = 0.0;           // least-squares slope of i(γ,m) against m
    double slope_residual = 0.0;  // standard error of the slope relative to max(1, |slope|)
    std::optional<double> mean_index_exact;  // average of i_ω over the unit circle
    int s_plus = 0;
    int s_minus = 0;
    int elliptic_height = 0;
    OrbitClass classification = OrbitClass::DegenerateOther;
    std::vector<AngleVerdict> rotation_angles;
    std::optional<IterateTable> table;  // i(γ,m), ν(γ,m) beyond m_max
};

/// i(γ,m) and ν(γ,m) for 1 ≤ m ≤ m_max. All iterates share one pass over the
/// nodes of γ^{m_max}; each i(γ,m) equals omega_index(iterate_path(γ,m), 1).
void index_iterates(const SymplecticPath& path, int m_max, const Tolerances& tol, IndexProfile& profile);

/// Σ_{ω^m = 1} i_ω(γ). Independent cross-check of i(γ,m).
int bott_sum_oracle(const SymplecticPath& path, int m, const Tolerances& tol);

/// (1/2π)∫ i_ω(γ) dω over the unit circle; i_ω is constant between the
/// eigenvalue angles of γ(τ), so one evaluation per arc suffices.
double mean_index_exact(const SymplecticPath& path, const Tolerances& tol);

/// Fills slope, residual and mean_index from i_of_m; the exact average replaces
/// the slope when `table` is given. Throws SlopeUnstable when the residual
/// exceeds tol.slope.
void mean_index(IndexProfile& profile, const IterateTable* table, const Tolerances& tol);

struct Splitting {
    int plus = 0;
    int minus = 0;
};

Splitting splitting_numbers(const SymplecticPath& path, Complex omega, const Tolerances& tol);

OrbitClass classify(const SymplecticMatrix& m, const Tolerances& tol, std::vector<AngleVerdict>* angles = nullptr);

/// Complete profile: iterates, mean index, S±(1), e(γ(τ)) and classification.
/// The iterate table is checked against the directly computed i(γ,m), ν(γ,m)
/// for every m ≤ m_max.
IndexProfile build_profile(const SymplecticPath& path, int m_max, const Tolerances& tol);

void to_json(nlohmann::json& j, const Rationality& r);
void to_json(nlohmann::json& j, const IndexProfile& p);

}  // namespace cchar
