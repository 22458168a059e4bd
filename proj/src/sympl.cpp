#include "cchar/sympl.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

int find_root(std::vector<int>& parent, int i) {
    while (parent[i] != i) {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    return i;
}

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a < 0) a += kTwoPi;
    return a;
}

// Orthonormal basis of the numerical null space of a, as columns.
template <typename M>
M null_basis(const M& a, int expected, double threshold) {
    Eigen::JacobiSVD<M> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    int count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) <= threshold) ++count;
    count += static_cast<int>(a.cols() - s.size());
    if (expected >= 0 && count != expected) {
        std::ostringstream os;
        os << "null space has dimension " << count << ", expected " << expected;
        throw DecompositionAmbiguity(os.str());
    }
    return svd.matrixV().rightCols(count);
}

}  // namespace

Mat standard_j(int n) {
    Mat j = Mat::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n) = -Mat::Identity(n, n);
    j.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return j;
}

double symplectic_residual(const Mat& m) {
    const Mat j = standard_j(static_cast<int>(m.rows()) / 2);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m.transpose() * j * m - j).cwiseAbs().maxCoeff() / (scale * scale);
}

SymplecticMatrix make_symplectic(const Mat& raw, double tol) {
    if (raw.rows() != raw.cols() || raw.rows() % 2 != 0 || raw.rows() == 0)
        throw SymplecticViolation("matrix must be square with positive even dimension");
    const double r = symplectic_residual(raw);
    if (!(r <= tol)) {
        std::ostringstream os;
        os << "residual " << r << " exceeds " << tol;
        throw SymplecticViolation(os.str());
    }
    SymplecticMatrix s;
    s.m_ = raw;
    s.residual_ = r;
    return s;
}

SymplecticMatrix trust_symplectic(Mat raw) {
    SymplecticMatrix s;
    s.residual_ = symplectic_residual(raw);
    s.m_ = std::move(raw);
    return s;
}

SymplecticMatrix SymplecticMatrix::operator*(const SymplecticMatrix& other) const {
    return trust_symplectic(m_ * other.m_);
}

SymplecticMatrix SymplecticMatrix::inverse() const {
    const Mat j = standard_j(half_dim());
    return trust_symplectic(-j * m_.transpose() * j);
}

SymplecticMatrix SymplecticMatrix::pow(int k) const {
    if (k < 0) return inverse().pow(-k);
    Mat result = Mat::Identity(dim(), dim());
    Mat base = m_;
    while (k > 0) {
        if (k & 1) result = result * base;
        base = base * base;
        k >>= 1;
    }
    return trust_symplectic(std::move(result));
}

SymplecticMatrix SymplecticMatrix::identity(int n) {
    return trust_symplectic(Mat::Identity(2 * n, 2 * n));
}

SymplecticMatrix diamond(const SymplecticMatrix& a, const SymplecticMatrix& b) {
    const int n1 = a.half_dim(), n2 = b.half_dim(), n = n1 + n2;
    const Mat& x = a.matrix();
    const Mat& y = b.matrix();
    Mat out = Mat::Zero(2 * n, 2 * n);
    // A, B, C, D blocks of the first factor
    out.block(0, 0, n1, n1) = x.block(0, 0, n1, n1);
    out.block(0, n, n1, n1) = x.block(0, n1, n1, n1);
    out.block(n, 0, n1, n1) = x.block(n1, 0, n1, n1);
    out.block(n, n, n1, n1) = x.block(n1, n1, n1, n1);
    // and of the second
    out.block(n1, n1, n2, n2) = y.block(0, 0, n2, n2);
    out.block(n1, n + n1, n2, n2) = y.block(0, n2, n2, n2);
    out.block(n + n1, n1, n2, n2) = y.block(n2, 0, n2, n2);
    out.block(n + n1, n + n1, n2, n2) = y.block(n2, n2, n2, n2);
    return trust_symplectic(std::move(out));
}

SymplecticMatrix diamond_power(const SymplecticMatrix& a, int k) {
    SymplecticMatrix out = a;
    for (int i = 1; i < k; ++i) out = diamond(out, a);
    return out;
}

SymplecticMatrix form_d(double lambda) {
    Mat m(2, 2);
    m << lambda, 0.0, 0.0, 1.0 / lambda;
    return trust_symplectic(std::move(m));
}

SymplecticMatrix form_n1(double lambda, double b) {
    Mat m(2, 2);
    m << lambda, b, 0.0, lambda;
    return trust_symplectic(std::move(m));
}

SymplecticMatrix form_r(double theta) {
    Mat m(2, 2);
    m << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return trust_symplectic(std::move(m));
}

SymplecticMatrix rotation_j(int n, double s) {
    Mat m = std::cos(s) * Mat::Identity(2 * n, 2 * n) + std::sin(s) * standard_j(n);
    return trust_symplectic(std::move(m));
}

int nullity(const Mat& m, Complex omega, const Tolerances& tol) {
    const Eigen::Index d = m.rows();
    CMat a = m.cast<Complex>() - omega * CMat::Identity(d, d);
    Eigen::JacobiSVD<CMat> svd(a);
    const auto& s = svd.singularValues();
    const double threshold = tol.rank * std::max(1.0, m.cwiseAbs().maxCoeff());
    int count = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s(i) <= threshold) ++count;
    return count;
}

double UnitEigen::angle() const { return wrap_angle(std::arg(omega)); }

int UnitSpectrum::total_alg() const {
    int t = 0;
    for (const auto& e : entries) t += e.alg_mult;
    return t;
}

const UnitEigen* UnitSpectrum::find(Complex omega, double tol) const {
    for (const auto& e : entries)
        if (std::abs(e.omega - omega) <= tol) return &e;
    return nullptr;
}

std::vector<EigenCluster> eigen_clusters(const Mat& m, const Tolerances& tol) {
    Eigen::EigenSolver<Mat> es(m, false);
    const CVec ev = es.eigenvalues();
    const int d = static_cast<int>(ev.size());

    std::vector<int> parent(d);
    std::iota(parent.begin(), parent.end(), 0);
    for (int i = 0; i < d; ++i)
        for (int k = i + 1; k < d; ++k)
            if (std::abs(ev(i) - ev(k)) < tol.cluster_gap * std::max(1.0, std::abs(ev(i))))
                parent[find_root(parent, i)] = find_root(parent, k);

    std::vector<EigenCluster> clusters;
    std::vector<int> index_of(d, -1);
    for (int i = 0; i < d; ++i) {
        const int r = find_root(parent, i);
        if (index_of[r] < 0) {
            index_of[r] = static_cast<int>(clusters.size());
            clusters.push_back({});
        }
        auto& c = clusters[index_of[r]];
        c.center += ev(i);
        ++c.size;
    }
    for (auto& c : clusters) {
        c.center /= static_cast<double>(c.size);
        c.on_circle = std::abs(std::abs(c.center) - 1.0) <= tol.circle;
    }

    // reciprocal-pair consistency: λ and 1/λ̄ must land on the same side
    for (auto& c : clusters) {
        if (!c.on_circle) continue;
        const Complex partner = 1.0 / std::conj(c.center);
        for (auto& other : clusters) {
            if (&other == &c || other.on_circle) continue;
            if (std::abs(other.center - partner) < tol.cluster_gap) {
                const double dev = std::abs(std::abs(c.center) - 1.0);
                if (dev >= 0.5 * tol.circle) {
                    std::ostringstream os;
                    os << "eigenvalue " << c.center << " sits on the circle boundary but its reciprocal "
                       << other.center << " is off-circle";
                    throw SpectralAmbiguity(os.str());
                }
                c.on_circle = false;
            }
        }
    }
    return clusters;
}

UnitSpectrum unit_circle_spectrum(const SymplecticMatrix& m, const Tolerances& tol) {
    const auto clusters = eigen_clusters(m.matrix(), tol);
    UnitSpectrum spec;
    std::vector<UnitEigen> upper, lower;
    for (const auto& c : clusters) {
        if (!c.on_circle) {
            spec.off_circle += c.size;
            continue;
        }
        Complex w = c.center / std::abs(c.center);
        if (std::abs(w.imag()) <= tol.cluster_gap) w = Complex(w.real() > 0 ? 1.0 : -1.0, 0.0);
        UnitEigen e{w, c.size, 0};
        if (w.imag() > 0)
            upper.push_back(e);
        else if (w.imag() < 0)
            lower.push_back(e);
        else
            spec.entries.push_back(e);
    }
    // conjugate symmetrization
    if (upper.size() != lower.size())
        throw SpectralAmbiguity("unit-circle eigenvalues do not come in conjugate pairs");
    std::vector<bool> used(lower.size(), false);
    for (auto& u : upper) {
        int best = -1;
        double best_d = 1e300;
        for (std::size_t k = 0; k < lower.size(); ++k) {
            if (used[k]) continue;
            const double dist = std::abs(lower[k].omega - std::conj(u.omega));
            if (dist < best_d) best_d = dist, best = static_cast<int>(k);
        }
        if (best < 0 || lower[best].alg_mult != u.alg_mult || best_d > 10 * tol.cluster_gap)
            throw SpectralAmbiguity("conjugate partner of a unit-circle eigenvalue is missing");
        used[best] = true;
        const Complex w = 0.5 * (u.omega + std::conj(lower[best].omega));
        u.omega = w / std::abs(w);
        spec.entries.push_back(u);
        spec.entries.push_back({std::conj(u.omega), u.alg_mult, 0});
    }
    for (auto& e : spec.entries) {
        e.geo_mult = nullity(m.matrix(), e.omega, tol);
        if (e.geo_mult < 1 || e.geo_mult > e.alg_mult) {
            std::ostringstream os;
            os << "geometric multiplicity " << e.geo_mult << " of " << e.omega
               << " inconsistent with algebraic multiplicity " << e.alg_mult;
            throw SpectralAmbiguity(os.str());
        }
    }
    std::sort(spec.entries.begin(), spec.entries.end(),
              [](const UnitEigen& a, const UnitEigen& b) { return a.angle() < b.angle(); });
    return spec;
}

int elliptic_height(const SymplecticMatrix& m, const Tolerances& tol) {
    return unit_circle_spectrum(m, tol).total_alg();
}

namespace {

struct RealJordanCounts {
    int minus = 0;  // N1(λ, 1)
    int zero = 0;   // λ I₂
    int plus = 0;   // N1(λ, −1)
};

// Jordan structure of the real eigenvalue λ = ±1 with algebraic multiplicity alg
// and kernel dimension geo. Chains of length 2 are classified by the sign of the
// pairing v·Jw with (M − λI)w = v.
RealJordanCounts classify_real_jordan(const Mat& m, double lambda, int alg, int geo,
                                      const Tolerances& tol) {
    if (alg % 2 != 0) throw DecompositionAmbiguity("odd algebraic multiplicity at ±1");
    if (2 * geo < alg)
        throw DecompositionAmbiguity("Jordan chains longer than two at ±1");
    RealJordanCounts out;
    out.zero = geo - alg / 2;
    const int chains = alg - geo;
    if (chains == 0) return out;

    const Eigen::Index d = m.rows();
    const Mat a = m - lambda * Mat::Identity(d, d);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const Mat w = null_basis<Mat>(a * a, alg, std::sqrt(tol.rank) * scale * scale);
    const Mat j = standard_j(static_cast<int>(d) / 2);
    Mat g = (a * w).transpose() * j * w;
    g = 0.5 * (g + g.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + alg);
    std::sort(ev.begin(), ev.end(), [](double x, double y) { return std::abs(x) > std::abs(y); });
    const double smallest_kept = std::abs(ev[chains - 1]);
    const double largest_dropped = chains < alg ? std::abs(ev[chains]) : 0.0;
    if (smallest_kept < 1e3 * largest_dropped || smallest_kept < tol.rank * scale)
        throw DecompositionAmbiguity("sign of the Jordan pairing form at ±1 is not determined");
    for (int i = 0; i < chains; ++i) (ev[i] < 0 ? out.minus : out.plus)++;
    return out;
}

}  // namespace

std::string to_string(NormalFormFactor::Kind k) {
    switch (k) {
        case NormalFormFactor::Kind::D: return "D";
        case NormalFormFactor::Kind::N1: return "N1";
        case NormalFormFactor::Kind::R: return "R";
        case NormalFormFactor::Kind::N2: return "N2";
        case NormalFormFactor::Kind::ResidualG: return "G";
    }
    return "?";
}

NormalFormDecomposition normal_form_decompose(const SymplecticMatrix& m, const Tolerances& tol) {
    const Mat& mm = m.matrix();
    const auto clusters = eigen_clusters(mm, tol);
    const UnitSpectrum spec = unit_circle_spectrum(m, tol);
    NormalFormDecomposition out;

    auto push_n1 = [&](double lambda, double b, int count) {
        for (int i = 0; i < count; ++i) {
            NormalFormFactor f;
            f.kind = NormalFormFactor::Kind::N1;
            f.lambda = lambda;
            f.b = b;
            f.block = form_n1(lambda, b);
            out.factors.push_back(f);
        }
    };

    for (double lambda : {1.0, -1.0}) {
        const UnitEigen* e = spec.find(Complex(lambda, 0.0), 1e-12);
        if (!e) continue;
        const auto c = classify_real_jordan(mm, lambda, e->alg_mult, e->geo_mult, tol);
        if (lambda > 0) {
            out.p_minus = c.minus;
            out.p_zero = c.zero;
            out.p_plus = c.plus;
        }
        push_n1(lambda, 1.0, c.minus);
        push_n1(lambda, 0.0, c.zero);
        push_n1(lambda, -1.0, c.plus);
    }

    const Eigen::Index d = mm.rows();
    const Mat j = standard_j(static_cast<int>(d) / 2);
    for (const auto& e : spec.entries) {
        if (e.omega.imag() <= 0) continue;
        const double theta = e.angle();
        if (e.geo_mult < e.alg_mult) {
            // non-semisimple circle eigenvalue off ±1: not synthesised as N2
            out.warning = true;
            for (int i = 0; i < e.alg_mult; ++i) {
                NormalFormFactor f;
                f.kind = NormalFormFactor::Kind::ResidualG;
                f.theta = theta;
                f.non_semisimple = true;
                f.block = form_r(theta);
                out.factors.push_back(f);
            }
            continue;
        }
        CMat a = mm.cast<Complex>() - e.omega * CMat::Identity(d, d);
        const CMat x = null_basis<CMat>(a, e.geo_mult, tol.rank * std::max(1.0, mm.cwiseAbs().maxCoeff()));
        CMat krein = x.adjoint() * (Complex(0, -1) * j.cast<Complex>()) * x;
        krein = 0.5 * (krein + krein.adjoint()).eval();
        Eigen::SelfAdjointEigenSolver<CMat> es(krein);
        for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
            const double k = es.eigenvalues()(i);
            if (std::abs(k) < tol.rank) throw DecompositionAmbiguity("degenerate Krein form on the unit circle");
            NormalFormFactor f;
            f.kind = NormalFormFactor::Kind::R;
            f.theta = k > 0 ? theta : kTwoPi - theta;
            f.block = form_r(f.theta);
            out.factors.push_back(f);
        }
    }

    for (const auto& c : clusters) {
        if (c.on_circle || std::abs(c.center) < 1.0) continue;
        const bool real = std::abs(c.center.imag()) <= tol.cluster_gap;
        if (real) {
            for (int i = 0; i < c.size; ++i) {
                NormalFormFactor f;
                f.kind = NormalFormFactor::Kind::D;
                f.lambda = c.center.real() > 0 ? 2.0 : -2.0;
                f.block = form_d(f.lambda);
                out.factors.push_back(f);
            }
        } else if (c.center.imag() > 0) {
            // complex quadruple ρe^{±iφ}, ρ⁻¹e^{±iφ}
            Mat a = std::abs(c.center) * form_r(std::arg(c.center)).matrix();
            Mat g = Mat::Zero(4, 4);
            g.topLeftCorner(2, 2) = a;
            g.bottomRightCorner(2, 2) = a.inverse().transpose();
            for (int i = 0; i < c.size; ++i) {
                NormalFormFactor f;
                f.kind = NormalFormFactor::Kind::ResidualG;
                f.block = trust_symplectic(g);
                out.factors.push_back(f);
            }
        }
    }
    return out;
}

SymplecticMatrix NormalFormDecomposition::product() const {
    if (factors.empty()) return SymplecticMatrix{};
    SymplecticMatrix p = factors.front().block;
    for (std::size_t i = 1; i < factors.size(); ++i) p = diamond(p, factors[i].block);
    return p;
}

std::vector<double> NormalFormDecomposition::rotation_angles() const {
    std::vector<double> out;
    for (const auto& f : factors)
        if (f.kind == NormalFormFactor::Kind::R) out.push_back(f.theta);
    return out;
}

nlohmann::json matrix_to_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

Mat matrix_from_json(const nlohmann::json& rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    if (r == 0) return Mat();
    const auto c = static_cast<Eigen::Index>(rows.at(0).size());
    Mat m(r, c);
    for (Eigen::Index i = 0; i < r; ++i) {
        if (static_cast<Eigen::Index>(rows.at(i).size()) != c)
            throw SymplecticViolation("ragged matrix rows");
        for (Eigen::Index k = 0; k < c; ++k) m(i, k) = rows.at(i).at(k).get<double>();
    }
    return m;
}

void to_json(nlohmann::json& j, const SymplecticMatrix& m) {
    j = nlohmann::json{{"n", m.half_dim()}, {"rows", matrix_to_json(m.matrix())}};
}

SymplecticMatrix symplectic_from_json(const nlohmann::json& j, double tol) {
    const int n = j.at("n").get<int>();
    Mat m = matrix_from_json(j.at("rows"));
    if (m.rows() != 2 * n) throw SymplecticViolation("row count does not match 2n");
    return make_symplectic(m, tol);
}

}  // namespace cchar
