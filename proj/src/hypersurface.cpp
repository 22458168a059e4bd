#include "cchar/hypersurface.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/tools/roots.hpp>
#include <boost/numeric/odeint.hpp>

#include "cchar/errors.hpp"

namespace cchar {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kResymplectifyEvery = 16;

Vec diag_inverse_squares(const std::vector<double>& radii) {
    const int n = static_cast<int>(radii.size());
    Vec d(2 * n);
    for (int k = 0; k < n; ++k) d(k) = d(n + k) = 1.0 / (radii[k] * radii[k]);
    return d;
}

// Fourth-order central difference of a vector field (Richardson on two steps).
template <typename F>
Mat richardson_jacobian(const F& f, const Vec& x) {
    const Eigen::Index d = x.size();
    const double h = 1e-3 * std::max(1.0, x.norm());
    Mat out(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Vec e = Vec::Zero(d);
        e(i) = 1.0;
        const Vec d1 = (f(x + h * e) - f(x - h * e)) / (2 * h);
        const Vec d2 = (f(x + 0.5 * h * e) - f(x - 0.5 * h * e)) / h;
        out.col(i) = (4 * d2 - d1) / 3;
    }
    return 0.5 * (out + out.transpose());
}

}  // namespace

ConvexBody ConvexBody::ellipsoid(std::vector<double> radii) {
    if (radii.empty()) throw ConfigError("ellipsoid needs at least one radius");
    for (double r : radii)
        if (!(r > 0) || !std::isfinite(r)) throw ConfigError("ellipsoid radii must be positive");
    ConvexBody b;
    b.kind_ = Kind::Ellipsoid;
    b.n_ = static_cast<int>(radii.size());
    b.radii_ = std::move(radii);
    return b;
}

ConvexBody ConvexBody::gauge_table(std::vector<double> quadratic, double quartic) {
    if (quadratic.empty() || quadratic.size() % 2 != 0)
        throw ConfigError("gauge-table needs an even number of quadratic weights");
    for (double w : quadratic)
        if (!(w > 0) || !std::isfinite(w)) throw ConfigError("gauge-table quadratic weights must be positive");
    if (!(quartic >= 0) || !std::isfinite(quartic)) throw ConfigError("gauge-table quartic weight must be >= 0");
    ConvexBody b;
    b.kind_ = Kind::GaugeTable;
    b.n_ = static_cast<int>(quadratic.size()) / 2;
    b.quadratic_ = std::move(quadratic);
    b.quartic_ = quartic;
    return b;
}

double ConvexBody::boundary(const Vec& x) const {
    double s = 0;
    for (Eigen::Index i = 0; i < x.size(); ++i) s += quadratic_[i] * x(i) * x(i) + quartic_ * std::pow(x(i), 4);
    return s;
}

Vec ConvexBody::boundary_gradient(const Vec& x) const {
    Vec g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) g(i) = 2 * quadratic_[i] * x(i) + 4 * quartic_ * std::pow(x(i), 3);
    return g;
}

Mat ConvexBody::boundary_hessian(const Vec& x) const {
    Vec d(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) d(i) = 2 * quadratic_[i] + 12 * quartic_ * x(i) * x(i);
    return d.asDiagonal();
}

double ConvexBody::gauge(const Vec& x) const {
    if (kind_ == Kind::Ellipsoid) return std::sqrt(x.dot(diag_inverse_squares(radii_).asDiagonal() * x));
    const double nx = x.norm();
    if (nx == 0.0) return 0.0;
    // j(x) = 1/s where F(s x) = 1; F(s x) − 1 increases from −1 at s = 0
    const Vec u = x / nx;
    const auto g = [&](double s) { return boundary(s * u) - 1.0; };
    double hi = 1.0;
    while (g(hi) < 0) hi *= 2;
    double lo = hi / 2;
    while (lo > 1e-300 && g(lo) > 0) lo /= 2;
    std::uintmax_t iters = 200;
    const auto r = boost::math::tools::toms748_solve(g, lo, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    return nx / (0.5 * (r.first + r.second));
}

Vec ConvexBody::gauge_gradient(const Vec& x) const {
    const double j = gauge(x);
    if (kind_ == Kind::Ellipsoid) return diag_inverse_squares(radii_).asDiagonal() * x / j;
    const Vec z = x / j;
    const Vec g = boundary_gradient(z);
    return g / g.dot(z);
}

Mat ConvexBody::gauge_hessian(const Vec& x) const {
    if (kind_ == Kind::Ellipsoid) {
        const double j = gauge(x);
        const Vec d = diag_inverse_squares(radii_);
        const Vec dx = d.asDiagonal() * x;
        return (Mat(d.asDiagonal()) - dx * dx.transpose() / (j * j)) / j;
    }
    return richardson_jacobian([this](const Vec& v) { return gauge_gradient(v); }, x);
}

double ConvexBody::polar_gauge(const Vec& y, Vec* argmax) const {
    if (kind_ == Kind::Ellipsoid) {
        Vec r2(2 * n_);
        for (int k = 0; k < n_; ++k) r2(k) = r2(n_ + k) = radii_[k] * radii_[k];
        const double v = std::sqrt(y.dot(r2.asDiagonal() * y));
        if (argmax) *argmax = r2.asDiagonal() * y / v;
        return v;
    }
    // Newton on the Lagrange conditions ∇F(x) = μy, F(x) = 1, started from
    // the boundary point in the direction of y.
    const Eigen::Index d = y.size();
    Vec x = y / gauge(y);
    Vec gx = boundary_gradient(x);
    double mu = gx.dot(x) / y.dot(x);
    for (int it = 0; it < 60; ++it) {
        gx = boundary_gradient(x);
        Vec rhs(d + 1);
        rhs.head(d) = -(gx - mu * y);
        rhs(d) = -(boundary(x) - 1.0);
        if (rhs.lpNorm<Eigen::Infinity>() < 1e-15 * std::max(1.0, gx.norm())) {
            if (argmax) *argmax = x;
            return x.dot(y);
        }
        Mat a = Mat::Zero(d + 1, d + 1);
        a.topLeftCorner(d, d) = boundary_hessian(x);
        a.topRightCorner(d, 1) = -y;
        a.bottomLeftCorner(1, d) = gx.transpose();
        const Vec step = a.fullPivLu().solve(rhs);
        double damp = 1.0;
        while (damp > 1e-4 && (x + damp * step.head(d)).dot(y) <= 0) damp /= 2;
        x += damp * step.head(d);
        mu += damp * step(d);
        // keep the iterate on Σ
        x /= gauge(x);
    }
    throw DualGaugeNonConvergence("support point of the gauge-table body did not converge");
}

Mat ConvexBody::polar_hessian(const Vec& y) const {
    if (kind_ == Kind::Ellipsoid) {
        Vec r2(2 * n_);
        for (int k = 0; k < n_; ++k) r2(k) = r2(n_ + k) = radii_[k] * radii_[k];
        const double v = polar_gauge(y);
        const Vec ry = r2.asDiagonal() * y;
        return (Mat(r2.asDiagonal()) - ry * ry.transpose() / (v * v)) / v;
    }
    return richardson_jacobian(
        [this](const Vec& v) {
            Vec g;
            polar_gauge(v, &g);
            return g;
        },
        y);
}

double ConvexBody::diameter() const {
    if (kind_ == Kind::Ellipsoid) return 2 * *std::max_element(radii_.begin(), radii_.end());
    double best = 0;
    for (int i = 0; i < 2 * n_; ++i) {
        Vec e = Vec::Zero(2 * n_);
        e(i) = 1.0;
        best = std::max(best, 1.0 / gauge(e));
    }
    return 2 * best;
}

ConvexBody body_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "ellipsoid") return ConvexBody::ellipsoid(j.at("radii").get<std::vector<double>>());
    if (kind == "gauge-table")
        return ConvexBody::gauge_table(j.at("quadratic").get<std::vector<double>>(), j.value("quartic", 0.0));
    throw ConfigError("unknown body kind '" + kind + "'");
}

void to_json(nlohmann::json& j, const ConvexBody& b) {
    if (b.kind() == ConvexBody::Kind::Ellipsoid)
        j = nlohmann::json{{"kind", "ellipsoid"}, {"radii", b.radii()}};
    else
        j = nlohmann::json{{"kind", "gauge-table"}, {"quadratic", b.quadratic()}, {"quartic", b.quartic()}};
}

HamiltonianValue hamiltonian_alpha(const ConvexBody& body, double alpha, const Vec& x, const Tolerances& tol) {
    if (x.norm() < tol.x_min) throw OriginSingularity("H_alpha gradient requested at the origin");
    const double j = body.gauge(x);
    return {std::pow(j, alpha), alpha * std::pow(j, alpha - 1) * body.gauge_gradient(x)};
}

Mat hamiltonian_hessian(const ConvexBody& body, double alpha, const Vec& x, const Tolerances& tol) {
    if (x.norm() < tol.x_min) throw OriginSingularity("H_alpha Hessian requested at the origin");
    const double j = body.gauge(x);
    const Vec g = body.gauge_gradient(x);
    return alpha * std::pow(j, alpha - 1) * body.gauge_hessian(x) +
           alpha * (alpha - 1) * std::pow(j, alpha - 2) * g * g.transpose();
}

namespace {

using State = std::vector<double>;

// Orbit (first 2n entries) optionally followed by the column-major 2n×2n
// fundamental matrix of the variational equation.
class FlowIntegrator {
public:
    FlowIntegrator(const ConvexBody& body, double alpha, const Tolerances& tol, bool variational)
        : body_(body), alpha_(alpha), tol_(tol), d_(2 * body.half_dim()), variational_(variational),
          j_(standard_j(body.half_dim())) {}

    void operator()(const State& s, State& ds, double) const {
        const Eigen::Map<const Vec> y(s.data(), d_);
        const Vec grad = hamiltonian_alpha(body_, alpha_, y, tol_).gradient;
        Eigen::Map<Vec>(ds.data(), d_) = j_ * grad;
        if (!variational_) return;
        const Mat a = j_ * hamiltonian_hessian(body_, alpha_, y, tol_);
        const Eigen::Map<const Mat> g(s.data() + d_, d_, d_);
        Eigen::Map<Mat>(ds.data() + d_, d_, d_) = a * g;
    }

    std::size_t size() const { return variational_ ? d_ + d_ * d_ : d_; }

    // Advances s from t0 to t1; `visit(t, s)` sees every accepted, pinned step.
    template <typename Visit>
    void run(State& s, double t0, double t1, double dt_max, FlowStats& stats, Visit visit) const {
        namespace odeint = boost::numeric::odeint;
        auto stepper = odeint::make_controlled(tol_.integrator, tol_.integrator,
                                               odeint::runge_kutta_fehlberg78<State>());
        double t = t0;
        double dt = std::min(dt_max, (t1 - t0) / 4);
        int since_fix = 0, rejects = 0;
        while (t < t1) {
            const bool last = t + dt >= t1;
            double h = last ? t1 - t : dt;
            const double t_before = t;
            const auto result = stepper.try_step(std::cref(*this), s, t, h);
            if (result == odeint::fail) {
                dt = h;
                if (++rejects > 200 || dt < 1e-14 * std::max(1.0, t1)) {
                    std::ostringstream os;
                    os << "integrator cannot advance past t = " << t;
                    throw StepFailure(os.str());
                }
                continue;
            }
            rejects = 0;
            if (last && t_before + h >= t1) t = t1;
            dt = std::min(h, dt_max);
            pin(s, stats);
            if (variational_ && ++since_fix == kResymplectifyEvery) {
                resymplectify(s);
                ++stats.resymplectifications;
                since_fix = 0;
            }
            ++stats.steps;
            visit(t, s);
        }
    }

    void pin(State& s, FlowStats& stats) const {
        Eigen::Map<Vec> y(s.data(), d_);
        const double jv = body_.gauge(y);
        const double drift = std::abs(std::pow(jv, alpha_) - 1.0);
        stats.max_drift = std::max(stats.max_drift, drift);
        if (drift > tol_.drift_cap) {
            std::ostringstream os;
            os << "energy drift " << drift << " exceeds cap " << tol_.drift_cap;
            throw EnergyDrift(os.str());
        }
        stats.max_reprojection = std::max(stats.max_reprojection, std::abs(jv - 1.0));
        y /= jv;
    }

    // M ← M (−J Mᵀ J M)^{−1/2}, truncated series; removes the first-order
    // departure from Sp(2n).
    void resymplectify(State& s) const {
        Eigen::Map<Mat> g(s.data() + d_, d_, d_);
        const Mat e = -j_ * g.transpose() * j_ * g - Mat::Identity(d_, d_);
        g = g * (Mat::Identity(d_, d_) - 0.5 * e + 0.375 * e * e);
    }

    int dim() const { return d_; }

private:
    const ConvexBody& body_;
    double alpha_;
    Tolerances tol_;
    int d_;
    bool variational_;
    Mat j_;
};

struct StoredFlow {
    ConvexBody body;
    double alpha;
    Tolerances tol;
    std::vector<double> times;
    std::vector<State> states;
    double dt_max;

    State advance(double t, bool variational) const {
        const auto it = std::upper_bound(times.begin(), times.end(), t);
        const std::size_t i = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
        FlowIntegrator f(body, alpha, tol, variational);
        State s(states[i].begin(), states[i].begin() + static_cast<std::ptrdiff_t>(f.size()));
        if (t > times[i]) {
            FlowStats ignore;
            f.run(s, times[i], t, dt_max, ignore, [](double, const State&) {});
        }
        return s;
    }
};

std::shared_ptr<StoredFlow> integrate(const ConvexBody& body, double alpha, const Vec& x0, double t_end,
                                      const Tolerances& tol, bool variational, FlowStats& stats) {
    if (!(t_end > 0)) throw ConfigError("integration time must be positive");
    const double h0 = std::abs(hamiltonian_alpha(body, alpha, x0, tol).value - 1.0);
    if (h0 > tol.energy) {
        std::ostringstream os;
        os << "initial point is off the energy surface by " << h0;
        throw EnergyDrift(os.str());
    }
    FlowIntegrator f(body, alpha, tol, variational);
    const int d = f.dim();
    auto out = std::make_shared<StoredFlow>(StoredFlow{body, alpha, tol, {}, {}, t_end / 64});
    State s(f.size(), 0.0);
    std::copy(x0.data(), x0.data() + d, s.begin());
    if (variational)
        for (int i = 0; i < d; ++i) s[d + i * d + i] = 1.0;
    out->times.push_back(0.0);
    out->states.push_back(s);
    f.run(s, 0.0, t_end, out->dt_max, stats, [&](double t, const State& st) {
        out->times.push_back(t);
        out->states.push_back(st);
    });
    out->times.back() = t_end;
    return out;
}

Trajectory make_trajectory(const std::shared_ptr<StoredFlow>& flow, int d) {
    std::vector<Vec> states;
    for (const auto& s : flow->states) states.push_back(Eigen::Map<const Vec>(s.data(), d));
    auto eval = [flow, d](double t) {
        const State s = flow->advance(t, false);
        return Vec(Eigen::Map<const Vec>(s.data(), d));
    };
    return Trajectory(flow->times, std::move(states), eval);
}

}  // namespace

Trajectory flow_orbit(const ConvexBody& body, double alpha, const Vec& x0, double t_end, const Tolerances& tol,
                      FlowStats* stats) {
    FlowStats local;
    auto flow = integrate(body, alpha, x0, t_end, tol, false, local);
    if (stats) *stats = local;
    return make_trajectory(flow, 2 * body.half_dim());
}

double action(const ConvexBody& body, double alpha, const Trajectory& y, double period, const Tolerances& tol,
              int samples) {
    const int n = body.half_dim();
    double sum = 0;
    for (int i = 0; i < samples; ++i) {
        const Vec x = y.at(period * i / samples);
        const Vec v = standard_j(n) * hamiltonian_alpha(body, alpha, x, tol).gradient;
        sum += x.head(n).dot(v.tail(n)) - x.tail(n).dot(v.head(n));
    }
    return 0.5 * sum * period / samples;
}

ClosedCharacteristic integrate_characteristic(const ConvexBody& body, double alpha, const Vec& x0, double period,
                                              const Tolerances& tol, std::string label) {
    ClosedCharacteristic c;
    c.label = std::move(label);
    c.period = period;
    c.alpha = alpha;
    auto flow = integrate(body, alpha, x0, period, tol, true, c.stats);
    const int d = 2 * body.half_dim();
    c.trajectory = make_trajectory(flow, d);

    const double gap = (c.trajectory.states().back() - x0).norm();
    if (gap > tol.orbit_closure * body.diameter()) {
        std::ostringstream os;
        os << c.label << " does not close: |y(tau) - y(0)| = " << gap;
        throw InvariantViolation(os.str());
    }

    std::vector<Mat> mats;
    for (const auto& s : flow->states) mats.push_back(Eigen::Map<const Mat>(s.data() + d, d, d));
    for (const auto& m : mats) c.stats.max_sympl_residual = std::max(c.stats.max_sympl_residual, symplectic_residual(m));
    make_symplectic(mats.back(), tol.sympl);
    auto eval = [flow, d](double t) {
        const State s = flow->advance(t, true);
        return Mat(Eigen::Map<const Mat>(s.data() + d, d, d));
    };
    c.monodromy_path = SymplecticPath::from_parts(period, flow->times, std::move(mats), eval, 0);
    if (nullity(c.monodromy_path.endpoint(), 1.0, tol) < 1)
        throw InvariantViolation(c.label + ": monodromy has no eigenvalue 1");
    c.action = action(body, alpha, c.trajectory, period, tol);
    if (!(c.action > 0)) throw InvariantViolation(c.label + ": action is not positive");
    c.symmetric_orbit = body.symmetric() && detect_symmetric(c, body, tol);
    return c;
}

SymplecticPath monodromy(const ConvexBody& body, double alpha, const ClosedCharacteristic& c, const Tolerances& tol) {
    if (!c.monodromy_path.size()) {
        const auto full = integrate_characteristic(body, alpha, c.trajectory.at(0.0), c.period, tol, c.label);
        return full.monodromy_path;
    }
    return c.monodromy_path;
}

bool detect_symmetric(const ClosedCharacteristic& c, const ConvexBody& body, const Tolerances& tol) {
    constexpr int kSamples = 128;
    const double diam = body.diameter();
    std::vector<Vec> pts;
    for (int i = 0; i < 2 * kSamples; ++i) pts.push_back(c.trajectory.at(c.period * i / (2 * kSamples)));
    double sup = 0;
    for (int i = 0; i < kSamples; ++i) sup = std::max(sup, (pts[i] + pts[i + kSamples]).norm());
    if (sup <= tol.symmetry * diam) return true;
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& a : pts)
        for (const auto& b : pts) closest = std::min(closest, (a + b).norm());
    if (closest > tol.symmetry_gap * diam) return false;
    std::ostringstream os;
    os << c.label << ": orbit neither antipodally invariant (sup " << sup << ") nor disjoint from its negation (gap "
       << closest << ")";
    throw SymmetryAmbiguous(os.str());
}

Mat ellipsoid_monodromy(const std::vector<double>& radii, int j, double alpha, double t) {
    const int n = static_cast<int>(radii.size());
    SymplecticMatrix out;
    for (int k = 0; k < n; ++k) {
        const double w = alpha / (radii[k] * radii[k]);
        Mat block = form_r(w * t).matrix();
        if (k == j) {
            Mat shear = Mat::Identity(2, 2);
            shear(1, 0) = alpha * (alpha - 2) / (radii[k] * radii[k]) * t;
            block = block * shear;
        }
        const SymplecticMatrix b = trust_symplectic(block);
        out = k == 0 ? b : diamond(out, b);
    }
    return out.matrix();
}

std::vector<ClosedCharacteristic> ellipsoid_characteristics(const std::vector<double>& radii, double alpha,
                                                            const Tolerances& tol) {
    const ConvexBody body = ConvexBody::ellipsoid(radii);
    const int n = body.half_dim();
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
            if (std::abs(radii[a] / radii[b] - 1.0) < 1e-6) {
                std::ostringstream os;
                os << "radii " << a + 1 << " and " << b + 1 << " coincide";
                throw DegenerateRadii(os.str());
            }
    std::vector<ClosedCharacteristic> out;
    for (int j = 0; j < n; ++j) {
        const double r = radii[j];
        const double w = alpha / (r * r);
        ClosedCharacteristic c;
        c.label = "y" + std::to_string(j + 1);
        c.alpha = alpha;
        c.period = 2 * kPi / w;
        c.action = kPi * r * r;
        auto at = [n, j, r, w](double t) {
            Vec x = Vec::Zero(2 * n);
            x(j) = r * std::cos(w * t);
            x(n + j) = r * std::sin(w * t);
            return x;
        };
        std::vector<double> times;
        std::vector<Vec> states;
        for (int i = 0; i <= 64; ++i) {
            times.push_back(c.period * i / 64);
            states.push_back(at(times.back()));
        }
        c.trajectory = Trajectory(std::move(times), std::move(states), at);
        c.monodromy_path = SymplecticPath::from_generator(
            c.period, [radii, j, alpha](double t) { return ellipsoid_monodromy(radii, j, alpha, t); }, 33, tol);
        c.symmetric_orbit = detect_symmetric(c, body, tol);
        out.push_back(std::move(c));
    }
    return out;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& y, double period, int samples) {
    const Eigen::Index d = y.at(0.0).size();
    os << "t";
    for (Eigen::Index i = 0; i < d; ++i) os << ",y" << i + 1;
    os << "\n";
    os.precision(12);
    for (int k = 0; k <= samples; ++k) {
        const double t = period * k / samples;
        const Vec x = y.at(t);
        os << t;
        for (Eigen::Index i = 0; i < d; ++i) os << "," << x(i);
        os << "\n";
    }
}

}  // namespace cchar
