#include "mlc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "mlc/errors.hpp"
#include "mlc/format.hpp"

namespace mlc::geometry {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kMaxNewtonIterations = 200;

template <int N>
using VecN = Eigen::Matrix<double, N, 1>;

/// Damped Newton iteration with a central-difference Jacobian. Returns the
/// converged point or nothing when the iteration stalls or exceeds the
/// iteration budget.
template <int N, typename F>
std::optional<VecN<N>> damped_newton(F&& residual, VecN<N> x, double tol) {
    auto norm = [](const VecN<N>& r) { return r.template lpNorm<Eigen::Infinity>(); };
    VecN<N> r = residual(x);
    if (!r.allFinite()) return std::nullopt;
    for (int it = 0; it < kMaxNewtonIterations; ++it) {
        if (norm(r) < tol) return x;
        Eigen::Matrix<double, N, N> jac;
        for (int k = 0; k < N; ++k) {
            const double h = 1e-7 * std::max(1.0, std::abs(x[k]));
            VecN<N> xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            jac.col(k) = (residual(xp) - residual(xm)) / (2 * h);
        }
        if (!jac.allFinite()) return std::nullopt;
        const VecN<N> step = jac.fullPivLu().solve(-r);
        if (!step.allFinite()) return std::nullopt;
        double lambda = 1.0;
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            VecN<N> trial = x + lambda * step;
            VecN<N> rt = residual(trial);
            if (rt.allFinite() && norm(rt) < norm(r) * (1 - 1e-4 * lambda)) {
                x = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if (!accepted) {
            // Accept a full step when we are already at round-off level.
            if (norm(r) < 1e3 * tol) return norm(r) < tol ? std::optional(x) : std::nullopt;
            return std::nullopt;
        }
    }
    return norm(r) < tol ? std::optional(x) : std::nullopt;
}

CoreGeometry unpack_core(const CoreSpec& spec, const VecN<7>& v) {
    CoreGeometry g;
    g.spec = spec;
    g.x_frac = v[0];
    g.phi = v[1];
    g.gamma1 = v[2];
    g.gamma2 = v[3];
    g.gamma3 = v[4];
    g.zeta = v[5];
    g.delta_out_frac = v[6];
    return g;
}

VecN<7> pack_core(const CoreGeometry& g) {
    VecN<7> v;
    v << g.x_frac, g.phi, g.gamma1, g.gamma2, g.gamma3, g.zeta, g.delta_out_frac;
    return v;
}

/// Closed-form construction of the single-expanded pose for a trial phi.
/// Returns nothing when the triangle abc cannot close.
std::optional<CoreGeometry> core_from_phi(const CoreSpec& spec, double phi) {
    const double s = std::sin(phi);
    const double L = 1 + spec.delta_in_frac;
    const double x = spec.h_frac - std::cos(phi);
    if (s <= 0 || x <= 0) return std::nullopt;
    const double cx = (1 - L * L) / (4 * s);
    const double cy2 = 1 - (cx + s) * (cx + s);
    if (cy2 <= 0) return std::nullopt;
    const double cy = std::sqrt(cy2);
    const double dz2 = x * x - cx * cx;
    if (dz2 <= 0) return std::nullopt;
    CoreGeometry g;
    g.spec = spec;
    g.x_frac = x;
    g.phi = phi;
    g.gamma1 = std::atan2(cy, cx + s);
    g.gamma2 = std::atan2(cy, s - cx);
    g.gamma3 = std::atan2(-cx, spec.h_frac - cy);
    g.zeta = std::asin(s / L);
    g.delta_out_frac = L * std::cos(g.zeta) - std::cos(phi);
    return g;
}

/// Mismatch of the bisector constraint: squared distance from c to the point
/// on the bisector at the rest height, minus x^2.
std::optional<double> bisector_mismatch(const CoreSpec& spec, double phi) {
    const double s = std::sin(phi);
    const double L = 1 + spec.delta_in_frac;
    const double x = spec.h_frac - std::cos(phi);
    if (s <= 0) return std::nullopt;
    const double cx = (1 - L * L) / (4 * s);
    const double cy2 = 1 - (cx + s) * (cx + s);
    if (cy2 < 0) return std::nullopt;
    const double cy = std::sqrt(cy2);
    return cx * cx + (spec.h_frac - cy) * (spec.h_frac - cy) - x * x;
}

/// Seed for Newton: the smallest-phi root of the bisector mismatch, which is
/// the branch reached by growing the muscle expansion from zero.
std::optional<double> seed_phi(const CoreSpec& spec) {
    constexpr int kGrid = 2000;
    std::optional<double> prev_val;
    double prev_phi = 0;
    for (int i = 1; i < kGrid; ++i) {
        const double phi = 0.5 * kPi * i / kGrid;
        auto val = bisector_mismatch(spec, phi);
        if (val && prev_val && (*prev_val) * (*val) <= 0) {
            double lo = prev_phi, hi = phi;
            double flo = *prev_val;
            for (int k = 0; k < 200; ++k) {
                const double mid = 0.5 * (lo + hi);
                auto fm = bisector_mismatch(spec, mid);
                if (!fm) break;
                if (flo * (*fm) <= 0) {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = *fm;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_val = val;
        prev_phi = phi;
    }
    return std::nullopt;
}

constexpr double kReferenceDeltaIn = 0.5;

}  // namespace

void CoreSpec::validate() const {
    if (!std::isfinite(delta_in_frac) || !std::isfinite(h_frac))
        throw InvalidSpec("core spec must be finite");
    if (delta_in_frac < 0) throw InvalidSpec("delta_in_frac must be >= 0");
    if (h_frac <= 0) throw InvalidSpec("h_frac must be > 0");
}

double CoreGeometry::half_base() const { return std::sin(phi); }

std::array<double, 7> core_residuals(const CoreGeometry& g) {
    const double L = 1 + g.spec.delta_in_frac;
    const double x = g.x_frac;
    return {
        std::sin(g.phi) - std::cos(g.gamma1) - x * std::sin(g.gamma3),
        std::sin(g.gamma1) + x * std::cos(g.gamma3) - x - std::cos(g.phi),
        std::cos(g.gamma1) + L * std::cos(g.gamma2) - 2 * std::sin(g.phi),
        std::sin(g.gamma1) - L * std::sin(g.gamma2),
        L * std::cos(g.zeta) - std::cos(g.phi) - g.delta_out_frac,
        std::sin(g.phi) / L - std::sin(g.zeta),
        g.spec.h_frac - g.x_frac - std::cos(g.phi),
    };
}

CoreGeometry solve_core(const CoreSpec& spec, double tol) {
    spec.validate();
    if (!(tol > 0)) throw InvalidSpec("tolerance must be positive");

    if (spec.delta_in_frac == 0) {
        // Every phi satisfies the system at zero expansion; use the rest pose of
        // the core designed for the reference expansion at the same height.
        CoreGeometry ref = solve_core(CoreSpec{kReferenceDeltaIn, spec.h_frac}, tol);
        CoreGeometry g;
        g.spec = spec;
        g.phi = ref.phi;
        g.x_frac = spec.h_frac - std::cos(g.phi);
        g.gamma1 = g.gamma2 = kPi / 2 - g.phi;
        g.gamma3 = 0;
        g.zeta = g.phi;
        g.delta_out_frac = 0;
        return g;
    }

    const auto phi0 = seed_phi(spec);
    if (!phi0) {
        throw NoConvergence("no core geometry for delta_in=" + format_number(spec.delta_in_frac) +
                            ", h=" + format_number(spec.h_frac));
    }
    const auto guess = core_from_phi(spec, *phi0);
    if (!guess) throw NoConvergence("core seed is degenerate");

    auto residual = [&spec](const VecN<7>& v) {
        const auto r = core_residuals(unpack_core(spec, v));
        return VecN<7>(Eigen::Map<const VecN<7>>(r.data()));
    };
    const auto sol = damped_newton<7>(residual, pack_core(*guess), tol);
    if (!sol) throw NoConvergence("Newton iteration did not converge for the core system");
    CoreGeometry g = unpack_core(spec, *sol);
    if (!(g.phi > 0 && g.phi < kPi / 2)) throw NoConvergence("core solution left the valid phi range");
    return g;
}

std::vector<SweepRow> sweep_core(const std::vector<double>& delta_in_values,
                                 const std::vector<double>& h_values, double tol) {
    if (delta_in_values.empty() || h_values.empty()) throw InvalidSpec("sweep ranges must be non-empty");
    std::vector<SweepRow> rows;
    rows.reserve(delta_in_values.size() * h_values.size());
    for (double h : h_values) {
        for (double d : delta_in_values) {
            CoreSpec spec{d, h};
            spec.validate();
            SweepRow row{d, h, std::nullopt};
            try {
                row.delta_out_frac = solve_core(spec, tol).delta_out_frac;
            } catch (const NoConvergence&) {
            }
            rows.push_back(row);
        }
    }
    return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "delta_in_frac,h_frac,delta_out_frac,feasible\n";
    for (const auto& r : rows) {
        out << format_number(r.delta_in_frac) << ',' << format_number(r.h_frac) << ','
            << (r.delta_out_frac ? format_number(*r.delta_out_frac) : std::string{}) << ','
            << (r.delta_out_frac ? "true" : "false") << '\n';
    }
    return out.str();
}

CorePose core_pose(const CoreGeometry& g, double len_ac, double len_bc) {
    const double s = g.half_base();
    const double cx = (len_ac * len_ac - len_bc * len_bc) / (4 * s);
    const double cy2 = len_ac * len_ac - (cx + s) * (cx + s);
    if (cy2 <= 0) throw GeometryInfeasible("core triangle does not close");
    const double cy = std::sqrt(cy2);
    const double dz2 = g.x_frac * g.x_frac - cx * cx;
    if (dz2 <= 0) throw GeometryInfeasible("core output link cannot reach the bisector");
    return {cx, cy, cy + std::sqrt(dz2)};
}

std::string to_string(HingeType h) { return h == HingeType::Open ? "open" : "crossed"; }

HingeType hinge_from_string(const std::string& s) {
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "open") return HingeType::Open;
    if (lower == "crossed") return HingeType::Crossed;
    throw InvalidSpec("unknown hinge type '" + s + "'");
}

void LeverSpec::validate() const {
    for (double v : {l_in, l_out, dl_in, dl_out, l})
        if (!std::isfinite(v)) throw InvalidSpec("lever spec must be finite");
    if (l_in <= 0 || l_out <= 0 || l <= 0) throw InvalidSpec("lever lengths must be positive");
    if (std::abs(dl_in) >= l_in) throw InvalidSpec("|dl_in| must be below l_in");
    if (std::abs(dl_out) >= l_out) throw InvalidSpec("|dl_out| must be below l_out");
}

LeverSpec LeverSpec::scaled(double c) const {
    LeverSpec s = *this;
    s.l_in *= c;
    s.l_out *= c;
    s.dl_in *= c;
    s.dl_out *= c;
    s.l *= c;
    return s;
}

std::array<double, 5> lever_residuals(const LeverGeometry& g) {
    const auto& s = g.spec;
    const double rest_scale = g.convention == LeverConvention::HalfSpan ? 0.5 : 1.0;
    const double sign = s.hinge == HingeType::Crossed ? 1.0 : -1.0;
    return {
        g.l1 * std::sin(g.theta1) - rest_scale * s.l_in,
        g.l2 * std::sin(g.theta2) - rest_scale * s.l_out,
        g.l1 * std::sin(g.theta1 + g.dtheta) - (s.l_in + s.dl_in) / 2,
        g.l2 * std::sin(g.theta2 + sign * g.dtheta) - (s.l_out + s.dl_out) / 2,
        g.l1 * std::cos(g.theta1) + g.l2 * std::cos(g.theta2) - s.l,
    };
}

bool lever_is_monotone(const LeverGeometry& g) {
    const double sign = g.spec.hinge == HingeType::Crossed ? 1.0 : -1.0;
    auto same_side = [](double a, double b) {
        return (a - kPi / 2) * (b - kPi / 2) > 0;
    };
    return same_side(g.theta1, g.theta1 + g.dtheta) && same_side(g.theta2, g.theta2 + sign * g.dtheta);
}

LeverGeometry solve_lever(const LeverSpec& spec, double tol, LeverConvention convention) {
    spec.validate();
    if (!(tol > 0)) throw InvalidSpec("tolerance must be positive");
    const double rest_scale = convention == LeverConvention::HalfSpan ? 0.5 : 1.0;

    auto unpack = [&](const VecN<5>& v) {
        LeverGeometry g;
        g.spec = spec;
        g.convention = convention;
        g.theta1 = v[0];
        g.theta2 = v[1];
        g.l1 = v[2];
        g.l2 = v[3];
        g.dtheta = v[4];
        return g;
    };
    auto residual = [&](const VecN<5>& v) {
        const auto r = lever_residuals(unpack(v));
        return VecN<5>(Eigen::Map<const VecN<5>>(r.data()));
    };
    auto start = [&](double t1, double t2, double dt) {
        VecN<5> v;
        v << t1, t2, rest_scale * spec.l_in / std::sin(t1), rest_scale * spec.l_out / std::sin(t2), dt;
        return v;
    };

    std::vector<VecN<5>> starts{start(kPi / 3, kPi / 3, 0)};
    for (double t1 : {kPi / 6, kPi / 4, kPi / 3, kPi / 2, 2 * kPi / 3, 5 * kPi / 6})
        for (double t2 : {kPi / 6, kPi / 4, kPi / 3, kPi / 2, 2 * kPi / 3, 5 * kPi / 6})
            for (double dt : {0.0, -0.3, 0.3, -0.7, 0.7})
                starts.push_back(start(t1, t2, dt));

    std::optional<LeverGeometry> best;
    for (const auto& s0 : starts) {
        const auto sol = damped_newton<5>(residual, s0, tol);
        if (!sol) continue;
        LeverGeometry g = unpack(*sol);
        const bool valid = g.l1 > 0 && g.l2 > 0 && g.theta1 > 0 && g.theta1 < kPi && g.theta2 > 0 &&
                           g.theta2 < kPi;
        if (!valid) continue;
        if (convention == LeverConvention::HalfSpan && !lever_is_monotone(g)) continue;
        if (!best || std::abs(g.dtheta) < std::abs(best->dtheta) - 1e-9) best = g;
    }
    if (!best) throw NoConvergence("no valid lever solution branch");
    return *best;
}

void to_json(nlohmann::json& j, const CoreSpec& s) {
    j = nlohmann::json{{"delta_in_frac", s.delta_in_frac}, {"h_frac", s.h_frac}};
}

void to_json(nlohmann::json& j, const CoreGeometry& g) {
    j = nlohmann::json{{"spec", g.spec},       {"x_frac", g.x_frac}, {"phi", g.phi},
                       {"gamma1", g.gamma1},   {"gamma2", g.gamma2}, {"gamma3", g.gamma3},
                       {"zeta", g.zeta},       {"delta_out_frac", g.delta_out_frac}};
}

void to_json(nlohmann::json& j, const LeverSpec& s) {
    j = nlohmann::json{{"l_in", s.l_in},     {"l_out", s.l_out}, {"dl_in", s.dl_in},
                       {"dl_out", s.dl_out}, {"l", s.l},         {"hinge", to_string(s.hinge)}};
}

void to_json(nlohmann::json& j, const LeverGeometry& g) {
    j = nlohmann::json{{"spec", g.spec}, {"theta1", g.theta1}, {"theta2", g.theta2},
                       {"l1", g.l1},     {"l2", g.l2},         {"dtheta", g.dtheta}};
}

}  // namespace mlc::geometry
