#include "fxsv/estimators.hpp"

#include <algorithm>

#include <cmath>
#include <limits>
#include <optional>

#include "fxsv/errors.hpp"
#include "fxsv/normal.hpp"

namespace fxsv {

namespace {

constexpr double rho_cap = 0.99;
constexpr double nan = std::numeric_limits<double>::quiet_NaN();

void finalize_icm(IcmEstimate& est, const std::vector<double>& omega2,
                  const std::vector<double>& rho_omega) {
    const double w2 = lower_median(omega2);
    if (!(w2 > 0.0) || !std::isfinite(w2)) {
        raise(ErrorCode::DegenerateMoments, "median omega^2 is not positive");
    }
    est.omega = std::sqrt(w2);
    est.rho = lower_median(rho_omega) / est.omega;
    if (!std::isfinite(est.rho)) raise(ErrorCode::DegenerateMoments, "rho is not finite");
    if (std::abs(est.rho) > rho_cap) {
        est.rho = std::copysign(rho_cap, est.rho);
        est.flags.push_back("rho_clamped");
    }
    for (std::size_t i = 0; i < omega2.size(); ++i) {
        const double w = omega2[i] > 0.0 ? std::sqrt(omega2[i]) : 0.0;
        est.omega_tau.push_back(w);
        est.rho_tau.push_back(w > 0.0 ? rho_omega[i] / w : nan);
    }
}

}  // namespace

double lower_median(std::vector<double> values) {
    if (values.empty()) raise(ErrorCode::InvalidArgument, "median of an empty list");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

// ============================================================================
// Implied central moments
// ============================================================================

IcmEstimate icm_heston(const std::vector<ImpliedMomentSet>& moments) {
    std::vector<double> omega2;
    std::vector<double> rho_omega;
    for (const auto& m : moments) {
        const double mu2 = m.central.mu2;
        if (!(mu2 > 0.0)) continue;
        omega2.push_back(m.icm.ey2 / (mu2 * m.tau * m.tau / 3.0));
        rho_omega.push_back(m.icm.exy / (mu2 * m.tau / 2.0));
    }
    if (omega2.empty()) raise(ErrorCode::DegenerateMoments, "no tenor with positive variance");
    IcmEstimate est;
    finalize_icm(est, omega2, rho_omega);
    return est;
}

IcmEstimate icm_sz(const std::vector<ImpliedMomentSet>& moments, double v0_sz) {
    if (!(v0_sz > 0.0)) raise(ErrorCode::InvalidArgument, "v0 must be positive");
    const double v2 = v0_sz * v0_sz;
    std::vector<double> omega2;
    std::vector<double> rho_omega;
    for (const auto& m : moments) {
        if (!(m.central.mu2 > 0.0)) continue;
        const double t = m.tau;
        const double w2 = -v2 / t + std::sqrt(v2 * v2 + 0.5 * m.icm.ey2) / t;
        omega2.push_back(w2);
        rho_omega.push_back(m.icm.exy / (w2 * t * t + 2.0 * v2 * t));
    }
    if (omega2.empty()) raise(ErrorCode::DegenerateMoments, "no tenor with positive variance");
    IcmEstimate est;
    finalize_icm(est, omega2, rho_omega);
    return est;
}

IcmEstimate sz_from_heston(const IcmEstimate& heston) {
    IcmEstimate sz = heston;
    sz.omega = 0.5 * heston.omega;
    for (auto& w : sz.omega_tau) w *= 0.5;
    sz.flags.push_back("sz_from_heston");
    return sz;
}

// ============================================================================
// Durrleman
// ============================================================================

SmileShape smile_shape(const VolSurface& surface) {
    if (surface.slices.empty()) raise(ErrorCode::InvalidArgument, "empty surface");
    const TenorSlice& s = surface.slices.front();
    const double atm = s.smile.vol(Pillar::ATM);
    double sxx = 0.0, sxxx = 0.0, sxxxx = 0.0, sxy = 0.0, sxxy = 0.0;
    for (const Pillar p : all_pillars) {
        const double x = s.strike(p) / surface.spot - 1.0;
        const double y = s.smile.vol(p) - atm;
        const double z = 0.5 * x * x;
        sxx += x * x;
        sxxx += x * z;
        sxxxx += z * z;
        sxy += x * y;
        sxxy += z * y;
    }
    const double det = sxx * sxxxx - sxxx * sxxx;
    if (!(std::abs(det) > 1e-14 * sxx * sxxxx)) {
        raise(ErrorCode::SingularRegression, "smile regressors are collinear");
    }
    SmileShape shape;
    shape.slope = (sxy * sxxxx - sxxx * sxxy) / det;
    shape.curvature = (sxx * sxxy - sxxx * sxy) / det;
    if (surface.slices.size() >= 2) {
        const TenorSlice& s2 = surface.slices[1];
        shape.term = (s2.smile.vol(Pillar::ATM) - atm) / (s2.tau - s.tau);
    }
    return shape;
}

DurrlemanEstimate durrleman(const VolSurface& surface, double v0_proxy,
                            std::optional<double> theta) {
    if (!(v0_proxy > 0.0)) raise(ErrorCode::InvalidArgument, "v0 proxy must be positive");
    DurrlemanEstimate est;
    est.shape = smile_shape(surface);
    const double sv = std::sqrt(v0_proxy);
    const double S = est.shape.slope;
    const double C = est.shape.curvature;
    const double radicand = 3.0 * sv * C + 3.0 * sv * S + 10.0 * S * S;
    if (radicand < 0.0) raise(ErrorCode::NegativeRadicand, "smile shape gives a negative radicand");
    if (radicand == 0.0) {
        est.omega = 0.0;
        est.rho = 0.0;
        est.flags.push_back("flat_smile");
    } else {
        est.omega = 2.0 * sv * std::sqrt(radicand);
        est.rho = 2.0 * S / std::sqrt(radicand);
    }
    if (std::abs(est.rho) > rho_cap) {
        est.rho = std::copysign(rho_cap, est.rho);
        est.flags.push_back("rho_clamped");
    }
    est.kappa = nan;
    if (theta && surface.slices.size() >= 2 && *theta != v0_proxy) {
        const double v = v0_proxy;
        const double w = est.omega;
        const double r = est.rho;
        est.kappa = 1.0 / (2.0 * (*theta - v)) *
                    (8.0 * est.shape.term * sv + w * w / (6.0 * v) * (2.0 - r * r / 2.0) + w * r * v);
    }
    return est;
}

// ============================================================================
// Gauthier-Rivaille
// ============================================================================

GrCoefficients gr_coefficients(const OptionSpec& put, double v0, double theta, double kappa,
                               GrForm form) {
    if (!(kappa > 0.0)) raise(ErrorCode::InvalidArgument, "kappa must be positive");
    GrCoefficients c;
    const double tau = put.tau;
    const double x = kappa * tau;
    const double e1 = std::exp(-x);
    const double e2 = std::exp(-2.0 * x);
    const double k3 = kappa * kappa * kappa;
    const double k2 = kappa * kappa;
    c.r0 = 0.25 / k3 * (-4.0 * e1 * x + 2.0 - 2.0 * e2);
    c.r1 = 0.25 / k3 * (4.0 * e1 * (x + 1.0) + (2.0 * x - 5.0) + e2);
    c.p0 = (-e1 * x + 1.0 - e1) / k2;
    c.p1 = (e1 * x + (x - 2.0) + 2.0 * e1) / k2;
    c.q0 = 0.5 / k3 * (-e1 * x * (x + 2.0) + 2.0 - 2.0 * e1);
    c.q1 = 0.5 / k3 * (2.0 * (x - 3.0) + e1 * x * (x + 4.0) + 6.0 * e1);

    if (form == GrForm::AsPrinted) {
        c.w_tau = theta + (v0 - theta) * (1.0 - std::exp(x)) / kappa;
    } else {
        c.w_tau = theta * tau + (v0 - theta) * (-std::expm1(-x)) / kappa;
    }
    if (!(c.w_tau > 0.0)) raise(ErrorCode::InvalidArgument, "Black-Scholes total variance is not positive");

    const double w = c.w_tau;
    const double sig = std::sqrt(w / tau);
    c.A = gk_price(put.with_side(OptionSide::Put), sig);

    const double y = std::log(put.forward() / put.strike);
    const double d2 = (y - 0.5 * w) / std::sqrt(w);
    const double g = std::exp(-put.r_d * tau) * put.strike * norm_pdf(d2) / (2.0 * std::sqrt(w));
    const double lw = -0.5 / w + y * y / (2.0 * w * w) - 0.125;
    const double ly = -y / w + 0.5;
    const double lyy = -1.0 / w;
    const double lyw = y / (w * w);
    const double lyyw = 1.0 / (w * w);
    const double p_ww = g * lw;
    const double p_xw = g * ly;
    const double p_xxw = g * (lyy + ly * ly);
    const double p_xxww = g * (lw * (lyy + ly * ly) + lyyw + 2.0 * ly * lyw);

    const double a1 = v0 * c.p0 + theta * c.p1;
    c.B = (v0 * c.r0 + theta * c.r1) * p_ww;
    c.C = a1 * p_xw;
    if (form == GrForm::AsPrinted) {
        c.D = (v0 * c.q1 + theta * c.q1) * p_xxw + 0.5 * a1 * p_xxww;
    } else {
        c.D = (v0 * c.q0 + theta * c.q1) * p_xxw + 0.5 * a1 * a1 * p_xxww;
    }
    return c;
}

double gr_expansion_price(const GrCoefficients& c, double omega, double rho) {
    return c.A + c.B * omega * omega + c.C * rho * omega + c.D * rho * rho * omega * omega;
}

GrEstimate gauthier_rivaille(double put1, double put2, const OptionSpec& spec1,
                             const OptionSpec& spec2, double v0, double theta, double kappa,
                             GrForm form) {
    if (spec1.strike == spec2.strike) raise(ErrorCode::InvalidArgument, "K1 must differ from K2");
    if (spec1.tau != spec2.tau) raise(ErrorCode::InvalidArgument, "both puts need the same maturity");
    const GrCoefficients c1 = gr_coefficients(spec1, v0, theta, kappa, form);
    const GrCoefficients c2 = gr_coefficients(spec2, v0, theta, kappa, form);
    if (c2.D == 0.0) raise(ErrorCode::NoValidRoot, "second strike has D = 0");

    const double a1 = c1.A - put1;
    const double a2 = c2.A - put2;
    const double ratio = c1.D / c2.D;
    const double d = ratio * a2 - a1;
    const double f = ratio * c2.B - c1.B;
    const double g = c1.C - ratio * c2.C;
    if (g == 0.0) raise(ErrorCode::NoValidRoot, "system is singular in rho*omega");

    const double qa = c1.D * f * f / (g * g);
    const double qb = c1.B + c1.C * f / g + 2.0 * c1.D * d * f / (g * g);
    const double qc = a1 + c1.C * d / g + c1.D * d * d / (g * g);

    std::vector<double> roots;
    if (std::abs(qa) <= 1e-14 * std::abs(qb)) {
        if (qb != 0.0) roots.push_back(-qc / qb);
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            roots.push_back((-qb + sq) / (2.0 * qa));
            roots.push_back((-qb - sq) / (2.0 * qa));
        }
    }
    // Several roots can be admissible; the expansion is in small omega, so the smallest wins.
    std::optional<GrEstimate> best;
    for (const double w2 : roots) {
        if (!(w2 > 0.0)) continue;
        const double omega = std::sqrt(w2);
        const double rho = d / (g * omega) + f * omega / g;
        if (std::abs(rho) <= 1.0 + 1e-12 && (!best || omega < best->omega)) {
            best = GrEstimate{omega, std::clamp(rho, -1.0, 1.0)};
        }
    }
    if (!best) raise(ErrorCode::NoValidRoot, "no root with omega > 0 and |rho| <= 1");
    return *best;
}

// ============================================================================
// Moving-average estimators
// ============================================================================

GsEstimate guillaume_schoutens(const std::vector<double>& vix, double window_years,
                               MovingAverage average) {
    if (vix.empty()) raise(ErrorCode::ShortSeries, "VIX series is empty");
    if (!(window_years > 0.0)) raise(ErrorCode::InvalidArgument, "window must be positive");
    const auto n = static_cast<std::size_t>(std::max(1.0, std::round(252.0 * window_years)));
    GsEstimate est;
    est.v0 = vix.back() * vix.back();
    if (average == MovingAverage::SMA) {
        const std::size_t m = std::min(n, vix.size());
        double sum = 0.0;
        for (std::size_t i = vix.size() - m; i < vix.size(); ++i) sum += vix[i] * vix[i];
        est.theta = sum / static_cast<double>(m);
    } else {
        const double w = 1.0 / static_cast<double>(n);
        double e = vix.front() * vix.front();
        for (std::size_t i = 1; i < vix.size(); ++i) e = w * vix[i] * vix[i] + (1.0 - w) * e;
        est.theta = e;
    }
    return est;
}

double lvix_theta(double lvix) { return lvix * lvix; }

std::vector<HistoricalPoint> historical_omega_rho(const std::vector<double>& vix,
                                                  const std::vector<double>& spot,
                                                  VolModel model) {
    if (vix.size() != spot.size()) raise(ErrorCode::InvalidArgument, "series are not aligned");
    std::vector<HistoricalPoint> out(vix.size());
    const double w = 1.0 / historical_window;
    double e_xx = 0.0, e_rr = 0.0, e_rx = 0.0, e_vv = 0.0, e_rv = 0.0;
    for (std::size_t t = 0; t < vix.size(); ++t) {
        if (t >= 1) {
            const double dx = vix[t] * vix[t] - vix[t - 1] * vix[t - 1];
            const double dv = vix[t] - vix[t - 1];
            const double r = std::log(spot[t] / spot[t - 1]);
            if (t == 1) {
                e_xx = dx * dx;
                e_rr = r * r;
                e_rx = r * dx;
                e_vv = dv * dv;
                e_rv = r * dv;
            } else {
                e_xx = w * dx * dx + (1.0 - w) * e_xx;
                e_rr = w * r * r + (1.0 - w) * e_rr;
                e_rx = w * r * dx + (1.0 - w) * e_rx;
                e_vv = w * dv * dv + (1.0 - w) * e_vv;
                e_rv = w * r * dv + (1.0 - w) * e_rv;
            }
        }
        HistoricalPoint& p = out[t];
        if (t + 1 < static_cast<std::size_t>(historical_window)) {
            p.warm_up = true;
            p.omega = model == VolModel::Heston ? vix[t] : 0.5 * vix[t];
            p.rho = -0.1;
            continue;
        }
        p.warm_up = false;
        const bool heston = model == VolModel::Heston;
        p.omega = heston ? std::sqrt(e_xx) / vix[t] : std::sqrt(e_vv);
        const double denom = std::sqrt(e_rr * (heston ? e_xx : e_vv));
        p.rho = denom > 0.0 ? (heston ? e_rx : e_rv) / denom : -0.1;
    }
    return out;
}

// ============================================================================
// Two-factor splits
// ============================================================================

TwoFactorStart evp_split(double omega, double rho, double v0, double theta, double kappa) {
    TwoFactorStart s;
    s.params.kind = TwoFactorKind::Bates2F;
    for (auto& f : s.params.factors) f = FactorParams{v0 / 2.0, theta / 2.0, kappa, omega, rho};
    return s;
}

double feller_truncated_omega(double omega, double theta, double kappa) {
    return std::min(omega, std::sqrt(1.99 * theta * kappa));
}

TwoFactorStart mevp_split(double omega, double rho, double v0, double theta, double kappa,
                          MevpTarget target) {
    if (!(omega > 0.0) || !(std::abs(rho) < 1.0)) {
        raise(ErrorCode::InvalidArgument, "MEVP needs omega > 0 and |rho| < 1");
    }
    TwoFactorStart s;
    double w = omega;
    double lv0 = v0 / 2.0;
    double lth = theta / 2.0;
    if (target == MevpTarget::OUOU) {
        w = omega / std::sqrt(2.0);
        lv0 = v0 / std::sqrt(2.0);
        lth = theta / std::sqrt(2.0);
        s.params.kind = TwoFactorKind::OUOU;
    } else {
        s.params.kind = TwoFactorKind::Bates2F;
    }
    const double root = std::sqrt(1.0 - rho * rho);
    std::array<double, 2> omegas{w * (root + rho), w * (root - rho)};
    const std::array<double, 2> rhos{mevp_rho, -mevp_rho};
    for (std::size_t k = 0; k < 2; ++k) {
        if (omegas[k] < mevp_min_omega) {
            omegas[k] = mevp_min_omega;
            s.flags.push_back("omega" + std::to_string(k + 1) + "_clamped");
        }
        if (target == MevpTarget::BatesFeller) {
            const double capped = feller_truncated_omega(omegas[k], lth, kappa);
            if (capped < omegas[k]) {
                omegas[k] = capped;
                s.flags.push_back("omega" + std::to_string(k + 1) + "_feller_truncated");
            }
        }
        s.params.factors[k] = FactorParams{lv0, lth, kappa, omegas[k], rhos[k]};
    }
    s.rho_fixed = {true, true};
    return s;
}

MixtureStats two_factor_mixture_stats(double v1, double v2, double omega1, double omega2,
                                      double rho1, double rho2) {
    if (v1 < 0.0 || v2 < 0.0) raise(ErrorCode::InvalidArgument, "variances must be non-negative");
    const double total = v1 + v2;
    if (!(total > 0.0)) raise(ErrorCode::ZeroTotalVariance, "v1 + v2 must be positive");
    const double mix = v1 * omega1 * omega1 + v2 * omega2 * omega2;
    MixtureStats m;
    m.omega_t = std::sqrt(mix / total);
    m.rho_t = mix > 0.0 ? (v1 * omega1 * rho1 + v2 * omega2 * rho2) / (std::sqrt(mix) * std::sqrt(total))
                        : 0.0;
    m.v_ratio = v1 / total;
    return m;
}

EffectivePair mevp_long_horizon(double omega, double rho) {
    const double r2 = rho * rho;
    EffectivePair e;
    e.omega = omega * std::sqrt(-4.0 * r2 * r2 + 4.0 * r2 + 1.0);
    e.rho = e.omega > 0.0 ? omega * rho * (3.0 - 2.0 * r2) / e.omega : 0.0;
    return e;
}

}  // namespace fxsv
