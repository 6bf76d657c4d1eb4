#include "fxsv/moments.hpp"

#include <cmath>

#include "fxsv/errors.hpp"
#include "fxsv/pricer.hpp"

namespace fxsv {

namespace {

void check_strip(const std::vector<double>& strikes, const std::vector<double>& prices,
                 double k0) {
    if (strikes.size() < 3) raise(ErrorCode::InsufficientStrikes, "at least 3 strikes are needed");
    if (strikes.size() != prices.size()) {
        raise(ErrorCode::InvalidArgument, "strikes and prices differ in length");
    }
    for (std::size_t i = 1; i < strikes.size(); ++i) {
        if (!(strikes[i] > strikes[i - 1])) {
            raise(ErrorCode::InvalidArgument, "strikes must be strictly increasing");
        }
    }
    if (k0 < strikes.front() || k0 > strikes.back()) {
        raise(ErrorCode::InsufficientStrikes, "strikes do not span K0");
    }
}

}  // namespace

std::vector<double> strike_spacing(const std::vector<double>& strikes) {
    const std::size_t n = strikes.size();
    std::vector<double> dk(n, 0.0);
    if (n < 2) return dk;
    dk.front() = strikes[1] - strikes[0];
    dk.back() = strikes[n - 1] - strikes[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) dk[i] = 0.5 * (strikes[i + 1] - strikes[i - 1]);
    return dk;
}

PowerPortfolio power_portfolios(const std::vector<double>& strikes,
                                const std::vector<double>& prices, double forward, double k0,
                                double r_d, double r_f, double tau) {
    check_strip(strikes, prices, k0);
    const auto dk = strike_spacing(strikes);
    const double growth = std::exp(r_d * tau);
    PowerPortfolio p;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        const double k = strikes[i];
        const double l = std::log(k / forward);
        const double w = prices[i] * dk[i] / (k * k);
        p.p2 += 2.0 * (1.0 - l) * w;
        p.p3 += 3.0 * (2.0 * l - l * l) * w;
        p.p4 += 4.0 * (3.0 * l * l - l * l * l) * w;
    }
    p.p2 *= growth;
    p.p3 *= growth;
    p.p4 *= growth;
    p.p1 = std::expm1((r_d - r_f) * tau) - p.p2 / 2.0 - p.p3 / 6.0 - p.p4 / 24.0;
    return p;
}

CentralMoments central_moments(const PowerPortfolio& p) {
    CentralMoments m;
    const double m1 = p.p1;
    m.mu2 = p.p2 - m1 * m1;
    m.mu3 = p.p3 - 3.0 * m1 * p.p2 + 2.0 * m1 * m1 * m1;
    m.mu4 = p.p4 - 4.0 * m1 * p.p3 + 6.0 * m1 * m1 * p.p2 - 3.0 * m1 * m1 * m1 * m1;
    if (!(m.mu2 > 0.0)) raise(ErrorCode::NonPositiveVariance, "implied variance is not positive");
    return m;
}

SkewKurt skew_kurt(double mu2, double mu3, double mu4) {
    if (!(mu2 > 0.0)) raise(ErrorCode::NonPositiveVariance, "mu2 must be positive");
    return SkewKurt{mu3 / std::pow(mu2, 1.5), mu4 / (mu2 * mu2)};
}

double implied_variance_vix(const std::vector<double>& strikes, const std::vector<double>& prices,
                            double forward, double k0, double r_d, double tau) {
    check_strip(strikes, prices, k0);
    if (!(tau > 0.0)) raise(ErrorCode::InvalidArgument, "tau must be positive");
    const auto dk = strike_spacing(strikes);
    double sum = 0.0;
    for (std::size_t i = 0; i < strikes.size(); ++i) {
        sum += dk[i] / (strikes[i] * strikes[i]) * prices[i];
    }
    const double gap = forward / k0 - 1.0;
    return 2.0 / tau * std::exp(r_d * tau) * sum - gap * gap / tau;
}

double corrected_variance(double v2, double rho, double omega, double tau) {
    return v2 * (1.0 - 0.5 * rho * omega * tau + omega * omega * tau * tau / 12.0);
}

double heston_total_variance(double v0, double theta, double kappa, double tau) {
    const double x = kappa * tau;
    if (x < 1e-8) return v0 + (theta - v0) * x / 2.0;
    return theta + (v0 - theta) * (-std::expm1(-x)) / x;
}

double heston_average_variance_variance(double v0, double theta, double kappa, double omega,
                                        double tau) {
    const double x = kappa * tau;
    if (x < 1e-5) {
        return omega * omega * tau * (v0 / 3.0 + x * (theta / 12.0 - v0 / 3.0));
    }
    const double e1 = std::exp(-x);
    const double e2 = std::exp(-2.0 * x);
    const double bracket = 2.0 * (v0 - theta) * (1.0 - 2.0 * x * e1 - e2) +
                           theta * (4.0 * e1 - 3.0 + 2.0 * x - e2);
    return omega * omega / (2.0 * tau * tau * kappa * kappa * kappa) * bracket;
}

double sz_instantaneous_variance(double v0, double theta, double kappa, double omega, double t) {
    const double e2 = std::exp(-2.0 * kappa * t);
    const double em1 = std::expm1(kappa * t);
    return omega * omega / (2.0 * kappa) * (-std::expm1(-2.0 * kappa * t)) + e2 * v0 * v0 +
           theta * e2 * em1 * (theta * em1 + 2.0 * v0);
}

double sz_integrated_variance(double v0, double theta, double kappa, double omega, double tau) {
    const double x = kappa * tau;
    const double s = omega * omega / (2.0 * kappa);
    if (x < 1e-6) {
        // Integral of mean^2 + variance with expm1-based pieces.
        const double a = -std::expm1(-x) / kappa;
        const double b = -std::expm1(-2.0 * x) / (2.0 * kappa);
        const double dv = v0 - theta;
        return theta * theta * tau + 2.0 * theta * dv * a + dv * dv * b + s * (tau - b);
    }
    const double dv = theta - v0;
    const double inner = std::exp(2.0 * x) *
                             (theta * theta * (2.0 * x - 3.0) + 2.0 * theta * v0 +
                              s * (2.0 * x - 1.0) + v0 * v0) +
                         4.0 * theta * dv * std::exp(x) - dv * dv + s;
    return std::exp(-2.0 * x) * inner / (2.0 * kappa);
}

double sz_total_variance(double v0, double theta, double kappa, double omega, double tau) {
    if (!(tau > 0.0)) raise(ErrorCode::InvalidArgument, "tau must be positive");
    return sz_integrated_variance(v0, theta, kappa, omega, tau) / tau;
}

double sz_expected_vol(double expected_variance, double v0, double theta, double kappa,
                       double omega_h, double tau) {
    if (!(expected_variance > 0.0)) {
        raise(ErrorCode::NonPositiveVariance, "expected variance must be positive");
    }
    const double var = heston_average_variance_variance(v0, theta, kappa, omega_h, tau);
    const double adj = var / (8.0 * expected_variance * expected_variance);
    if (adj > 1.0) raise(ErrorCode::NegativeAdjusted, "convexity adjustment exceeds 1");
    return std::sqrt(expected_variance) * (1.0 - adj);
}

IcmCombination icm_moment_combinations(double mu2, double mu3, double mu4) {
    IcmCombination c;
    c.A = std::sqrt(1.0 + mu2);
    const double a = c.A;
    const double a2 = a * a;
    const double a3 = a2 * a;
    const double a5 = a3 * a2;
    const double a6 = a3 * a3;
    const double a7 = a6 * a;
    const double a8 = a7 * a;
    const double inv6 = 1.0 / a6;
    c.ey2 = inv6 * (4.0 * a8 - 8.0 * a7 + 4.0 * a6 + (4.0 * a6 - 8.0 * a5 + 4.0 * a3) * mu2 +
                    (4.0 * a2 - 4.0 * a3) * mu3 + mu4);
    c.exy = inv6 * (2.0 * a8 - 4.0 * a7 + 2.0 * a6 + (2.0 * a3 - 2.0 * a5) * mu2 +
                    (2.0 * a2 - a3) * mu3 + 0.5 * mu4);
    return c;
}

OptionStrip surface_strip(const VolSurface& surface, const TenorSlice& slice) {
    OptionStrip strip;
    strip.forward = slice.rates.forward;
    strip.k0 = slice.strike(Pillar::ATM);
    strip.r_d = slice.rates.r_d;
    strip.r_f = slice.rates.r_f;
    strip.tau = slice.tau;
    for (const Pillar p : all_pillars) {
        const OptionSpec spec = cell_spec(surface, slice, p);
        const double sigma = slice.smile.vol(p);
        double price;
        if (p == Pillar::ATM) {
            price = 0.5 * (gk_price(spec.with_side(OptionSide::Call), sigma) +
                           gk_price(spec.with_side(OptionSide::Put), sigma));
        } else {
            price = gk_price(spec, sigma);
        }
        strip.strikes.push_back(spec.strike);
        strip.prices.push_back(price);
    }
    return strip;
}

ImpliedMomentSet implied_moments(const OptionStrip& strip) {
    ImpliedMomentSet m;
    m.tau = strip.tau;
    m.power = power_portfolios(strip.strikes, strip.prices, strip.forward, strip.k0, strip.r_d,
                               strip.r_f, strip.tau);
    m.central = central_moments(m.power);
    m.shape = skew_kurt(m.central.mu2, m.central.mu3, m.central.mu4);
    m.icm = icm_moment_combinations(m.central.mu2, m.central.mu3, m.central.mu4);
    return m;
}

std::vector<ImpliedMomentSet> surface_moments(const VolSurface& surface) {
    std::vector<ImpliedMomentSet> out;
    out.reserve(surface.slices.size());
    for (const auto& slice : surface.slices) out.push_back(implied_moments(surface_strip(surface, slice)));
    return out;
}

VarianceTermStructure variance_term_structure(const VolSurface& surface, double rho,
                                              double omega) {
    VarianceTermStructure ts;
    for (const auto& slice : surface.slices) {
        const OptionStrip strip = surface_strip(surface, slice);
        const double v2 = implied_variance_vix(strip.strikes, strip.prices, strip.forward,
                                               strip.k0, strip.r_d, strip.tau);
        if (!(v2 > 0.0)) raise(ErrorCode::NonPositiveVariance, "implied variance is not positive");
        ts.tau.push_back(slice.tau);
        ts.v2.push_back(v2);
        ts.v2_corrected.push_back(corrected_variance(v2, rho, omega, slice.tau));
    }
    return ts;
}

}  // namespace fxsv
