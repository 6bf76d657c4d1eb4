#include "fxsv/pricer.hpp"

#include <cmath>
#include <numbers>

#include "fxsv/errors.hpp"
#include "fxsv/normal.hpp"

namespace fxsv {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double vol_lo = 1e-6;
constexpr double vol_hi = 5.0;

void check_spec(const OptionSpec& s) {
    if (!(s.spot > 0.0) || !(s.strike > 0.0) || !(s.tau > 0.0)) {
        raise(ErrorCode::InvalidArgument, "option spec needs positive spot, strike and tau");
    }
}

double trapezoid_weight(std::size_t i, std::size_t n) { return (i == 0 || i + 1 == n) ? 0.5 : 1.0; }

// CF of ln(S_T / F): removes the deterministic phase so strikes enter as ln(K / F).
struct NormalizedCf {
    const CharFn& cf;
    double log_forward;

    cplx operator()(cplx u) const { return cf(u) * std::exp(-I * u * log_forward); }
};

}  // namespace

std::size_t IntegrationGrid::node_count() const {
    check();
    return static_cast<std::size_t>(std::floor((w_max - w_min) / dw + 1e-9)) + 1;
}

void IntegrationGrid::check() const {
    if (!(w_min < w_max) || !(dw > 0.0)) {
        raise(ErrorCode::InvalidArgument, "integration grid needs w_min < w_max and dw > 0");
    }
}

double OptionSpec::forward() const { return spot * std::exp((r_d - r_f) * tau); }

OptionSpec OptionSpec::with_side(OptionSide s) const {
    OptionSpec out = *this;
    out.side = s;
    return out;
}

CharFn make_cf(const ModelParams& params, double spot, double tau, double r_d, double r_f,
               int j) {
    validate(params);
    const double x0 = std::log(spot);
    return [params, x0, tau, r_d, r_f, j](cplx u) {
        return model_cf(u, x0, tau, r_d, r_f, params, j);
    };
}

// ============================================================================
// Garman-Kohlhagen
// ============================================================================

double from_call(const OptionSpec& spec, double call) {
    if (spec.side == OptionSide::Call) return call;
    return call - std::exp(-spec.r_d * spec.tau) * (spec.forward() - spec.strike);
}

double gk_price(const OptionSpec& spec, double sigma) {
    check_spec(spec);
    if (!(sigma > 0.0)) raise(ErrorCode::InvalidArgument, "sigma must be positive");
    const double sq = sigma * std::sqrt(spec.tau);
    const double d1 = (std::log(spec.spot / spec.strike) + (spec.r_d - spec.r_f) * spec.tau) / sq +
                      0.5 * sq;
    const double d2 = d1 - sq;
    const double df_d = std::exp(-spec.r_d * spec.tau);
    const double df_f = std::exp(-spec.r_f * spec.tau);
    if (spec.side == OptionSide::Call) {
        return spec.spot * df_f * norm_cdf(d1) - spec.strike * df_d * norm_cdf(d2);
    }
    return spec.strike * df_d * norm_cdf(-d2) - spec.spot * df_f * norm_cdf(-d1);
}

double gk_delta(const OptionSpec& spec, double sigma) {
    check_spec(spec);
    const double sq = sigma * std::sqrt(spec.tau);
    const double d1 = (std::log(spec.spot / spec.strike) + (spec.r_d - spec.r_f) * spec.tau) / sq +
                      0.5 * sq;
    const double df_f = std::exp(-spec.r_f * spec.tau);
    return spec.side == OptionSide::Call ? df_f * norm_cdf(d1) : -df_f * norm_cdf(-d1);
}

double bs_vega(const OptionSpec& spec, double sigma) {
    check_spec(spec);
    const double sq = sigma * std::sqrt(spec.tau);
    const double d2 = (std::log(spec.spot / spec.strike) + (spec.r_d - spec.r_f) * spec.tau) / sq -
                      0.5 * sq;
    return spec.strike * std::exp(-spec.r_d * spec.tau) * std::sqrt(spec.tau) * norm_pdf(d2);
}

double implied_vol(const OptionSpec& spec, double price) {
    check_spec(spec);
    double lo = vol_lo;
    double hi = vol_hi;
    const double p_lo = gk_price(spec, lo);
    const double p_hi = gk_price(spec, hi);
    if (!(price >= p_lo && price <= p_hi)) {
        raise(ErrorCode::OutOfBounds, "price outside the [1e-6, 5] volatility bracket");
    }
    for (int n = 0; n < 200 && hi - lo > 1e-15; ++n) {
        const double mid = 0.5 * (lo + hi);
        const double p = gk_price(spec, mid);
        if (p == price) return mid;
        if (p < price) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

// ============================================================================
// Fourier pricers
// ============================================================================

std::vector<double> attari_calls(const CharFn& cf, double spot, double tau, double r_d,
                                 double r_f, const std::vector<double>& strikes,
                                 const IntegrationGrid& grid) {
    const std::size_t n = grid.node_count();
    const double log_f = std::log(spot) + (r_d - r_f) * tau;
    const NormalizedCf psi{cf, log_f};

    std::vector<double> ls(strikes.size());
    for (std::size_t k = 0; k < strikes.size(); ++k) ls[k] = std::log(strikes[k]) - log_f;
    std::vector<double> sums(strikes.size(), 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::exp(grid.node(i));
        const cplx kernel = psi(u) * (1.0 - I / u) / (1.0 + u * u) * (u * trapezoid_weight(i, n));
        for (std::size_t k = 0; k < strikes.size(); ++k) {
            sums[k] += (std::exp(-I * (u * ls[k])) * kernel).real();
        }
    }

    std::vector<double> calls(strikes.size());
    const double df_d = std::exp(-r_d * tau);
    const double df_f = std::exp(-r_f * tau);
    for (std::size_t k = 0; k < strikes.size(); ++k) {
        const double integral = sums[k] * grid.dw / std::numbers::pi;
        calls[k] = spot * df_f - strikes[k] * df_d * (0.5 + integral);
    }
    return calls;
}

double attari_price(const CharFn& cf, const OptionSpec& spec, const IntegrationGrid& grid) {
    check_spec(spec);
    const auto calls = attari_calls(cf, spec.spot, spec.tau, spec.r_d, spec.r_f, {spec.strike}, grid);
    return from_call(spec, calls.front());
}

namespace {

TwoIntegralResult two_integral(const std::function<cplx(double)>& psi1,
                               const std::function<cplx(double)>& psi2, const OptionSpec& spec,
                               double l, const IntegrationGrid& grid) {
    const std::size_t n = grid.node_count();
    double s1 = 0.0;
    double s2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = std::exp(grid.node(i));
        const double w = trapezoid_weight(i, n);
        const cplx phase = std::exp(-I * (u * l));
        s1 += w * (phase * psi1(u)).imag();
        s2 += w * (phase * psi2(u)).imag();
    }
    TwoIntegralResult r;
    r.p1 = 0.5 + s1 * grid.dw / std::numbers::pi;
    r.p2 = 0.5 + s2 * grid.dw / std::numbers::pi;
    const double call = spec.spot * std::exp(-spec.r_f * spec.tau) * r.p1 -
                        spec.strike * std::exp(-spec.r_d * spec.tau) * r.p2;
    r.price = from_call(spec, call);
    return r;
}

}  // namespace

TwoIntegralResult heston_two_integral_price(const CharFn& cf2, const OptionSpec& spec,
                                            const IntegrationGrid& grid) {
    check_spec(spec);
    const double log_f = std::log(spec.forward());
    const NormalizedCf psi{cf2, log_f};
    const cplx norm = psi(-I);
    const double l = std::log(spec.strike) - log_f;
    return two_integral([&](double u) { return psi(u - I) / norm; },
                        [&](double u) { return psi(u); }, spec, l, grid);
}

TwoIntegralResult heston_two_integral_price(const CharFn& cf1, const CharFn& cf2,
                                            const OptionSpec& spec, const IntegrationGrid& grid) {
    check_spec(spec);
    const double log_f = std::log(spec.forward());
    const NormalizedCf psi1{cf1, log_f};
    const NormalizedCf psi2{cf2, log_f};
    const double l = std::log(spec.strike) - log_f;
    return two_integral([&](double u) { return psi1(u); }, [&](double u) { return psi2(u); },
                        spec, l, grid);
}

double carr_madan_price(const CharFn& cf, const OptionSpec& spec, double alpha,
                        const IntegrationGrid& grid) {
    check_spec(spec);
    if (!(alpha > 0.0)) raise(ErrorCode::AlphaInvalid, "alpha must be positive");
    const double log_f = std::log(spec.forward());
    const NormalizedCf psi{cf, log_f};
    const cplx shift{0.0, -(alpha + 1.0)};
    cplx moment;
    try {
        moment = psi(shift);
    } catch (const Error&) {
        raise(ErrorCode::AlphaInvalid, "E[S_T^(alpha+1)] is not finite");
    }
    if (!std::isfinite(moment.real()) || !(moment.real() > 0.0)) {
        raise(ErrorCode::AlphaInvalid, "E[S_T^(alpha+1)] is not finite");
    }

    const double l = std::log(spec.strike) - log_f;
    auto integrand = [&](double v) {
        const cplx denom{alpha * alpha + alpha - v * v, (2.0 * alpha + 1.0) * v};
        return (std::exp(-I * (v * l)) * psi(v + shift) / denom).real();
    };
    const std::size_t n = grid.node_count();
    const double v_min = std::exp(grid.w_min);
    double sum = integrand(v_min) * v_min;  // [0, v_min] piece
    for (std::size_t i = 0; i < n; ++i) {
        const double v = std::exp(grid.node(i));
        sum += trapezoid_weight(i, n) * integrand(v) * v * grid.dw;
    }
    const double scale = spec.strike * std::exp(-spec.r_d * spec.tau) *
                         std::exp(-(alpha + 1.0) * l) / std::numbers::pi;
    return from_call(spec, scale * sum);
}

// ============================================================================
// Surface pricing
// ============================================================================

OptionSpec cell_spec(const VolSurface& surface, const TenorSlice& slice, Pillar pillar) {
    OptionSpec s;
    s.spot = surface.spot;
    s.strike = slice.strike(pillar);
    s.tau = slice.tau;
    s.r_d = slice.rates.r_d;
    s.r_f = slice.rates.r_f;
    s.side = pillar_is_call(pillar) ? OptionSide::Call : OptionSide::Put;
    return s;
}

std::vector<CellPrice> surface_prices(const ModelParams& params, const VolSurface& surface,
                                      const IntegrationGrid& grid) {
    std::vector<CellPrice> cells;
    cells.reserve(surface.cell_count());
    for (const auto& slice : surface.slices) {
        const auto cf = make_cf(params, surface.spot, slice.tau, slice.rates.r_d, slice.rates.r_f);
        const std::vector<double> strikes(slice.strikes.begin(), slice.strikes.end());
        const auto calls =
            attari_calls(cf, surface.spot, slice.tau, slice.rates.r_d, slice.rates.r_f, strikes, grid);
        for (const Pillar p : all_pillars) {
            const auto idx = static_cast<std::size_t>(p);
            const OptionSpec spec = cell_spec(surface, slice, p);
            CellPrice c;
            c.tenor = slice.tenor;
            c.pillar = p;
            c.tau = slice.tau;
            c.strike = strikes[idx];
            c.market_vol = slice.smile.vol(p);
            c.model_call = calls[idx];
            c.model_vol = implied_vol(spec, from_call(spec, calls[idx]));
            cells.push_back(c);
        }
    }
    return cells;
}

}  // namespace fxsv
