#include "fxsv/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fxsv/errors.hpp"
#include "fxsv/estimators.hpp"
#include "fxsv/moments.hpp"

namespace fxsv {

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

double sanitize(double v) { return std::isnan(v) ? inf : v; }

std::vector<double> add(const std::vector<double>& a, const std::vector<double>& b, double s) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s * (b[i] - a[i]);
    return out;
}

}  // namespace

// ============================================================================
// Nelder-Mead
// ============================================================================

void NelderMeadConfig::check() const {
    if (!(alpha > 0.0) || !(gamma > 1.0) || !(rho > 0.0 && rho <= 0.5) ||
        !(sigma > 0.0 && sigma < 1.0)) {
        raise(ErrorCode::InvalidArgument, "Nelder-Mead coefficients out of range");
    }
    if (!(eps_f >= 0.0) || !(eps_volume >= 0.0) || max_iter < 0) {
        raise(ErrorCode::InvalidArgument, "Nelder-Mead tolerances must be non-negative");
    }
}

double simplex_volume(const std::vector<std::vector<double>>& vertices) {
    if (vertices.empty()) return 0.0;
    const std::size_t n = vertices.size() - 1;
    if (n == 0) return 0.0;
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m[i][j] = vertices[i + 1][j] - vertices[0][j];
    }
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
        }
        if (m[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(m[piv], m[c]);
            det = -det;
        }
        det *= m[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = m[r][c] / m[c][c];
            for (std::size_t k = c; k < n; ++k) m[r][k] -= f * m[c][k];
        }
    }
    double fact = 1.0;
    for (std::size_t k = 2; k <= n; ++k) fact *= static_cast<double>(k);
    return std::abs(det) / fact;
}

NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x_start,
                             const NelderMeadConfig& config) {
    config.check();
    const std::size_t n = x_start.size();
    NelderMeadResult res;
    const double f_start = f(x_start);
    res.evaluations = 1;
    if (!std::isfinite(f_start)) {
        raise(ErrorCode::NonFiniteObjective, "objective is not finite at the start point");
    }
    if (n == 0) {
        res.x = x_start;
        res.f = f_start;
        res.converged = true;
        return res;
    }

    auto eval = [&](const std::vector<double>& x) {
        ++res.evaluations;
        return sanitize(f(x));
    };

    std::vector<std::vector<double>> xs(n + 1);
    std::vector<double> fs(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x_start;
        xs[i][i] += x_start[i] != 0.0 ? 0.05 : 0.00025;
        fs[i] = eval(xs[i]);
    }
    xs[n] = x_start;
    fs[n] = f_start;

    std::vector<std::size_t> order(n + 1);
    for (;;) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        {
            std::vector<std::vector<double>> x2(n + 1);
            std::vector<double> f2(n + 1);
            for (std::size_t i = 0; i <= n; ++i) {
                x2[i] = std::move(xs[order[i]]);
                f2[i] = fs[order[i]];
            }
            xs = std::move(x2);
            fs = std::move(f2);
        }

        if (config.observer) config.observer(res.iterations, fs[0]);
        const bool f_small = std::abs(fs[n] - fs[0]) < config.eps_f;
        const bool v_small = simplex_volume(xs) < config.eps_volume;
        if (config.stop_any ? (f_small || v_small) : (f_small && v_small)) {
            res.converged = true;
            break;
        }
        if (res.iterations >= config.max_iter) break;
        ++res.iterations;

        std::vector<double> xo(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < n; ++k) xo[k] += xs[i][k];
        }
        for (auto& v : xo) v /= static_cast<double>(n);

        const auto xr = add(xo, xs[n], -config.alpha);
        const double fr = eval(xr);
        if (fs[0] <= fr && fr <= fs[n - 1]) {
            xs[n] = xr;
            fs[n] = fr;
            continue;
        }
        if (fr <= fs[0]) {
            const auto xe = add(xo, xr, config.gamma);
            const double fe = eval(xe);
            if (fe <= fr) {
                xs[n] = xe;
                fs[n] = fe;
            } else {
                xs[n] = xr;
                fs[n] = fr;
            }
            continue;
        }
        const auto xc = add(xo, xs[n], config.rho);
        const double fc = eval(xc);
        if (fc <= fs[n]) {
            xs[n] = xc;
            fs[n] = fc;
            continue;
        }
        for (std::size_t i = 1; i <= n; ++i) {
            xs[i] = add(xs[0], xs[i], config.sigma);
            fs[i] = eval(xs[i]);
        }
    }
    res.x = xs[0];
    res.f = fs[0];
    return res;
}

// ============================================================================
// Parameter vectors and transforms
// ============================================================================

std::size_t parameter_count(ModelKind kind) { return is_two_factor(kind) ? 10 : 5; }

std::vector<std::string> parameter_names(ModelKind kind) {
    static const std::vector<std::string> base{"v0", "theta", "kappa", "omega", "rho"};
    if (!is_two_factor(kind)) return base;
    std::vector<std::string> out;
    for (int f = 1; f <= 2; ++f) {
        for (const auto& b : base) out.push_back(b + std::to_string(f));
    }
    return out;
}

std::vector<double> to_vector(const ModelParams& params) {
    std::vector<double> v;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, TwoFactorParams>) {
                for (const auto& f : p.factors) v.insert(v.end(), {f.v0, f.theta, f.kappa, f.omega, f.rho});
            } else {
                v = {p.v0, p.theta, p.kappa, p.omega, p.rho};
            }
        },
        params.base);
    return v;
}

ModelParams from_vector(ModelKind kind, const std::vector<double>& values) {
    if (values.size() != parameter_count(kind)) {
        raise(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    }
    const auto& x = values;
    switch (kind) {
        case ModelKind::Heston:
            return ModelParams::heston(HestonParams{x[0], x[1], x[2], x[3], x[4], 0.0});
        case ModelKind::SchobelZhu:
            return ModelParams::schobel_zhu(SchobelZhuParams{x[0], x[1], x[2], x[3], x[4], 0.0});
        default: {
            TwoFactorParams p;
            p.kind = kind == ModelKind::OUOU ? TwoFactorKind::OUOU : TwoFactorKind::Bates2F;
            for (std::size_t f = 0; f < 2; ++f) {
                p.factors[f] = FactorParams{x[5 * f], x[5 * f + 1], x[5 * f + 2], x[5 * f + 3], x[5 * f + 4]};
            }
            return ModelParams::two_factor(kind, p);
        }
    }
}

std::vector<double> transform_params(ModelKind kind, const std::vector<double>& natural) {
    if (natural.size() != parameter_count(kind)) {
        raise(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    }
    std::vector<double> x(natural.size());
    for (std::size_t i = 0; i < natural.size(); ++i) {
        const double v = natural[i];
        if (i % 5 == 4) {
            if (!(std::abs(v) < 1.0)) raise(ErrorCode::InvalidArgument, "rho must lie in (-1, 1)");
            x[i] = std::atanh(v);
        } else {
            if (!(v > 0.0)) raise(ErrorCode::InvalidArgument, "v0, theta, kappa and omega must be positive");
            x[i] = std::log(v);
        }
    }
    return x;
}

std::vector<double> untransform_params(ModelKind kind, const std::vector<double>& x) {
    if (x.size() != parameter_count(kind)) {
        raise(ErrorCode::InvalidArgument, "parameter vector has the wrong length");
    }
    std::vector<double> natural(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        natural[i] = i % 5 == 4 ? std::tanh(x[i]) : std::exp(x[i]);
    }
    return natural;
}

bool feller_satisfied(const ModelParams& params) {
    const auto v = to_vector(params);
    for (std::size_t f = 0; f + 4 < v.size(); f += 5) {
        if (!(2.0 * v[f + 2] * v[f + 1] - v[f + 3] * v[f + 3] > 0.0)) return false;
    }
    return true;
}

// ============================================================================
// Cost functions
// ============================================================================

std::string_view cost_kind_name(CostKind kind) {
    switch (kind) {
        case CostKind::MSE: return "mse";
        case CostKind::MAE: return "mae";
        case CostKind::MAPE: return "mape";
        case CostKind::MSPE: return "mspe";
    }
    return "mse";
}

std::optional<CostKind> parse_cost_kind(std::string_view name) {
    for (const auto k : {CostKind::MSE, CostKind::MAE, CostKind::MAPE, CostKind::MSPE}) {
        if (cost_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

double cost_term(CostKind kind, double model, double market) {
    const double e = model - market;
    switch (kind) {
        case CostKind::MSE: return e * e;
        case CostKind::MAE: return std::abs(e);
        case CostKind::MAPE: return std::abs(e / market);
        case CostKind::MSPE: return (e / market) * (e / market);
    }
    return e * e;
}

SurfaceObjective::SurfaceObjective(const VolSurface& surface, const CostSpec& spec,
                                   const IntegrationGrid& grid)
    : surface_(&surface), spec_(spec), grid_(grid) {
    if (!(spec.vega_floor > 0.0)) raise(ErrorCode::InvalidArgument, "vega floor must be positive");
    grid_.check();
    for (const auto& slice : surface.slices) {
        for (const Pillar p : all_pillars) {
            const OptionSpec call = cell_spec(surface, slice, p).with_side(OptionSide::Call);
            const double sigma = slice.smile.vol(p);
            const double vega = std::max(bs_vega(call, sigma), spec.vega_floor);
            vegas_.push_back(vega);
            market_values_.push_back(spec.target == CostTarget::ImpliedVol ? sigma
                                                                           : gk_price(call, sigma) / vega);
        }
    }
}

std::vector<double> SurfaceObjective::model_values(const ModelParams& params) const {
    std::vector<double> out;
    out.reserve(market_values_.size());
    std::size_t cell = 0;
    for (const auto& slice : surface_->slices) {
        const auto cf = make_cf(params, surface_->spot, slice.tau, slice.rates.r_d, slice.rates.r_f);
        const std::vector<double> strikes(slice.strikes.begin(), slice.strikes.end());
        const auto calls = attari_calls(cf, surface_->spot, slice.tau, slice.rates.r_d,
                                        slice.rates.r_f, strikes, grid_);
        for (const Pillar p : all_pillars) {
            const double call = calls[static_cast<std::size_t>(p)];
            if (spec_.target == CostTarget::ImpliedVol) {
                const OptionSpec s = cell_spec(*surface_, slice, p);
                out.push_back(implied_vol(s, from_call(s, call)));
            } else {
                out.push_back(call / vegas_[cell]);
            }
            ++cell;
        }
    }
    return out;
}

double SurfaceObjective::operator()(const ModelParams& params) const {
    if (spec_.feller && !feller_satisfied(params)) return feller_penalty;
    const auto model = model_values(params);
    double sum = 0.0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        sum += cost_term(spec_.kind, model[i], market_values_[i]);
    }
    return sum;
}

double cost(const ModelParams& params, const VolSurface& surface, const CostSpec& spec,
            const IntegrationGrid& grid) {
    return SurfaceObjective(surface, spec, grid)(params);
}

// ============================================================================
// Full-surface calibration
// ============================================================================

int default_iteration_cap(ModelKind kind) { return is_two_factor(kind) ? 800 : 1600; }

CalibrationOptions default_options(ModelKind kind) {
    CalibrationOptions o;
    o.nm.max_iter = default_iteration_cap(kind);
    o.nm.eps_f = 1e-14;
    o.nm.eps_volume = 1e-40;
    o.cost.feller = kind == ModelKind::Bates2FFeller;
    return o;
}

std::vector<bool> pinned_rho_mask(ModelKind kind) {
    std::vector<bool> mask(parameter_count(kind), true);
    for (std::size_t i = 4; i < mask.size(); i += 5) mask[i] = false;
    return mask;
}

namespace {

// Caps each factor's omega at sqrt(1.99 theta kappa) so a Feller-mode search starts feasible.
ModelParams feller_feasible(const ModelParams& params) {
    auto v = to_vector(params);
    for (std::size_t f = 0; f + 4 < v.size(); f += 5) v[f + 3] = feller_truncated_omega(v[f + 3], v[f + 1], v[f + 2]);
    ModelParams p = from_vector(params.kind, v);
    p.jumps = params.jumps;
    return p;
}

}  // namespace

CalibrationResult calibrate_full(const VolSurface& surface, const ModelParams& requested_start,
                                 const CalibrationOptions& options) {
    validate(requested_start);
    const bool project = options.cost.feller && !feller_satisfied(requested_start);
    const ModelParams start = project ? feller_feasible(requested_start) : requested_start;
    const ModelKind kind = start.kind;
    const std::size_t n = parameter_count(kind);
    std::vector<bool> free = options.free.empty() ? std::vector<bool>(n, true) : options.free;
    if (free.size() != n) raise(ErrorCode::InvalidArgument, "free mask has the wrong length");

    const SurfaceObjective objective(surface, options.cost, options.grid);
    const auto x_full = transform_params(kind, to_vector(start));
    std::vector<std::size_t> idx;
    std::vector<double> x0;
    for (std::size_t i = 0; i < n; ++i) {
        if (free[i]) {
            idx.push_back(i);
            x0.push_back(x_full[i]);
        }
    }
    auto expand = [&](const std::vector<double>& x) {
        std::vector<double> full = x_full;
        for (std::size_t k = 0; k < idx.size(); ++k) full[idx[k]] = x[k];
        ModelParams p = from_vector(kind, untransform_params(kind, full));
        p.jumps = start.jumps;
        return p;
    };

    CalibrationResult res;
    res.kind = kind;
    res.start = start;
    if (project) res.flags.push_back("start_feller_truncated");
    res.start_cost = objective(expand(x0));
    if (!std::isfinite(res.start_cost)) {
        raise(ErrorCode::NonFiniteObjective, "cost is not finite at the start point");
    }
    const Objective f = [&](const std::vector<double>& x) {
        try {
            return objective(expand(x));
        } catch (const Error&) {
            return inf;
        }
    };
    const auto nm = nelder_mead(f, x0, options.nm);
    res.params = expand(nm.x);
    res.cost = nm.f;
    res.iterations = nm.iterations;
    res.converged = nm.converged;
    res.feller_satisfied = feller_satisfied(res.params);
    const auto model = objective.model_values(res.params);
    for (std::size_t i = 0; i < model.size(); ++i) {
        res.residuals.push_back(model[i] - objective.market_values()[i]);
    }
    if (!res.converged) res.flags.push_back("iteration_cap");
    if (options.cost.feller && !res.feller_satisfied) res.flags.push_back("feller_violated");
    return res;
}

// ============================================================================
// Term-structure fits
// ============================================================================

NelderMeadConfig term_structure_config() {
    NelderMeadConfig c;
    c.max_iter = 8000;
    c.eps_f = 1e-20;
    c.eps_volume = 1e-40;
    return c;
}

namespace {

using CurveFn = std::function<double(double v0, double theta, double kappa, double tau)>;

TermStructureFit fit_curve(const std::vector<double>& tau, const std::vector<double>& targets,
                           double v0_start, double theta_start, double kappa_start,
                           const CurveFn& curve, const NelderMeadConfig& config) {
    if (tau.size() != targets.size()) raise(ErrorCode::InvalidArgument, "tau and targets differ in length");
    if (tau.size() < 2) raise(ErrorCode::InvalidArgument, "term structure needs at least two tenors");
    if (!(v0_start > 0.0) || !(theta_start > 0.0)) {
        raise(ErrorCode::NonPositiveVariance, "term-structure start values must be positive");
    }
    const Objective f = [&](const std::vector<double>& x) {
        const double v0 = std::exp(x[0]);
        const double th = std::exp(x[1]);
        const double ka = std::exp(x[2]);
        double sum = 0.0;
        for (std::size_t i = 1; i < tau.size(); ++i) {
            const double e = curve(v0, th, ka, tau[i]) - targets[i];
            sum += e * e;
        }
        return sum;
    };
    const auto nm = nelder_mead(
        f, {std::log(v0_start), std::log(theta_start), std::log(kappa_start)}, config);
    TermStructureFit fit;
    fit.v0 = std::exp(nm.x[0]);
    fit.theta = std::exp(nm.x[1]);
    fit.kappa = std::exp(nm.x[2]);
    fit.cost = nm.f;
    fit.iterations = nm.iterations;
    fit.converged = nm.converged;
    fit.kappa_identified = std::abs(fit.v0 - fit.theta) > 1e-6 * std::max(fit.v0, fit.theta);
    return fit;
}

}  // namespace

TermStructureFit calibrate_variance_ts(const std::vector<double>& tau, const std::vector<double>& v2,
                                       const NelderMeadConfig& config) {
    std::vector<double> vols(v2.size());
    for (std::size_t i = 0; i < v2.size(); ++i) {
        if (!(v2[i] > 0.0)) raise(ErrorCode::NonPositiveVariance, "variance target is not positive");
        vols[i] = std::sqrt(v2[i]);
    }
    const CurveFn curve = [](double v0, double th, double ka, double t) {
        return std::sqrt(heston_total_variance(v0, th, ka, t));
    };
    return fit_curve(tau, vols, v2.front(), v2.back(), 2.0, curve, config);
}

TermStructureFit calibrate_vol_ts_sz(const std::vector<double>& tau, const std::vector<double>& vols,
                                     const NelderMeadConfig& config) {
    const CurveFn curve = [](double v0, double th, double ka, double t) {
        return heston_total_variance(v0, th, ka, t);
    };
    return fit_curve(tau, vols, vols.front(), vols.back(), 0.95, curve, config);
}

TermStructureFit calibrate_sz_variance_ts(const std::vector<double>& tau,
                                          const std::vector<double>& v2, double omega,
                                          const NelderMeadConfig& config) {
    std::vector<double> vols(v2.size());
    for (std::size_t i = 0; i < v2.size(); ++i) {
        if (!(v2[i] > 0.0)) raise(ErrorCode::NonPositiveVariance, "variance target is not positive");
        vols[i] = std::sqrt(v2[i]);
    }
    const CurveFn curve = [omega](double v0, double th, double ka, double t) {
        return std::sqrt(sz_total_variance(v0, th, ka, omega, t));
    };
    return fit_curve(tau, vols, vols.front(), vols.back(), 0.95, curve, config);
}

// ============================================================================
// Outliers
// ============================================================================

std::vector<std::size_t> detect_outliers(const std::vector<double>& series, double threshold) {
    std::vector<std::size_t> out;
    double running = -inf;
    for (std::size_t t = 0; t < series.size(); ++t) {
        const double l = std::log(series[t]);
        if (t > 0 && l - running > threshold) out.push_back(t);
        running = std::max(running, l);
    }
    return out;
}

std::vector<DailyCalibration> outlier_recalibration(const std::vector<CalibrationResult>& series,
                                                    const std::vector<std::size_t>& params,
                                                    const Recalibrate& recalibrate,
                                                    double start_factor, double kappa_factor) {
    std::vector<DailyCalibration> out(series.size());
    for (std::size_t t = 0; t < series.size(); ++t) out[t].result = series[t];
    if (series.empty()) return out;
    const ModelKind kind = series.front().kind;
    const auto names = parameter_names(kind);

    std::vector<std::vector<std::size_t>> flagged(series.size());
    for (const std::size_t p : params) {
        if (p >= names.size()) raise(ErrorCode::InvalidArgument, "parameter index out of range");
        std::vector<double> values;
        values.reserve(series.size());
        for (const auto& r : series) values.push_back(to_vector(r.params)[p]);
        for (const std::size_t t : detect_outliers(values)) flagged[t].push_back(p);
    }
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (flagged[t].empty()) continue;
        auto start = to_vector(series[t].start);
        for (const std::size_t p : flagged[t]) {
            start[p] *= start_factor;
            if (p % 5 == 1) start[p + 1] *= kappa_factor;
            out[t].outlier_params.push_back(names[p]);
        }
        ModelParams s = from_vector(kind, start);
        s.jumps = series[t].start.jumps;
        out[t].recalibrated = recalibrate(t, s);
    }
    return out;
}

// ============================================================================
// Two-stage calibration
// ============================================================================

TwoFactorParams symmetric_two_factor(ModelKind kind, const FactorParams& f) {
    if (!is_two_factor(kind)) raise(ErrorCode::InvalidArgument, "two-factor model kind expected");
    TwoFactorParams p;
    if (kind == ModelKind::OUOU) {
        p.kind = TwoFactorKind::OUOU;
        const double s = std::sqrt(2.0);
        p.factors.fill(FactorParams{f.v0 / s, f.theta / s, f.kappa, f.omega / s, f.rho});
    } else {
        p.kind = TwoFactorKind::Bates2F;
        p.factors.fill(FactorParams{f.v0 / 2.0, f.theta / 2.0, f.kappa, f.omega, f.rho});
    }
    return p;
}

TwoStageResult two_stage_calibration(ModelKind kind, const VolSurface& surface,
                                     const FactorParams& symmetric_start,
                                     const CalibrationOptions& stage1,
                                     const CalibrationOptions& stage2) {
    if (!is_two_factor(kind)) raise(ErrorCode::InvalidArgument, "two-factor model kind expected");
    const SurfaceObjective objective(surface, stage1.cost, stage1.grid);
    auto build = [&](const std::vector<double>& natural) {
        return ModelParams::two_factor(
            kind, symmetric_two_factor(kind, FactorParams{natural[0], natural[1], natural[2],
                                                          natural[3], natural[4]}));
    };
    const std::vector<double> start_vec{symmetric_start.v0, symmetric_start.theta,
                                        symmetric_start.kappa, symmetric_start.omega,
                                        symmetric_start.rho};
    const auto x0 = transform_params(ModelKind::Heston, start_vec);

    TwoStageResult out;
    CalibrationResult& s1 = out.stage1;
    s1.kind = kind;
    s1.start = build(start_vec);
    s1.start_cost = objective(s1.start);
    if (!std::isfinite(s1.start_cost)) {
        raise(ErrorCode::NonFiniteObjective, "cost is not finite at the start point");
    }
    const Objective f = [&](const std::vector<double>& x) {
        try {
            return objective(build(untransform_params(ModelKind::Heston, x)));
        } catch (const Error&) {
            return inf;
        }
    };
    const auto nm = nelder_mead(f, x0, stage1.nm);
    s1.params = build(untransform_params(ModelKind::Heston, nm.x));
    s1.cost = nm.f;
    s1.iterations = nm.iterations;
    s1.converged = nm.converged;
    s1.feller_satisfied = feller_satisfied(s1.params);
    const auto model = objective.model_values(s1.params);
    for (std::size_t i = 0; i < model.size(); ++i) {
        s1.residuals.push_back(model[i] - objective.market_values()[i]);
    }
    if (!s1.converged) s1.flags.push_back("iteration_cap");

    ModelParams stage2_start = s1.params;
    if (kind == ModelKind::Bates2FFeller) {
        auto& tf = std::get<TwoFactorParams>(stage2_start.base);
        for (auto& fac : tf.factors) {
            const double capped = std::min(fac.omega, std::sqrt(1.99 * fac.theta * fac.kappa));
            if (capped < fac.omega) {
                fac.omega = capped;
                s1.flags.push_back("omega_feller_truncated");
            }
        }
    }
    out.stage2 = calibrate_full(surface, stage2_start, stage2);
    return out;
}

// ============================================================================
// Calibration risk and RMSE
// ============================================================================

CalibrationRisk calibration_risk(const VolSurface& surface, const ModelParams& base,
                                 const CalibrationOptions& options) {
    if (is_two_factor(base.kind)) raise(ErrorCode::InvalidArgument, "calibration risk is one-factor only");
    CalibrationRisk risk;
    const auto all = parameter_names(base.kind);
    const std::vector<CostKind> kinds{CostKind::MSE, CostKind::MAE, CostKind::MAPE};
    CalibrationOptions o = options;
    o.free = {true, true, true, false, false};
    o.cost.feller = false;
    for (std::size_t k = 0; k < 3; ++k) {
        o.cost.kind = kinds[k];
        risk.runs[k] = calibrate_full(surface, base, o);
    }
    for (std::size_t p = 0; p < 3; ++p) {
        risk.names.push_back(all[p]);
        double worst = 0.0;
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = a + 1; b < 3; ++b) {
                const double pa = to_vector(risk.runs[a].params)[p];
                const double pb = to_vector(risk.runs[b].params)[p];
                worst = std::max(worst, std::abs(pa - pb));
            }
        }
        risk.risk.push_back(worst);
    }
    return risk;
}

RmseReport rmse_report(const ModelParams& params, const VolSurface& surface,
                       const IntegrationGrid& grid) {
    const SurfaceObjective vega_obj(surface, CostSpec{CostKind::MSE, CostTarget::VegaWeightedPrice},
                                    grid);
    const SurfaceObjective vol_obj(surface, CostSpec{CostKind::MSE, CostTarget::ImpliedVol}, grid);
    const double n = static_cast<double>(vega_obj.cell_count());
    if (n == 0.0) raise(ErrorCode::InvalidArgument, "surface has no cells");
    RmseReport r;
    r.vega = std::sqrt(vega_obj(params) / n);
    r.vol = std::sqrt(vol_obj(params) / n);
    return r;
}

}  // namespace fxsv
