#include "fxsv/pipeline.hpp"

#include <cmath>

#include "fxsv/errors.hpp"

namespace fxsv {

namespace {

constexpr StartMethod all_methods[] = {StartMethod::ICM,      StartMethod::Durrleman,
                                       StartMethod::Hist,     StartMethod::TwoStage,
                                       StartMethod::EVP,      StartMethod::MEVP};

bool sz_family(ModelKind kind) { return kind == ModelKind::SchobelZhu || kind == ModelKind::OUOU; }

struct OneFactor {
    FactorParams params;
    std::vector<std::string> flags;
};

// One-factor estimator output. Estimator-only methods fall back on ICM for the split-based starts.
OneFactor one_factor_start(const DateContext& ctx, StartMethod method, bool sz, StartPoint& sp) {
    const TermStructureFit& h = sp.variance_fit;
    const StartMethod est = (method == StartMethod::Durrleman || method == StartMethod::Hist)
                                ? method
                                : StartMethod::ICM;
    OneFactor out;
    double omega = 0.0;
    double rho = 0.0;
    if (est == StartMethod::ICM) {
        const auto moments = surface_moments(ctx.surface);
        IcmEstimate e = sz ? icm_sz(moments, sp.vol_fit->v0) : icm_heston(moments);
        omega = e.omega;
        rho = e.rho;
        out.flags = e.flags;
    } else if (est == StartMethod::Durrleman) {
        DurrlemanEstimate e = durrleman(ctx.surface, sp.vix.v2_corrected.front(), h.theta);
        omega = sz ? 0.5 * e.omega : e.omega;
        rho = e.rho;
        out.flags = e.flags;
    } else {
        const HistoricalPoint& p = sz ? ctx.hist_sz : ctx.hist_heston;
        omega = p.omega;
        rho = p.rho;
        if (p.warm_up) out.flags.push_back("historical_warm_up");
    }
    if (!(omega > 0.0)) {
        omega = sz ? 0.5 * ctx.vix_1m : ctx.vix_1m;
        out.flags.push_back("omega_fallback");
    }
    if (!(std::abs(rho) < 1.0)) {
        rho = std::copysign(0.99, rho);
        out.flags.push_back("rho_clamped");
    }
    sp.omega = omega;
    sp.rho = rho;
    if (sz) {
        out.params = FactorParams{sp.vol_fit->v0, sp.vol_fit->theta, sp.vol_fit->kappa, omega, rho};
    } else {
        out.params = FactorParams{h.v0, h.theta, h.kappa, omega, rho};
    }
    return out;
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
    to.insert(to.end(), from.begin(), from.end());
}

}  // namespace

std::string_view start_method_name(StartMethod method) {
    switch (method) {
        case StartMethod::ICM: return "icm";
        case StartMethod::Durrleman: return "durrleman";
        case StartMethod::Hist: return "hist";
        case StartMethod::TwoStage: return "twostage";
        case StartMethod::EVP: return "evp";
        case StartMethod::MEVP: return "mevp";
    }
    return "icm";
}

std::optional<StartMethod> parse_start_method(std::string_view name) {
    for (const auto m : all_methods) {
        if (start_method_name(m) == name) return m;
    }
    return std::nullopt;
}

PreparedContexts prepare_contexts(const std::vector<VolSurface>& surfaces) {
    PreparedContexts out;
    std::vector<double> vix;
    std::vector<double> spot;
    for (const auto& s : surfaces) {
        try {
            if (s.slices.empty()) raise(ErrorCode::InvalidArgument, "surface has no tenors");
            const OptionStrip strip = surface_strip(s, s.slices.front());
            const double v2 = implied_variance_vix(strip.strikes, strip.prices, strip.forward,
                                                   strip.k0, strip.r_d, strip.tau);
            if (!(v2 > 0.0)) raise(ErrorCode::NonPositiveVariance, "one-month VIX variance is not positive");
            DateContext ctx;
            ctx.surface = s;
            ctx.vix_1m = std::sqrt(v2);
            out.contexts.push_back(std::move(ctx));
            vix.push_back(out.contexts.back().vix_1m);
            spot.push_back(s.spot);
        } catch (const Error& e) {
            out.failures.push_back(FailedDate{s.date, e.what()});
        }
    }
    const auto hh = historical_omega_rho(vix, spot, VolModel::Heston);
    const auto hs = historical_omega_rho(vix, spot, VolModel::SchobelZhu);
    for (std::size_t i = 0; i < out.contexts.size(); ++i) {
        out.contexts[i].hist_heston = hh[i];
        out.contexts[i].hist_sz = hs[i];
    }
    return out;
}

CalibrationOptions pipeline_options(const PipelineConfig& config) {
    CalibrationOptions o = default_options(config.model);
    o.cost.kind = config.cost;
    o.cost.feller = o.cost.feller || config.feller;
    if (config.max_iter) o.nm.max_iter = *config.max_iter;
    o.nm.stop_any = config.stop_any;
    o.grid = config.grid;
    return o;
}

StartPoint build_start(const DateContext& ctx, const PipelineConfig& config) {
    StartPoint sp;
    const ModelKind kind = config.model;
    const bool sz = sz_family(kind);

    sp.vix = variance_term_structure(ctx.surface, ctx.hist_heston.rho, ctx.hist_heston.omega);
    sp.variance_fit = calibrate_variance_ts(sp.vix.tau, sp.vix.v2_corrected);
    if (!sp.variance_fit.kappa_identified) sp.flags.push_back("kappa_unidentified");
    if (sz) {
        const TermStructureFit& h = sp.variance_fit;
        std::vector<double> targets;
        for (const double t : sp.vix.tau) {
            const double ev = heston_total_variance(h.v0, h.theta, h.kappa, t);
            targets.push_back(sz_expected_vol(ev, h.v0, h.theta, h.kappa, ctx.hist_heston.omega, t));
        }
        sp.vol_fit = calibrate_vol_ts_sz(sp.vix.tau, targets);
    }

    const OneFactor one = one_factor_start(ctx, config.start, sz, sp);
    append(sp.flags, one.flags);
    const FactorParams& f = one.params;

    if (!is_two_factor(kind)) {
        if (config.start == StartMethod::TwoStage || config.start == StartMethod::EVP ||
            config.start == StartMethod::MEVP) {
            raise(ErrorCode::InvalidArgument, "start method applies to two-factor models only");
        }
        sp.params = kind == ModelKind::Heston
                        ? ModelParams::heston(HestonParams{f.v0, f.theta, f.kappa, f.omega, f.rho, 0.0})
                        : ModelParams::schobel_zhu(
                              SchobelZhuParams{f.v0, f.theta, f.kappa, f.omega, f.rho, 0.0});
        return sp;
    }

    StartMethod split = config.start;
    if (split == StartMethod::ICM || split == StartMethod::Durrleman || split == StartMethod::Hist) {
        split = kind == ModelKind::Bates2F ? StartMethod::EVP : StartMethod::MEVP;
    }
    if (split == StartMethod::TwoStage) {
        sp.params = ModelParams::two_factor(kind, symmetric_two_factor(kind, f));
        return sp;
    }
    if (split == StartMethod::EVP) {
        TwoFactorParams p = kind == ModelKind::OUOU ? symmetric_two_factor(kind, f)
                                                    : evp_split(f.omega, f.rho, f.v0, f.theta, f.kappa).params;
        sp.params = ModelParams::two_factor(kind, p);
        return sp;
    }
    const MevpTarget target = kind == ModelKind::OUOU ? MevpTarget::OUOU : MevpTarget::BatesFeller;
    const TwoFactorStart s = mevp_split(f.omega, f.rho, f.v0, f.theta, f.kappa, target);
    append(sp.flags, s.flags);
    sp.params = ModelParams::two_factor(kind, s.params);
    sp.free = pinned_rho_mask(kind);
    return sp;
}

DateResult run_date(const DateContext& ctx, const PipelineConfig& config) {
    DateResult out;
    out.date = ctx.surface.date;
    out.start = build_start(ctx, config);
    CalibrationOptions options = pipeline_options(config);
    if (config.start == StartMethod::TwoStage && is_two_factor(config.model)) {
        CalibrationOptions stage1 = options;
        stage1.nm.max_iter = default_iteration_cap(ModelKind::Heston);
        if (config.max_iter) stage1.nm.max_iter = *config.max_iter;
        const auto& tf = std::get<TwoFactorParams>(out.start.params.base);
        FactorParams sym = tf.factors[0];
        if (config.model == ModelKind::OUOU) {
            const double s = std::sqrt(2.0);
            sym = FactorParams{sym.v0 * s, sym.theta * s, sym.kappa, sym.omega * s, sym.rho};
        } else {
            sym.v0 *= 2.0;
            sym.theta *= 2.0;
        }
        const TwoStageResult r = two_stage_calibration(config.model, ctx.surface, sym, stage1, options);
        out.stage1 = r.stage1;
        out.result = r.stage2;
    } else {
        options.free = out.start.free;
        out.result = calibrate_full(ctx.surface, out.start.params, options);
    }
    append(out.result.flags, out.start.flags);
    out.rmse = rmse_report(out.result.params, ctx.surface, config.grid);
    return out;
}

}  // namespace fxsv
