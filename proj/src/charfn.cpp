#include "fxsv/charfn.hpp"

#include <cmath>
#include <string>

#include "fxsv/errors.hpp"

namespace fxsv {

namespace {

constexpr cplx I{0.0, 1.0};

cplx log1p_c(cplx z) {
    if (std::abs(z) < 1e-4) {
        return z * (1.0 - z * (0.5 - z * (1.0 / 3.0 - z * (0.25 - z * 0.2))));
    }
    return std::log(1.0 + z);
}

cplx expm1_c(cplx z) {
    if (std::abs(z) < 1e-4) {
        return z * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0))));
    }
    return std::exp(z) - 1.0;
}

// ln((1 - G e) / (1 - G)) without cancellation for small G.
cplx log_ratio(cplx G, cplx e) {
    if (std::abs(G) < 1e-3) return log1p_c(-G * e) - log1p_c(-G);
    return std::log((1.0 - G * e) / (1.0 - G));
}

// Principal root with Re >= 0; flipped only when beta + d vanishes, where the
// G-form degenerates but the other root gives G = 0.
cplx riccati_root(cplx beta, cplx disc) {
    cplx d = std::sqrt(disc);
    if (d.real() < 0.0) d = -d;
    if (std::abs(beta + d) <= 1e-14 * (std::abs(beta) + std::abs(d)) && std::abs(d) > 0.0) d = -d;
    return d;
}

double a_coef(int j) {
    if (j == 1) return 0.5;
    if (j == 2) return -0.5;
    raise(ErrorCode::InvalidArgument, "j must be 1 or 2");
}

cplx finite_or_raise(cplx z, const char* what) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        raise(ErrorCode::NumericOverflow, std::string(what) + " is not finite");
    }
    return z;
}

// Square-root variance factor with a fraction of the carry drift.
CFTerms heston_factor(cplx u, double tau, double drift, double v_theta, double kappa,
                      double omega, double rho, double eta, int j) {
    CFTerms t;
    t.a = a_coef(j);
    t.b = (j == 1) ? kappa + eta - omega * rho : kappa + eta;
    if (tau == 0.0 || u == cplx{0.0, 0.0}) {
        t.beta = t.b - rho * omega * I * u;
        t.d = t.beta;
        return t;
    }
    const cplx iu = I * u;
    const double w2 = omega * omega;
    t.beta = t.b - rho * omega * iu;
    const cplx q = w2 * (2.0 * t.a * iu - u * u);  // beta^2 - d^2
    t.d = riccati_root(t.beta, t.beta * t.beta - q);
    const cplx bpd = t.beta + t.d;
    const cplx bmd = (std::abs(bpd) > 0.0) ? q / bpd : t.beta - t.d;
    t.G = bmd / bpd;
    const cplx e = std::exp(-t.d * tau);
    const cplx one_minus_e = -expm1_c(-t.d * tau);
    t.A = drift * iu * tau + kappa * v_theta / w2 * (bmd * tau - 2.0 * log_ratio(t.G, e));
    t.B = bmd / w2 * one_minus_e / (1.0 - t.G * e);
    return t;
}

// Gaussian volatility factor; v0 enters through B (linear) and C (quadratic).
CFTerms sz_factor(cplx u, double tau, double drift, double theta, double kappa, double omega,
                  double rho, double eta, int j, SzForm form) {
    CFTerms t;
    t.a = a_coef(j);
    t.b = (j == 1) ? kappa + eta - omega * rho : kappa + eta;
    const cplx iu = I * u;
    t.beta = 2.0 * (t.b - I * omega * rho * u);
    if (tau == 0.0 || u == cplx{0.0, 0.0}) {
        t.d = t.beta;
        return t;
    }
    const double w2 = omega * omega;
    const cplx q = 4.0 * w2 * (2.0 * t.a * iu - u * u);
    t.d = riccati_root(t.beta, t.beta * t.beta - q);
    const cplx beta = t.beta;
    const cplx d = t.d;
    const cplx bpd = beta + d;
    const cplx bmd = (std::abs(bpd) > 0.0) ? q / bpd : beta - d;
    t.G = bmd / bpd;
    const cplx G = t.G;
    const cplx e = std::exp(-d * tau);
    const cplx eh = std::exp(-0.5 * d * tau);
    const cplx denom = 1.0 - G * e;
    const double kt = kappa * theta;

    cplx a_hat;
    if (kt == 0.0) {
        a_hat = 0.0;
    } else if (form == SzForm::Standard) {
        a_hat = kt * kt * bmd / (d * d * w2) *
                (tau * bpd / 2.0 + (4.0 * beta * eh - (2.0 * beta - d) * e - 2.0 * beta - d) /
                                       (d * denom));
    } else {
        a_hat = bmd * kt * kt / (2.0 * d * d * d * w2) *
                (beta * (d * tau - 4.0) + d * (d * tau - 2.0) +
                 ((d * d - 2.0 * beta * beta) / bpd * eh + 2.0 * beta) * 4.0 * eh / denom);
    }
    const cplx one_minus_eh = -expm1_c(-0.5 * d * tau);
    const cplx one_minus_e = -expm1_c(-d * tau);
    t.A = a_hat + drift * iu * tau + 0.25 * bmd * tau - 0.5 * log_ratio(G, e);
    t.B = kt * bmd * one_minus_eh * one_minus_eh / (d * w2 * denom);
    t.C = bmd / (4.0 * w2) * one_minus_e / denom;
    return t;
}

}  // namespace

// ============================================================================
// Model bookkeeping
// ============================================================================

std::string_view model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Heston: return "heston";
        case ModelKind::SchobelZhu: return "sz";
        case ModelKind::Bates2F: return "bates2f";
        case ModelKind::Bates2FFeller: return "bates2f-feller";
        case ModelKind::OUOU: return "ouou";
    }
    return "?";
}

std::optional<ModelKind> parse_model_kind(std::string_view name) {
    for (const auto k : {ModelKind::Heston, ModelKind::SchobelZhu, ModelKind::Bates2F,
                         ModelKind::Bates2FFeller, ModelKind::OUOU}) {
        if (model_kind_name(k) == name) return k;
    }
    return std::nullopt;
}

bool is_two_factor(ModelKind kind) {
    return kind == ModelKind::Bates2F || kind == ModelKind::Bates2FFeller ||
           kind == ModelKind::OUOU;
}

ModelParams ModelParams::heston(const HestonParams& p) {
    return ModelParams{ModelKind::Heston, p, std::nullopt};
}

ModelParams ModelParams::schobel_zhu(const SchobelZhuParams& p) {
    return ModelParams{ModelKind::SchobelZhu, p, std::nullopt};
}

ModelParams ModelParams::two_factor(ModelKind kind, const TwoFactorParams& p) {
    if (!is_two_factor(kind)) raise(ErrorCode::InvalidArgument, "not a two-factor model kind");
    TwoFactorParams q = p;
    q.kind = (kind == ModelKind::OUOU) ? TwoFactorKind::OUOU : TwoFactorKind::Bates2F;
    return ModelParams{kind, q, std::nullopt};
}

namespace {

void check_common(double kappa, double omega, double rho, const char* model) {
    if (!(kappa > 0.0) || !(omega > 0.0) || !(std::abs(rho) < 1.0)) {
        raise(ErrorCode::InvalidArgument,
              std::string(model) + " parameters need kappa, omega > 0 and |rho| < 1");
    }
}

}  // namespace

void validate(const HestonParams& p) {
    check_common(p.kappa, p.omega, p.rho, "Heston");
    if (!(p.v0 > 0.0) || !(p.theta > 0.0)) {
        raise(ErrorCode::InvalidArgument, "Heston parameters need v0, theta > 0");
    }
}

void validate(const SchobelZhuParams& p) {
    check_common(p.kappa, p.omega, p.rho, "Schobel-Zhu");
    if (!(p.v0 > 0.0) || !(p.theta >= 0.0)) {
        raise(ErrorCode::InvalidArgument, "Schobel-Zhu parameters need v0 > 0, theta >= 0");
    }
}

void validate(const TwoFactorParams& p) {
    for (const auto& f : p.factors) {
        check_common(f.kappa, f.omega, f.rho, "two-factor");
        const bool ok = p.kind == TwoFactorKind::OUOU ? (f.v0 > 0.0 && f.theta >= 0.0)
                                                      : (f.v0 > 0.0 && f.theta > 0.0);
        if (!ok) raise(ErrorCode::InvalidArgument, "two-factor level parameters out of range");
    }
}

void validate(const JumpParams& p) {
    if (!(p.lambda >= 0.0) || !(p.delta >= 0.0) || !(1.0 + p.k_hat > 0.0)) {
        raise(ErrorCode::InvalidArgument, "jump parameters need lambda, delta >= 0, 1 + k > 0");
    }
}

void validate(const ModelParams& p) {
    std::visit([](const auto& base) { validate(base); }, p.base);
    if (p.jumps) validate(*p.jumps);
}

// ============================================================================
// Closed forms
// ============================================================================

CFTerms heston_terms(cplx u, double tau, double r_d, double r_f, const HestonParams& p, int j) {
    return heston_factor(u, tau, r_d - r_f, p.theta, p.kappa, p.omega, p.rho, p.eta, j);
}

cplx heston_cf(cplx u, double x0, double tau, double r_d, double r_f, const HestonParams& p,
               int j) {
    const CFTerms t = heston_terms(u, tau, r_d, r_f, p, j);
    return finite_or_raise(std::exp(I * u * x0 + t.A + t.B * p.v0), "Heston CF");
}

CFTerms sz_terms(cplx u, double tau, double r_d, double r_f, const SchobelZhuParams& p, int j,
                 SzForm form) {
    return sz_factor(u, tau, r_d - r_f, p.theta, p.kappa, p.omega, p.rho, p.eta, j, form);
}

cplx sz_cf(cplx u, double x0, double tau, double r_d, double r_f, const SchobelZhuParams& p,
           int j, SzForm form) {
    const CFTerms t = sz_terms(u, tau, r_d, r_f, p, j, form);
    return finite_or_raise(std::exp(I * u * x0 + t.A + t.B * p.v0 + t.C * p.v0 * p.v0),
                           "Schobel-Zhu CF");
}

std::array<CFTerms, 2> bates2f_terms(cplx u, double tau, double r_d, double r_f,
                                     const TwoFactorParams& p, int j) {
    std::array<CFTerms, 2> out;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& f = p.factors[k];
        out[k] = heston_factor(u, tau, 0.5 * (r_d - r_f), f.theta, f.kappa, f.omega, f.rho, 0.0, j);
    }
    return out;
}

cplx bates2f_cf(cplx u, double x0, double tau, double r_d, double r_f, const TwoFactorParams& p,
                int j) {
    const auto t = bates2f_terms(u, tau, r_d, r_f, p, j);
    cplx expo = I * u * x0;
    for (std::size_t k = 0; k < 2; ++k) expo += t[k].A + t[k].B * p.factors[k].v0;
    return finite_or_raise(std::exp(expo), "Bates two-factor CF");
}

std::array<CFTerms, 2> ouou_terms(cplx u, double tau, double r_d, double r_f,
                                  const TwoFactorParams& p, int j) {
    std::array<CFTerms, 2> out;
    for (std::size_t k = 0; k < 2; ++k) {
        const auto& f = p.factors[k];
        out[k] = sz_factor(u, tau, 0.5 * (r_d - r_f), f.theta, f.kappa, f.omega, f.rho, 0.0, j,
                           SzForm::Standard);
    }
    return out;
}

cplx ouou_cf(cplx u, double x0, double tau, double r_d, double r_f, const TwoFactorParams& p,
             int j) {
    const auto t = ouou_terms(u, tau, r_d, r_f, p, j);
    cplx expo = I * u * x0;
    for (std::size_t k = 0; k < 2; ++k) {
        const double v = p.factors[k].v0;
        expo += t[k].A + t[k].B * v + t[k].C * v * v;
    }
    return finite_or_raise(std::exp(expo), "OUOU CF");
}

cplx bates_jump_multiplier(cplx u, double tau, const JumpParams& jp, int j) {
    const double a = a_coef(j);
    if (jp.lambda == 0.0 || tau == 0.0) return 1.0;
    const cplx z = I * u;
    const double lk = std::log1p(jp.k_hat);
    const double d2 = jp.delta * jp.delta;
    const cplx expo = jp.lambda * tau * std::pow(1.0 + jp.k_hat, a + 0.5) *
                          (std::exp(z * lk + d2 * (a * z + 0.5 * z * z)) - 1.0) -
                      jp.lambda * jp.k_hat * z * tau;
    return finite_or_raise(std::exp(expo), "jump multiplier");
}

cplx model_cf(cplx u, double x0, double tau, double r_d, double r_f, const ModelParams& params,
              int j) {
    cplx value;
    switch (params.kind) {
        case ModelKind::Heston:
            value = heston_cf(u, x0, tau, r_d, r_f, std::get<HestonParams>(params.base), j);
            break;
        case ModelKind::SchobelZhu:
            value = sz_cf(u, x0, tau, r_d, r_f, std::get<SchobelZhuParams>(params.base), j);
            break;
        case ModelKind::Bates2F:
        case ModelKind::Bates2FFeller:
            value = bates2f_cf(u, x0, tau, r_d, r_f, std::get<TwoFactorParams>(params.base), j);
            break;
        case ModelKind::OUOU:
            value = ouou_cf(u, x0, tau, r_d, r_f, std::get<TwoFactorParams>(params.base), j);
            break;
    }
    if (params.jumps) value *= bates_jump_multiplier(u, tau, *params.jumps, j);
    return value;
}

// ============================================================================
// Numeric Riccati oracle
// ============================================================================

namespace {

struct FactorOde {
    bool gaussian = false;  // Schobel-Zhu type factor
    double drift = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double rho = 0.0;
    double eta = 0.0;
};

struct State {
    cplx A, B, C;
};

State rhs(const FactorOde& f, cplx u, int j, const State& s) {
    const cplx iu = I * u;
    const double a = a_coef(j);
    const double b = (j == 1) ? f.kappa + f.eta - f.omega * f.rho : f.kappa + f.eta;
    const double w2 = f.omega * f.omega;
    const double kt = f.kappa * f.theta;
    State ds;
    if (!f.gaussian) {
        ds.A = f.drift * iu + s.B * kt;
        ds.B = a * iu - 0.5 * u * u + (f.rho * f.omega * iu - b) * s.B + 0.5 * w2 * s.B * s.B;
        ds.C = 0.0;
    } else {
        ds.A = f.drift * iu + s.B * kt + 0.5 * w2 * s.B * s.B + w2 * s.C;
        ds.B = -s.B * b + s.B * f.rho * f.omega * iu + 2.0 * s.B * s.C * w2 + 2.0 * s.C * kt;
        ds.C = -2.0 * s.C * b + 2.0 * f.rho * f.omega * iu * s.C + a * iu - 0.5 * u * u +
               2.0 * w2 * s.C * s.C;
    }
    return ds;
}

State axpy(const State& s, double h, const State& k) {
    return State{s.A + h * k.A, s.B + h * k.B, s.C + h * k.C};
}

CFTerms integrate(const FactorOde& f, cplx u, double tau, int j, int steps) {
    CFTerms out;
    out.a = a_coef(j);
    if (tau == 0.0) return out;
    const double h = tau / steps;
    if (!(h > 0.0) || tau + h == tau) raise(ErrorCode::StepUnderflow, "ODE step underflows");
    State s{0.0, 0.0, 0.0};
    for (int n = 0; n < steps; ++n) {
        const State k1 = rhs(f, u, j, s);
        const State k2 = rhs(f, u, j, axpy(s, 0.5 * h, k1));
        const State k3 = rhs(f, u, j, axpy(s, 0.5 * h, k2));
        const State k4 = rhs(f, u, j, axpy(s, h, k3));
        s.A += h / 6.0 * (k1.A + 2.0 * k2.A + 2.0 * k3.A + k4.A);
        s.B += h / 6.0 * (k1.B + 2.0 * k2.B + 2.0 * k3.B + k4.B);
        s.C += h / 6.0 * (k1.C + 2.0 * k2.C + 2.0 * k3.C + k4.C);
    }
    out.A = s.A;
    out.B = s.B;
    out.C = s.C;
    return out;
}

}  // namespace

std::vector<CFTerms> ode_oracle_terms(const ModelParams& params, cplx u, double tau, double r_d,
                                      double r_f, int j, int steps) {
    if (steps < 1000) raise(ErrorCode::InvalidArgument, "ODE oracle needs at least 1000 steps");
    if (tau < 0.0) raise(ErrorCode::InvalidArgument, "tau must be non-negative");
    const double carry = r_d - r_f;
    std::vector<CFTerms> out;
    switch (params.kind) {
        case ModelKind::Heston: {
            const auto& p = std::get<HestonParams>(params.base);
            out.push_back(integrate({false, carry, p.theta, p.kappa, p.omega, p.rho, p.eta}, u,
                                    tau, j, steps));
            break;
        }
        case ModelKind::SchobelZhu: {
            const auto& p = std::get<SchobelZhuParams>(params.base);
            out.push_back(integrate({true, carry, p.theta, p.kappa, p.omega, p.rho, p.eta}, u,
                                    tau, j, steps));
            break;
        }
        case ModelKind::Bates2F:
        case ModelKind::Bates2FFeller:
        case ModelKind::OUOU: {
            const auto& p = std::get<TwoFactorParams>(params.base);
            const bool gaussian = params.kind == ModelKind::OUOU;
            for (const auto& f : p.factors) {
                out.push_back(integrate(
                    {gaussian, 0.5 * carry, f.theta, f.kappa, f.omega, f.rho, 0.0}, u, tau, j,
                    steps));
            }
            break;
        }
    }
    return out;
}

}  // namespace fxsv
