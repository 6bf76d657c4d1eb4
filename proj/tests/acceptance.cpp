#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fxsv/app.hpp"
#include "fxsv/calibrate.hpp"
#include "fxsv/charfn.hpp"
#include "fxsv/estimators.hpp"
#include "fxsv/moments.hpp"
#include "fxsv/pipeline.hpp"
#include "fxsv/pricer.hpp"
#include "synthetic.hpp"

using namespace fxsv;
namespace fs = std::filesystem;

namespace {

const cplx I{0.0, 1.0};
constexpr double spot = 1.35;
constexpr double rd = 0.012;
constexpr double rf = 0.004;
const double x0 = std::log(spot);

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

class Rng {
public:
    explicit Rng(unsigned seed) : rng_(seed) {}
    double uni(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }

    HestonParams heston() {
        return {uni(0.003, 0.05), uni(0.003, 0.05), uni(0.3, 5.0), uni(0.05, 1.0), uni(-0.9, 0.9), 0.0};
    }
    SchobelZhuParams sz() {
        return {uni(0.05, 0.2), uni(0.0, 0.2), uni(0.3, 5.0), uni(0.02, 0.4), uni(-0.9, 0.9), 0.0};
    }
    FactorParams factor(bool vol_scale) {
        if (vol_scale) return {uni(0.03, 0.15), uni(0.0, 0.15), uni(0.3, 5.0), uni(0.02, 0.3), uni(-0.9, 0.9)};
        return {uni(0.002, 0.03), uni(0.002, 0.03), uni(0.3, 5.0), uni(0.05, 0.8), uni(-0.9, 0.9)};
    }

private:
    std::mt19937_64 rng_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double term_gap(const CFTerms& a, const CFTerms& b) {
    return std::max({std::abs(a.A - b.A), std::abs(a.B - b.B), std::abs(a.C - b.C)});
}

// ---------------------------------------------------------------------------

Outcome cf_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng r(101);
    double worst_unit = 0.0;
    double worst_fwd = 0.0;
    double worst_ode = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const double tau = r.uni(0.02, 2.0);
        const double u = r.uni(-15.0, 15.0);
        const HestonParams h = r.heston();
        const SchobelZhuParams s = r.sz();
        const TwoFactorParams b{TwoFactorKind::Bates2F, {r.factor(false), r.factor(false)}};
        const TwoFactorParams o{TwoFactorKind::OUOU, {r.factor(true), r.factor(true)}};
        const ModelParams models[] = {ModelParams::heston(h), ModelParams::schobel_zhu(s),
                                      ModelParams::two_factor(ModelKind::Bates2F, b),
                                      ModelParams::two_factor(ModelKind::OUOU, o)};
        for (const auto& m : models) {
            worst_unit = std::max(worst_unit, std::abs(model_cf(0.0, x0, tau, rd, rf, m, 2) - 1.0));
            worst_fwd = std::max(worst_fwd,
                                 std::abs(model_cf(-I, x0, tau, rd, rf, m, 2) - spot * std::exp((rd - rf) * tau)));
        }
        const auto ode_h = ode_oracle_terms(models[0], u, tau, rd, rf, 2);
        worst_ode = std::max(worst_ode, term_gap(heston_terms(u, tau, rd, rf, h, 2), ode_h[0]));
        const auto ode_s = ode_oracle_terms(models[1], u, tau, rd, rf, 2);
        worst_ode = std::max(worst_ode, term_gap(sz_terms(u, tau, rd, rf, s, 2), ode_s[0]));
        const auto ode_b = ode_oracle_terms(models[2], u, tau, rd, rf, 2);
        const auto cf_b = bates2f_terms(u, tau, rd, rf, b, 2);
        const auto ode_o = ode_oracle_terms(models[3], u, tau, rd, rf, 2);
        const auto cf_o = ouou_terms(u, tau, rd, rf, o, 2);
        for (std::size_t k = 0; k < 2; ++k) {
            worst_ode = std::max(worst_ode, term_gap(cf_b[k], ode_b[k]));
            worst_ode = std::max(worst_ode, term_gap(cf_o[k], ode_o[k]));
        }
    }
    const double secs = seconds_since(t0);
    return {worst_unit == 0.0 && worst_fwd < 1e-8 && worst_ode < 1e-8 && secs < 30.0,
            "max|phi(0)-1|=" + fmt("%.3g", worst_unit) + " max|phi(-i)-F|=" + fmt("%.3g", worst_fwd) +
                " max ODE gap=" + fmt("%.3g", worst_ode) + " over 100 draws x 4 models, " + fmt("%.1f", secs) + "s"};
}

Outcome nesting() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng r(202);
    double worst_sz = 0.0;
    double worst_b = 0.0;
    for (int draw = 0; draw < 200; ++draw) {
        const double tau = r.uni(0.02, 3.0);
        const double u = r.uni(-20.0, 20.0);
        SchobelZhuParams s = r.sz();
        s.theta = 0.0;
        const HestonParams mapped{s.v0 * s.v0, s.omega * s.omega / (2.0 * s.kappa), 2.0 * s.kappa, 2.0 * s.omega,
                                  s.rho, 0.0};
        worst_sz = std::max(worst_sz, std::abs(sz_cf(u, x0, tau, rd, rf, s, 2) - heston_cf(u, x0, tau, rd, rf, mapped, 2)));
        const HestonParams h = r.heston();
        const FactorParams f{h.v0 / 2, h.theta / 2, h.kappa, h.omega, h.rho};
        const TwoFactorParams two{TwoFactorKind::Bates2F, {f, f}};
        worst_b = std::max(worst_b, std::abs(bates2f_cf(u, x0, tau, rd, rf, two, 2) - heston_cf(u, x0, tau, rd, rf, h, 2)));
    }
    const double secs = seconds_since(t0);
    return {worst_sz < 1e-10 && worst_b < 1e-10 && secs < 5.0,
            "SZ(theta=0) vs Heston " + fmt("%.3g", worst_sz) + ", symmetric Bates2F vs Heston " + fmt("%.3g", worst_b) +
                ", " + fmt("%.2f", secs) + "s"};
}

Outcome pricer_agreement() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng r(303);
    const IntegrationGrid reference{-17.0, 7.0, 0.01};
    const double taus[] = {1.0 / 12, 2.0 / 12, 0.25, 0.5, 1.0, 2.0};
    const double deltas[] = {-0.1, -0.25, 0.5, 0.25, 0.1};
    const auto pillar_call = [](double tau, double vol, double delta) {
        return OptionSpec{spot, strike_from_delta(spot, rd, rf, tau, vol, delta), tau, rd, rf, OptionSide::Call};
    };
    double worst_gp = 0.0;
    double worst_cm = 0.0;
    double worst_parity = 0.0;
    double worst_tau = 0.0;
    for (int draw = 0; draw < 20; ++draw) {
        const HestonParams h{r.uni(0.0055, 0.0144), r.uni(0.0112, 0.0227), r.uni(1.552, 4.747), r.uni(0.211, 0.465),
                             r.uni(-0.462, -0.315), 0.0};
        for (const double tau : taus) {
            const auto cf = make_cf(ModelParams::heston(h), spot, tau, rd, rf);
            const double vol = std::sqrt(h.theta + (h.v0 - h.theta) * (-std::expm1(-h.kappa * tau)) / (h.kappa * tau));
            for (const double delta : deltas) {
                const OptionSpec c = pillar_call(tau, vol, delta);
                const double attari = attari_price(cf, c);
                const double gp = std::abs(heston_two_integral_price(cf, c, reference).price - attari);
                if (gp > worst_gp) worst_tau = tau;
                worst_gp = std::max(worst_gp, gp);
                for (const double alpha : {1.1, 1.5}) {
                    worst_cm = std::max(worst_cm, std::abs(carr_madan_price(cf, c, alpha, reference) - attari));
                }
                const double put = attari_price(cf, c.with_side(OptionSide::Put));
                const double parity = std::exp(-rd * tau) * (c.forward() - c.strike);
                worst_parity = std::max(worst_parity, std::abs(attari - put - parity));
            }
        }
    }
    double worst_gk = 0.0;
    const HestonParams flat{0.01, 0.01, 1.5, 1e-6, -0.3, 0.0};
    for (const double tau : taus) {
        const auto cf = make_cf(ModelParams::heston(flat), spot, tau, rd, rf);
        for (const double delta : deltas) {
            const OptionSpec c = pillar_call(tau, 0.1, delta);
            worst_gk = std::max(worst_gk, std::abs(attari_price(cf, c) - gk_price(c, 0.1)));
        }
    }
    const double secs = seconds_since(t0);
    const double tol = 1e-5 * spot;
    return {worst_gp < tol && worst_cm < tol && worst_gk < 1e-5 && worst_parity < 1e-9 * spot && secs < 120.0,
            "pillar strikes, production-grid Attari vs refined-grid references: max |GP-Attari|=" +
                fmt("%.3g", worst_gp) + " (at tau=" + fmt("%.3f", worst_tau) + ") |CM-Attari|=" +
                fmt("%.3g", worst_cm) + " tol=" + fmt("%.3g", tol) + " |Attari-GK|=" + fmt("%.3g", worst_gk) +
                " parity=" + fmt("%.3g", worst_parity) + ", " + fmt("%.1f", secs) + "s"};
}

Outcome derivative_consistency() {
    Rng r(404);
    double worst = 0.0;
    const double h = 1e-5;
    for (int draw = 0; draw < 20; ++draw) {
        const double v0 = r.uni(0.05, 0.2), theta = r.uni(0.0, 0.2), kappa = r.uni(0.3, 5.0), omega = r.uni(0.02, 0.4);
        for (double t = 0.05; t <= 3.0 + 1e-12; t += 0.05) {
            const double up = (t + h) * sz_total_variance(v0, theta, kappa, omega, t + h);
            const double dn = (t - h) * sz_total_variance(v0, theta, kappa, omega, t - h);
            worst = std::max(worst, std::abs((up - dn) / (2 * h) - sz_instantaneous_variance(v0, theta, kappa, omega, t)));
        }
    }
    return {worst < 1e-8, "max gap " + fmt("%.3g", worst) + " over 20 draws x 60 maturities"};
}

const IntegrationGrid oracle_grid{-17.0, 7.0, 0.05};

OptionStrip model_strip(const CharFn& cf, double tau, double sigma, std::size_t n, double width) {
    OptionStrip s;
    s.forward = spot * std::exp((rd - rf) * tau);
    s.k0 = s.forward;
    s.r_d = rd;
    s.r_f = rf;
    s.tau = tau;
    const double sd = sigma * std::sqrt(tau);
    const std::size_t half = n / 2;
    for (std::size_t i = 0; i <= 2 * half; ++i) {
        const double x = width * sd * (static_cast<double>(i) - static_cast<double>(half)) / static_cast<double>(half);
        const OptionSpec spec{spot, s.forward * std::exp(x), tau, rd, rf, x < 0 ? OptionSide::Put : OptionSide::Call};
        double price = cf ? attari_price(cf, spec, oracle_grid) : gk_price(spec, sigma);
        if (i == half) {
            const auto put = spec.with_side(OptionSide::Put);
            price = 0.5 * (price + (cf ? attari_price(cf, put, oracle_grid) : gk_price(put, sigma)));
        }
        s.strikes.push_back(spec.strike);
        s.prices.push_back(price);
    }
    return s;
}

double vix(const OptionStrip& s) { return implied_variance_vix(s.strikes, s.prices, s.forward, s.k0, s.r_d, s.tau); }


Outcome implied_moments_oracle() {
    double worst_dense = 0.0;
    for (const double sigma : {0.05, 0.1, 0.2}) {
        for (const double tau : {1.0 / 12, 0.5, 2.0}) {
            worst_dense = std::max(worst_dense, std::abs(vix(model_strip({}, tau, sigma, 400, 10.0)) / (sigma * sigma) - 1.0));
        }
    }
    const HestonParams h{0.0082, 0.0143, 2.07, 0.3, -0.38, 0.0};
    const auto surface = fxsv::testing::synthetic_surface(ModelParams::heston(h));
    bool stable = true;
    std::string errors;
    for (const auto& slice : surface.slices) {
        const double five = vix(surface_strip(surface, slice));
        auto truncation = [&](std::size_t n) {
            const auto cf = make_cf(ModelParams::heston(h), spot, slice.tau, slice.rates.r_d, slice.rates.r_f);
            OptionStrip dense = model_strip(cf, slice.tau, slice.smile.vol(Pillar::ATM), n, 12.0);
            dense.forward = slice.rates.forward;
            dense.k0 = slice.rates.forward;
            return five / vix(dense) - 1.0;
        };
        const double coarse = truncation(2000);
        const double fine = truncation(4000);
        const double again = truncation(2000);
        // The error crosses zero near 3M, so oracle convergence is judged in absolute terms.
        stable = stable && fmt("%.3g", coarse) == fmt("%.3g", again) && coarse == again &&
                 std::abs(coarse - fine) < 1e-3;
        errors += std::string(errors.empty() ? "" : ",") + fmt("%.4g", coarse) + "/" + fmt("%.4g", fine);
    }
    return {worst_dense < 1e-3 && stable, "dense-strip max rel err " + fmt("%.2g", worst_dense) +
                                              "; 5-strike truncation error per tenor [" + errors + "] " +
                                              (stable ? "stable" : "NOT stable") + " to 3 s.f. across runs (2000/4000-strike oracles)"};
}

// One synthetic date with the one-factor starts computed by the pipeline.
DateContext single_context(const ModelParams& truth) {
    const auto prepared = prepare_contexts({testing::synthetic_surface(truth)});
    return prepared.contexts.at(0);
}

Outcome estimator_behaviour() {
    Rng r(606);
    const int n = 30;
    int icm_sign = 0, durr_sign = 0, icm_closer = 0, icm_high = 0;
    for (int i = 0; i < n; ++i) {
        const HestonParams h{r.uni(0.0055, 0.0144), r.uni(0.0112, 0.0227), r.uni(1.552, 4.747), r.uni(0.211, 0.465),
                             r.uni(-0.462, -0.315), 0.0};
        const DateContext ctx = single_context(ModelParams::heston(h));
        PipelineConfig c;
        c.start = StartMethod::ICM;
        const StartPoint icm = build_start(ctx, c);
        c.start = StartMethod::Durrleman;
        const StartPoint durr = build_start(ctx, c);
        icm_sign += icm.rho < 0.0;
        durr_sign += durr.rho < 0.0;
        icm_closer += std::abs(std::abs(icm.rho) - std::abs(h.rho)) < std::abs(std::abs(durr.rho) - std::abs(h.rho));
        icm_high += icm.omega > h.omega;
    }
    const bool signs = icm_sign == n && durr_sign == n;
    const bool ordering = 2 * icm_closer > n && 2 * icm_high > n;
    return {signs && ordering,
            "sign(rho) recovered ICM " + std::to_string(icm_sign) + "/" + std::to_string(n) + ", Durrleman " +
                std::to_string(durr_sign) + "/" + std::to_string(n) + "; ICM |rho| closer than Durrleman in " +
                std::to_string(icm_closer) + "/" + std::to_string(n) + "; ICM omega above truth in " +
                std::to_string(icm_high) + "/" + std::to_string(n) + " (majority required for both)"};
}

struct RoundTripCase {
    std::string label;
    ModelParams truth;
    bool feller = false;
    bool rmse_required = true;
};

Outcome round_trip() {
    const TwoFactorParams bates{TwoFactorKind::Bates2F,
                                {FactorParams{0.005, 0.008, 1.2, 0.25, -0.7}, FactorParams{0.003, 0.006, 3.5, 0.15, -0.1}}};
    const TwoFactorParams bates_feller{TwoFactorKind::Bates2F, {FactorParams{0.005, 0.007, 2.0, 0.12, -0.99},
                                                                FactorParams{0.004, 0.0075, 2.0, 0.001, 0.99}}};
    const TwoFactorParams ouou{TwoFactorKind::OUOU,
                               {FactorParams{0.07, 0.08, 1.2, 0.15, -0.99}, FactorParams{0.06, 0.09, 1.2, 0.10, 0.99}}};
    const std::vector<RoundTripCase> cases{
        {"heston", ModelParams::heston({0.0082, 0.0143, 2.07, 0.3, -0.38, 0.0})},
        {"sz", ModelParams::schobel_zhu({0.09, 0.11, 1.5, 0.15, -0.4, 0.0})},
        {"bates2f", ModelParams::two_factor(ModelKind::Bates2F, bates)},
        {"bates2f-feller", ModelParams::two_factor(ModelKind::Bates2FFeller, bates_feller), true},
        {"ouou", ModelParams::two_factor(ModelKind::OUOU, ouou)},
        {"heston+feller", ModelParams::heston({0.0082, 0.0143, 2.07, 0.2, -0.38, 0.0}), true},
        {"heston+feller(violating truth)", ModelParams::heston({0.0082, 0.0143, 2.07, 0.3, -0.38, 0.0}), true, false},
    };
    bool pass = true;
    std::string detail;
    for (const auto& c : cases) {
        PipelineConfig config;
        config.model = c.truth.kind;
        config.start = StartMethod::ICM;
        config.feller = c.feller;
        const DateResult r = run_date(single_context(c.truth), config);
        const bool rmse_ok = !c.rmse_required || r.rmse.vol < 1e-4;
        const bool feller_ok = !(c.feller || c.truth.kind == ModelKind::Bates2FFeller) || feller_satisfied(r.result.params);
        pass = pass && rmse_ok && feller_ok;
        detail += (detail.empty() ? "" : "; ") + c.label + " rmse=" + fmt("%.2g", r.rmse.vol) + " it=" +
                  std::to_string(r.result.iterations) + "/" + std::to_string(default_iteration_cap(c.truth.kind)) +
                  (c.feller ? (feller_ok ? " feller ok" : " FELLER VIOLATED") : "") + (rmse_ok ? "" : " [FAIL]");
    }
    return {pass, detail};
}

Outcome calibration_risk_protocol() {
    const HestonParams truth{0.0082, 0.0143, 2.07, 0.3, -0.38, 0.0};
    const DateContext ctx = single_context(ModelParams::heston(truth));
    const StartPoint sp = build_start(ctx, PipelineConfig{});
    const auto& f = sp.variance_fit;
    const ModelParams base = ModelParams::heston({f.v0, f.theta, f.kappa, truth.omega, truth.rho, 0.0});
    const CalibrationOptions options = pipeline_options(PipelineConfig{});
    const CalibrationRisk exact = calibration_risk(ctx.surface, base, options);
    double worst_exact = 0.0;
    for (const double v : exact.risk) worst_exact = std::max(worst_exact, v);

    VolSurface noisy = ctx.surface;
    int cell = 0;
    for (auto& slice : noisy.slices) {
        for (const Pillar p : all_pillars) {
            const auto idx = static_cast<std::size_t>(p);
            slice.smile.vols[idx] += 0.003 * std::sin(1.7 * ++cell);
            slice.strikes[idx] = strike_from_delta(noisy.spot, slice.rates.r_d, slice.rates.r_f, slice.tau,
                                                   slice.smile.vols[idx], pillar_delta(p));
        }
    }
    const CalibrationRisk a = calibration_risk(noisy, base, options);
    const CalibrationRisk b = calibration_risk(noisy, base, options);
    bool positive = true;
    for (const double v : a.risk) positive = positive && v > 0.0;
    const bool identical = a.risk == b.risk;
    std::string listed;
    for (std::size_t i = 0; i < a.risk.size(); ++i) listed += (i ? "," : "") + a.names[i] + "=" + fmt("%.3g", a.risk[i]);
    return {worst_exact < 1e-6 && positive && identical,
            "exact-surface max risk " + fmt("%.3g", worst_exact) + "; perturbed risk [" + listed + "] " +
                (identical ? "bit-identical on rerun" : "NOT reproducible")};
}

Outcome optimizer_sanity() {
    NelderMeadConfig c;
    c.max_iter = 500;
    std::vector<double> best;
    c.observer = [&](int, double f) { best.push_back(f); };
    const auto rosen = [](const std::vector<double>& x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    const auto r = nelder_mead(rosen, {-1.2, 1.0}, c);
    bool monotone = true;
    for (std::size_t i = 1; i < best.size(); ++i) monotone = monotone && best[i] <= best[i - 1];
    return {r.f < 1e-6 && r.iterations <= 500 && monotone,
            "f=" + fmt("%.3g", r.f) + " after " + std::to_string(r.iterations) + " iterations; best vertex " +
                (monotone ? "non-increasing" : "INCREASED")};
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

Outcome determinism() {
    const std::string fixture = std::string(FXSV_FIXTURE_DIR) + "/heston_3d.csv";
    const fs::path root = fs::temp_directory_path() / "fxsv_acceptance_determinism";
    fs::remove_all(root);
    std::ostringstream sink;
    const int c1 = run_cli({"pipeline", "-i", fixture, "-o", (root / "a").string()}, sink, sink);
    const int c2 = run_cli({"pipeline", "-i", fixture, "-o", (root / "b").string()}, sink, sink);
    const int c3 = run_cli({"--jobs", "2", "pipeline", "-i", fixture, "-o", (root / "c").string()}, sink, sink);
    int files = 0;
    int differing = 0;
    for (const auto& e : fs::directory_iterator(root / "a")) {
        ++files;
        const std::string a = read_file(e.path());
        differing += a != read_file(root / "b" / e.path().filename());
        differing += a != read_file(root / "c" / e.path().filename());
    }
    return {c1 == 0 && c2 == 0 && c3 == 0 && files == 5 && differing == 0,
            std::to_string(files) + " output files compared across 3 runs (one with 2 workers), " +
                std::to_string(differing) + " differences"};
}

}  // namespace

int main() {
    const std::vector<std::function<Outcome()>> criteria{
        cf_correctness,     nesting,    pricer_agreement,          derivative_consistency, implied_moments_oracle,
        estimator_behaviour, round_trip, calibration_risk_protocol, optimizer_sanity,     determinism,
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += !o.pass;
        std::cout << "CRITERION " << i + 1 << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
