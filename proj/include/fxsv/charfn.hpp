#pragma once

#include <array>
#include <complex>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

namespace fxsv {

using cplx = std::complex<double>;

struct HestonParams {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double rho = 0.0;
    double eta = 0.0;
};

// Same field layout as HestonParams but v0 and theta are volatilities.
struct SchobelZhuParams {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double rho = 0.0;
    double eta = 0.0;
};

struct FactorParams {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double rho = 0.0;
};

enum class TwoFactorKind { Bates2F, OUOU };

struct TwoFactorParams {
    TwoFactorKind kind = TwoFactorKind::Bates2F;
    std::array<FactorParams, 2> factors{};
};

struct JumpParams {
    double lambda = 0.0;
    double k_hat = 0.0;
    double delta = 0.0;
};

enum class ModelKind { Heston, SchobelZhu, Bates2F, Bates2FFeller, OUOU };

std::string_view model_kind_name(ModelKind kind);
std::optional<ModelKind> parse_model_kind(std::string_view name);
bool is_two_factor(ModelKind kind);

struct ModelParams {
    ModelKind kind = ModelKind::Heston;
    std::variant<HestonParams, SchobelZhuParams, TwoFactorParams> base;
    std::optional<JumpParams> jumps;

    static ModelParams heston(const HestonParams& p);
    static ModelParams schobel_zhu(const SchobelZhuParams& p);
    static ModelParams two_factor(ModelKind kind, const TwoFactorParams& p);
};

// Exponent pieces of a CF; C stays zero for the square-root variance models.
struct CFTerms {
    cplx A{};
    cplx B{};
    cplx C{};
    cplx beta{};
    cplx d{};
    cplx G{};
    double a = 0.0;
    double b = 0.0;
};

CFTerms heston_terms(cplx u, double tau, double r_d, double r_f, const HestonParams& p, int j);
cplx heston_cf(cplx u, double x0, double tau, double r_d, double r_f, const HestonParams& p,
               int j);

enum class SzForm { Standard, LordKahl };

CFTerms sz_terms(cplx u, double tau, double r_d, double r_f, const SchobelZhuParams& p, int j,
                 SzForm form = SzForm::Standard);
cplx sz_cf(cplx u, double x0, double tau, double r_d, double r_f, const SchobelZhuParams& p,
           int j, SzForm form = SzForm::Standard);

std::array<CFTerms, 2> bates2f_terms(cplx u, double tau, double r_d, double r_f,
                                     const TwoFactorParams& p, int j);
cplx bates2f_cf(cplx u, double x0, double tau, double r_d, double r_f, const TwoFactorParams& p,
                int j);

std::array<CFTerms, 2> ouou_terms(cplx u, double tau, double r_d, double r_f,
                                  const TwoFactorParams& p, int j);
cplx ouou_cf(cplx u, double x0, double tau, double r_d, double r_f, const TwoFactorParams& p,
             int j);

// The CF argument u enters the jump compensator as i*u.
cplx bates_jump_multiplier(cplx u, double tau, const JumpParams& jp, int j);

// Dispatches on kind and applies the jump multiplier when present.
cplx model_cf(cplx u, double x0, double tau, double r_d, double r_f, const ModelParams& params,
              int j = 2);

// Runge-Kutta integration of the Riccati system behind each closed form.
// Returns one CFTerms per variance factor.
std::vector<CFTerms> ode_oracle_terms(const ModelParams& params, cplx u, double tau, double r_d,
                                      double r_f, int j, int steps = 4000);

void validate(const HestonParams& p);
void validate(const SchobelZhuParams& p);
void validate(const TwoFactorParams& p);
void validate(const JumpParams& p);
void validate(const ModelParams& p);

}  // namespace fxsv
