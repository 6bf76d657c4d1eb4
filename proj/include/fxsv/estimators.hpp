#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "fxsv/charfn.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/moments.hpp"
#include "fxsv/pricer.hpp"

namespace fxsv {

struct IcmEstimate {
    double omega = 0.0;
    double rho = 0.0;
    std::vector<double> omega_tau;
    std::vector<double> rho_tau;
    std::vector<std::string> flags;
};

IcmEstimate icm_heston(const std::vector<ImpliedMomentSet>& moments);
IcmEstimate icm_sz(const std::vector<ImpliedMomentSet>& moments, double v0_sz);
// Maps a Heston ICM estimate onto Schobel-Zhu with omega halved and rho kept.
IcmEstimate sz_from_heston(const IcmEstimate& heston);

double lower_median(std::vector<double> values);

struct SmileShape {
    double slope = 0.0;
    double curvature = 0.0;
    double term = 0.0;
};

SmileShape smile_shape(const VolSurface& surface);

struct DurrlemanEstimate {
    double omega = 0.0;
    double rho = 0.0;
    double kappa = 0.0;  // diagnostic only, NaN without a theta
    SmileShape shape;
    std::vector<std::string> flags;
};

DurrlemanEstimate durrleman(const VolSurface& surface, double v0_proxy,
                            std::optional<double> theta = std::nullopt);

enum class GrForm { Integrated, AsPrinted };

struct GrCoefficients {
    double A = 0.0;
    double B = 0.0;
    double C = 0.0;
    double D = 0.0;
    double r0 = 0.0;
    double r1 = 0.0;
    double p0 = 0.0;
    double p1 = 0.0;
    double q0 = 0.0;
    double q1 = 0.0;
    double w_tau = 0.0;
};

// Coefficients of the second-order put expansion P = A + B w^2 + C rho w + D rho^2 w^2.
GrCoefficients gr_coefficients(const OptionSpec& put, double v0, double theta, double kappa,
                               GrForm form = GrForm::Integrated);
double gr_expansion_price(const GrCoefficients& c, double omega, double rho);

struct GrEstimate {
    double omega = 0.0;
    double rho = 0.0;
};

GrEstimate gauthier_rivaille(double put1, double put2, const OptionSpec& spec1,
                             const OptionSpec& spec2, double v0, double theta, double kappa,
                             GrForm form = GrForm::Integrated);

enum class MovingAverage { SMA, EWMA };

struct GsEstimate {
    double v0 = 0.0;
    double theta = 0.0;
};

GsEstimate guillaume_schoutens(const std::vector<double>& vix, double window_years,
                               MovingAverage average);
double lvix_theta(double lvix);

enum class VolModel { Heston, SchobelZhu };

struct HistoricalPoint {
    double omega = 0.0;
    double rho = 0.0;
    bool warm_up = true;
};

inline constexpr int historical_window = 63;

std::vector<HistoricalPoint> historical_omega_rho(const std::vector<double>& vix,
                                                  const std::vector<double>& spot,
                                                  VolModel model);

struct TwoFactorStart {
    TwoFactorParams params;
    std::array<bool, 2> rho_fixed{false, false};
    std::vector<std::string> flags;
};

TwoFactorStart evp_split(double omega, double rho, double v0, double theta, double kappa);

enum class MevpTarget { OUOU, BatesFeller };

inline constexpr double mevp_min_omega = 0.001;
inline constexpr double mevp_rho = 0.99;

// For OUOU omega/rho are the Schobel-Zhu values and v0/theta are volatilities; for
// BatesFeller they are the Heston values.
TwoFactorStart mevp_split(double omega, double rho, double v0, double theta, double kappa,
                          MevpTarget target);

double feller_truncated_omega(double omega, double theta, double kappa);

struct MixtureStats {
    double omega_t = 0.0;
    double rho_t = 0.0;
    double v_ratio = 0.0;
};

MixtureStats two_factor_mixture_stats(double v1, double v2, double omega1, double omega2,
                                      double rho1, double rho2);

struct EffectivePair {
    double omega = 0.0;
    double rho = 0.0;
};

// Long-horizon effective (omega, rho) of an MEVP split with correlations +-1.
EffectivePair mevp_long_horizon(double omega, double rho);

}  // namespace fxsv
