#pragma once

#include <vector>

#include "fxsv/market_data.hpp"

namespace fxsv {

struct PowerPortfolio {
    double p1 = 0.0;
    double p2 = 0.0;
    double p3 = 0.0;
    double p4 = 0.0;
};

struct CentralMoments {
    double mu2 = 0.0;
    double mu3 = 0.0;
    double mu4 = 0.0;
};

struct SkewKurt {
    double skew = 0.0;
    double kurt = 0.0;
};

struct IcmCombination {
    double A = 1.0;
    double ey2 = 0.0;
    double exy = 0.0;
};

struct ImpliedMomentSet {
    double tau = 0.0;
    PowerPortfolio power;
    CentralMoments central;
    SkewKurt shape;
    IcmCombination icm;
};

// Out-of-the-money strip: puts below K0, calls above, the call/put average at K0.
struct OptionStrip {
    std::vector<double> strikes;  // strictly increasing
    std::vector<double> prices;
    double forward = 0.0;
    double k0 = 0.0;
    double r_d = 0.0;
    double r_f = 0.0;
    double tau = 0.0;
};

// Half the distance between neighbours inside, one-sided at the ends.
std::vector<double> strike_spacing(const std::vector<double>& strikes);

PowerPortfolio power_portfolios(const std::vector<double>& strikes,
                                const std::vector<double>& prices, double forward, double k0,
                                double r_d, double r_f, double tau);

CentralMoments central_moments(const PowerPortfolio& p);
SkewKurt skew_kurt(double mu2, double mu3, double mu4);

double implied_variance_vix(const std::vector<double>& strikes, const std::vector<double>& prices,
                            double forward, double k0, double r_d, double tau);

double corrected_variance(double v2, double rho, double omega, double tau);

double heston_total_variance(double v0, double theta, double kappa, double tau);

// Variance of the time-averaged Heston variance over [0, tau].
double heston_average_variance_variance(double v0, double theta, double kappa, double omega,
                                        double tau);

double sz_instantaneous_variance(double v0, double theta, double kappa, double omega, double t);
double sz_integrated_variance(double v0, double theta, double kappa, double omega, double tau);
double sz_total_variance(double v0, double theta, double kappa, double omega, double tau);

// Convexity-adjusted expected volatility from an annualized expected variance and the
// Heston variance-of-variance parameters.
double sz_expected_vol(double expected_variance, double v0, double theta, double kappa,
                       double omega_h, double tau);

IcmCombination icm_moment_combinations(double mu2, double mu3, double mu4);

OptionStrip surface_strip(const VolSurface& surface, const TenorSlice& slice);
ImpliedMomentSet implied_moments(const OptionStrip& strip);
std::vector<ImpliedMomentSet> surface_moments(const VolSurface& surface);

struct VarianceTermStructure {
    std::vector<double> tau;
    std::vector<double> v2;
    std::vector<double> v2_corrected;
};

VarianceTermStructure variance_term_structure(const VolSurface& surface, double rho,
                                              double omega);

}  // namespace fxsv
