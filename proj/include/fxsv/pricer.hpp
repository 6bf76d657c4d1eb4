#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "fxsv/charfn.hpp"
#include "fxsv/market_data.hpp"

namespace fxsv {

// Trapezoid nodes over w = ln(u).
struct IntegrationGrid {
    double w_min = -17.0;
    double w_max = 5.0;
    double dw = 0.4;

    std::size_t node_count() const;
    double node(std::size_t i) const { return w_min + dw * static_cast<double>(i); }
    void check() const;
};

enum class OptionSide { Call, Put };

struct OptionSpec {
    double spot = 0.0;
    double strike = 0.0;
    double tau = 0.0;
    double r_d = 0.0;
    double r_f = 0.0;
    OptionSide side = OptionSide::Call;

    double forward() const;
    OptionSpec with_side(OptionSide s) const;
};

// Characteristic function of ln S_T in u.
using CharFn = std::function<cplx(cplx)>;

CharFn make_cf(const ModelParams& params, double spot, double tau, double r_d, double r_f,
               int j = 2);

double gk_price(const OptionSpec& spec, double sigma);
double gk_delta(const OptionSpec& spec, double sigma);
double bs_vega(const OptionSpec& spec, double sigma);
double implied_vol(const OptionSpec& spec, double price);

// Converts a call premium into the premium of spec.side through parity.
double from_call(const OptionSpec& spec, double call);

double attari_price(const CharFn& cf, const OptionSpec& spec, const IntegrationGrid& grid = {});

// Call prices for many strikes sharing one CF evaluation per node.
std::vector<double> attari_calls(const CharFn& cf, double spot, double tau, double r_d,
                                 double r_f, const std::vector<double>& strikes,
                                 const IntegrationGrid& grid = {});

struct TwoIntegralResult {
    double price = 0.0;
    double p1 = 0.0;
    double p2 = 0.0;
};

// P1 from the measure-shifted phi_2(u - i) / phi_2(-i).
TwoIntegralResult heston_two_integral_price(const CharFn& cf2, const OptionSpec& spec,
                                            const IntegrationGrid& grid = {});
// P1 from an explicitly supplied phi_1.
TwoIntegralResult heston_two_integral_price(const CharFn& cf1, const CharFn& cf2,
                                            const OptionSpec& spec,
                                            const IntegrationGrid& grid = {});

double carr_madan_price(const CharFn& cf, const OptionSpec& spec, double alpha = 1.5,
                        const IntegrationGrid& grid = {});

struct CellPrice {
    Tenor tenor = Tenor::M1;
    Pillar pillar = Pillar::ATM;
    double tau = 0.0;
    double strike = 0.0;
    double market_vol = 0.0;
    double model_call = 0.0;
    double model_vol = 0.0;
};

std::vector<CellPrice> surface_prices(const ModelParams& params, const VolSurface& surface,
                                      const IntegrationGrid& grid = {});

OptionSpec cell_spec(const VolSurface& surface, const TenorSlice& slice, Pillar pillar);

}  // namespace fxsv
