#pragma once

#include <string>
#include <vector>

#include "fxsv/charfn.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/pricer.hpp"

namespace fxsv::testing {

struct MarketSetup {
    Date date{std::chrono::year{2014}, std::chrono::month{3}, std::chrono::day{14}};
    double spot = 1.35;
    double r_d = 0.012;
    double r_f = 0.004;
};

// Surface whose pillar vols are the model's own implied vols at the delta-consistent strikes.
VolSurface synthetic_surface(const ModelParams& params, const MarketSetup& market = {},
                             const IntegrationGrid& grid = {});

// Quote rows in percent vols with full precision, one line per (date, tenor).
std::string quotes_csv(const std::vector<VolSurface>& surfaces);

}  // namespace fxsv::testing
