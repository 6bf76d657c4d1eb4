#include "synthetic.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "fxsv/errors.hpp"

namespace fxsv::testing {

VolSurface synthetic_surface(const ModelParams& params, const MarketSetup& m,
                             const IntegrationGrid& grid) {
    VolSurface s;
    s.date = m.date;
    s.spot = m.spot;
    for (const Tenor t : all_tenors) {
        TenorSlice slice;
        slice.tenor = t;
        slice.tau = year_fraction(m.date, t);
        const double ois = std::expm1(m.r_f * slice.tau) / slice.tau;
        const double fwd = m.spot * std::exp((m.r_d - m.r_f) * slice.tau);
        slice.rates = rates_from_forward(ois, fwd, m.spot, slice.tau);
        const auto cf = make_cf(params, m.spot, slice.tau, slice.rates.r_d, slice.rates.r_f);
        for (const Pillar p : all_pillars) {
            double sigma = 0.1;
            double strike = 0.0;
            for (int it = 0; it < 500; ++it) {
                strike = strike_from_delta(m.spot, slice.rates.r_d, slice.rates.r_f, slice.tau, sigma,
                                           pillar_delta(p));
                OptionSpec spec{m.spot, strike, slice.tau, slice.rates.r_d, slice.rates.r_f,
                                pillar_is_call(p) ? OptionSide::Call : OptionSide::Put};
                const double next = implied_vol(spec, attari_price(cf, spec, grid));
                const bool done = std::abs(next - sigma) < 1e-14;
                sigma = next;
                if (done) break;
            }
            const auto idx = static_cast<std::size_t>(p);
            slice.smile.vols[idx] = sigma;
            slice.strikes[idx] = strike_from_delta(m.spot, slice.rates.r_d, slice.rates.r_f, slice.tau,
                                                   sigma, pillar_delta(p));
        }
        s.slices.push_back(slice);
    }
    return s;
}

std::string quotes_csv(const std::vector<VolSurface>& surfaces) {
    std::ostringstream os;
    os << "date,tenor,spot,ois,fwd_points,atm,rr25,fly25,rr10,fly10\n";
    char buf[64];
    auto put = [&](double v, bool last = false) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf << (last ? '\n' : ',');
    };
    for (const auto& s : surfaces) {
        for (const auto& q : surface_to_quotes(s)) {
            os << format_date(q.date) << ',' << tenor_label(q.tenor) << ',';
            put(q.spot);
            put(q.ois);
            put(q.fwd_points);
            put(100.0 * q.atm);
            put(100.0 * q.rr25);
            put(100.0 * q.fly25);
            put(100.0 * q.rr10);
            put(100.0 * q.fly10, true);
        }
    }
    return os.str();
}

}  // namespace fxsv::testing
