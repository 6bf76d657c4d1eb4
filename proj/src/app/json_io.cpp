#include "json_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "fxsv/errors.hpp"

namespace fxsv::app {

json num(double v) {
    if (!std::isfinite(v)) return nullptr;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::stod(buf);
}

json num_array(const std::vector<double>& v) {
    json a = json::array();
    for (const double x : v) a.push_back(num(x));
    return a;
}

json surface_to_json(const VolSurface& surface) {
    json j;
    j["date"] = format_date(surface.date);
    j["spot"] = num(surface.spot);
    json slices = json::array();
    for (const auto& s : surface.slices) {
        json t;
        t["tenor"] = std::string(tenor_label(s.tenor));
        t["tau"] = num(s.tau);
        t["r_d"] = num(s.rates.r_d);
        t["r_f"] = num(s.rates.r_f);
        t["forward"] = num(s.rates.forward);
        json pillars = json::array();
        for (const Pillar p : all_pillars) {
            json q;
            q["pillar"] = std::string(pillar_label(p));
            q["delta"] = num(pillar_delta(p));
            q["vol"] = num(s.smile.vol(p));
            q["strike"] = num(s.strike(p));
            pillars.push_back(q);
        }
        t["pillars"] = pillars;
        slices.push_back(t);
    }
    j["slices"] = slices;
    return j;
}

VolSurface surface_from_json(const json& j) {
    try {
        VolSurface s;
        s.date = parse_date(j.at("date").get<std::string>());
        s.spot = j.at("spot").get<double>();
        for (const auto& t : j.at("slices")) {
            TenorSlice slice;
            const auto tenor = parse_tenor(t.at("tenor").get<std::string>());
            if (!tenor) raise(ErrorCode::ParseError, "unknown tenor in surface file");
            slice.tenor = *tenor;
            slice.tau = t.at("tau").get<double>();
            slice.rates.r_d = t.at("r_d").get<double>();
            slice.rates.r_f = t.at("r_f").get<double>();
            slice.rates.forward = t.at("forward").get<double>();
            const auto& pillars = t.at("pillars");
            if (pillars.size() != all_pillars.size()) raise(ErrorCode::ParseError, "surface slice needs five pillars");
            for (const auto& q : pillars) {
                const std::string label = q.at("pillar").get<std::string>();
                const auto it = std::find_if(all_pillars.begin(), all_pillars.end(),
                                             [&](Pillar p) { return pillar_label(p) == label; });
                if (it == all_pillars.end()) raise(ErrorCode::ParseError, "unknown pillar '" + label + "'");
                const auto idx = static_cast<std::size_t>(*it);
                slice.smile.vols[idx] = q.at("vol").get<double>();
                slice.strikes[idx] = q.at("strike").get<double>();
            }
            s.slices.push_back(slice);
        }
        return s;
    } catch (const json::exception& e) {
        raise(ErrorCode::ParseError, std::string("malformed surface file: ") + e.what());
    }
}

json params_to_json(const ModelParams& params) {
    json j = json::object();
    const auto names = parameter_names(params.kind);
    const auto values = to_vector(params);
    for (std::size_t i = 0; i < names.size(); ++i) j[names[i]] = num(values[i]);
    if (params.jumps) {
        j["lambda"] = num(params.jumps->lambda);
        j["k_hat"] = num(params.jumps->k_hat);
        j["delta"] = num(params.jumps->delta);
    }
    return j;
}

json result_to_json(const CalibrationResult& r) {
    json j;
    j["model"] = std::string(model_kind_name(r.kind));
    j["params"] = params_to_json(r.params);
    j["start_params"] = params_to_json(r.start);
    j["cost"] = num(r.cost);
    j["start_cost"] = num(r.start_cost);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["feller_satisfied"] = r.feller_satisfied;
    j["residuals"] = num_array(r.residuals);
    j["flags"] = r.flags;
    return j;
}

json term_structure_to_json(const VarianceTermStructure& ts) {
    json j;
    j["tau"] = num_array(ts.tau);
    j["v2"] = num_array(ts.v2);
    j["v2_corrected"] = num_array(ts.v2_corrected);
    return j;
}

json moments_to_json(const ImpliedMomentSet& m) {
    json j;
    j["tau"] = num(m.tau);
    j["p1"] = num(m.power.p1);
    j["p2"] = num(m.power.p2);
    j["p3"] = num(m.power.p3);
    j["p4"] = num(m.power.p4);
    j["mu2"] = num(m.central.mu2);
    j["mu3"] = num(m.central.mu3);
    j["mu4"] = num(m.central.mu4);
    j["skewness"] = num(m.shape.skew);
    j["kurtosis"] = num(m.shape.kurt);
    return j;
}

json fit_to_json(const TermStructureFit& fit) {
    json j;
    j["v0"] = num(fit.v0);
    j["theta"] = num(fit.theta);
    j["kappa"] = num(fit.kappa);
    j["cost"] = num(fit.cost);
    j["iterations"] = fit.iterations;
    j["converged"] = fit.converged;
    j["kappa_identified"] = fit.kappa_identified;
    return j;
}

json date_result_to_json(const DateResult& r, const PipelineConfig& config) {
    json j;
    j["date"] = format_date(r.date);
    j["model"] = std::string(model_kind_name(config.model));
    j["start"] = std::string(start_method_name(config.start));
    j["cost_kind"] = std::string(cost_kind_name(config.cost));
    j["feller"] = config.feller;
    j["params"] = params_to_json(r.result.params);
    j["start_params"] = params_to_json(r.result.start);
    j["cost"] = num(r.result.cost);
    j["start_cost"] = num(r.result.start_cost);
    j["rmse_vol"] = num(r.rmse.vol);
    j["rmse_vega"] = num(r.rmse.vega);
    j["iterations"] = r.result.iterations;
    j["converged"] = r.result.converged;
    j["feller_satisfied"] = r.result.feller_satisfied;
    j["flags"] = r.result.flags;
    json est;
    est["omega"] = num(r.start.omega);
    est["rho"] = num(r.start.rho);
    j["estimator"] = est;
    j["variance_term_structure"] = term_structure_to_json(r.start.vix);
    j["variance_fit"] = fit_to_json(r.start.variance_fit);
    if (r.start.vol_fit) j["vol_fit"] = fit_to_json(*r.start.vol_fit);
    if (r.stage1) j["stage1"] = result_to_json(*r.stage1);
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace fxsv::app
