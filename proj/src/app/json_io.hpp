#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "fxsv/calibrate.hpp"
#include "fxsv/estimators.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/moments.hpp"
#include "fxsv/pipeline.hpp"

namespace fxsv::app {

using nlohmann::json;

// Rounds to 12 significant digits; non-finite values become null.
json num(double v);
json num_array(const std::vector<double>& v);

json surface_to_json(const VolSurface& surface);
VolSurface surface_from_json(const json& j);

json params_to_json(const ModelParams& params);
json result_to_json(const CalibrationResult& r);
json term_structure_to_json(const VarianceTermStructure& ts);
json moments_to_json(const ImpliedMomentSet& m);
json fit_to_json(const TermStructureFit& fit);
json date_result_to_json(const DateResult& r, const PipelineConfig& config);

std::string dump(const json& j);

}  // namespace fxsv::app
