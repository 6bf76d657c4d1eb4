#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fxsv/calibrate.hpp"
#include "fxsv/estimators.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/moments.hpp"

namespace fxsv {

enum class StartMethod { ICM, Durrleman, Hist, TwoStage, EVP, MEVP };

std::string_view start_method_name(StartMethod method);
std::optional<StartMethod> parse_start_method(std::string_view name);

// Per-date inputs that depend on the history of earlier dates.
struct DateContext {
    VolSurface surface;
    double vix_1m = 0.0;  // volatility scale
    HistoricalPoint hist_heston;
    HistoricalPoint hist_sz;
};

struct FailedDate {
    Date date;
    std::string error;
};

struct PreparedContexts {
    std::vector<DateContext> contexts;
    std::vector<FailedDate> failures;
};

// Computes the one-month VIX series and the rolling historical (omega, rho) estimates.
PreparedContexts prepare_contexts(const std::vector<VolSurface>& surfaces);

struct PipelineConfig {
    ModelKind model = ModelKind::Heston;
    StartMethod start = StartMethod::ICM;
    CostKind cost = CostKind::MSE;
    bool feller = false;
    std::optional<int> max_iter;
    IntegrationGrid grid;
    bool stop_any = false;
};

CalibrationOptions pipeline_options(const PipelineConfig& config);

struct StartPoint {
    ModelParams params;
    std::vector<bool> free;
    VarianceTermStructure vix;
    TermStructureFit variance_fit;
    std::optional<TermStructureFit> vol_fit;  // Schobel-Zhu volatility term structure
    double omega = 0.0;                       // one-factor estimator output
    double rho = 0.0;
    std::vector<std::string> flags;
};

// Variance term structure, historical correction, term-structure fit and the estimator.
StartPoint build_start(const DateContext& context, const PipelineConfig& config);

struct DateResult {
    Date date;
    StartPoint start;
    CalibrationResult result;
    std::optional<CalibrationResult> stage1;
    RmseReport rmse;
};

DateResult run_date(const DateContext& context, const PipelineConfig& config);

}  // namespace fxsv
