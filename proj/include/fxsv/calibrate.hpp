#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fxsv/charfn.hpp"
#include "fxsv/market_data.hpp"
#include "fxsv/pricer.hpp"

namespace fxsv {

// ============================================================================
// Nelder-Mead
// ============================================================================

struct NelderMeadConfig {
    double alpha = 1.0;
    double gamma = 2.0;
    double rho = 0.5;
    double sigma = 0.5;
    double eps_f = 1e-10;
    double eps_volume = 1e-12;
    int max_iter = 1600;
    bool stop_any = false;  // stop when either tolerance is met instead of both
    // Called once per ordering pass with the iteration count and the best vertex value.
    std::function<void(int, double)> observer;

    void check() const;
};

struct NelderMeadResult {
    std::vector<double> x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
};

using Objective = std::function<double(const std::vector<double>&)>;

NelderMeadResult nelder_mead(const Objective& f, const std::vector<double>& x_start,
                             const NelderMeadConfig& config = {});

// |det(edge vectors)| / n! for an (n+1)-vertex simplex in R^n.
double simplex_volume(const std::vector<std::vector<double>>& vertices);

// ============================================================================
// Parameter vectors and transforms
// ============================================================================

// Per factor the layout is (v0, theta, kappa, omega, rho).
std::size_t parameter_count(ModelKind kind);
std::vector<std::string> parameter_names(ModelKind kind);
std::vector<double> to_vector(const ModelParams& params);
ModelParams from_vector(ModelKind kind, const std::vector<double>& values);

std::vector<double> transform_params(ModelKind kind, const std::vector<double>& natural);
std::vector<double> untransform_params(ModelKind kind, const std::vector<double>& x);

bool feller_satisfied(const ModelParams& params);

// ============================================================================
// Cost functions
// ============================================================================

enum class CostKind { MSE, MAE, MAPE, MSPE };
enum class CostTarget { VegaWeightedPrice, ImpliedVol };

std::string_view cost_kind_name(CostKind kind);
std::optional<CostKind> parse_cost_kind(std::string_view name);

inline constexpr double feller_penalty = 999.0;

struct CostSpec {
    CostKind kind = CostKind::MSE;
    CostTarget target = CostTarget::VegaWeightedPrice;
    double vega_floor = 1e-8;
    bool feller = false;
};

double cost_term(CostKind kind, double model, double market);

// Caches market quantities of a surface so repeated cost evaluations only price.
class SurfaceObjective {
public:
    SurfaceObjective(const VolSurface& surface, const CostSpec& spec,
                     const IntegrationGrid& grid = {});

    double operator()(const ModelParams& params) const;
    std::vector<double> model_values(const ModelParams& params) const;
    const std::vector<double>& market_values() const { return market_values_; }
    std::size_t cell_count() const { return market_values_.size(); }

private:
    const VolSurface* surface_;
    CostSpec spec_;
    IntegrationGrid grid_;
    std::vector<double> market_values_;
    std::vector<double> vegas_;
};

double cost(const ModelParams& params, const VolSurface& surface, const CostSpec& spec,
            const IntegrationGrid& grid = {});

// ============================================================================
// Calibration
// ============================================================================

struct CalibrationResult {
    ModelKind kind = ModelKind::Heston;
    ModelParams params;
    ModelParams start;
    double cost = 0.0;
    double start_cost = 0.0;
    int iterations = 0;
    bool converged = false;
    bool feller_satisfied = false;
    std::vector<double> residuals;  // model minus market value per cell
    std::vector<std::string> flags;
};

struct CalibrationOptions {
    CostSpec cost;
    NelderMeadConfig nm;
    IntegrationGrid grid;
    std::vector<bool> free;  // empty means every parameter is free
};

int default_iteration_cap(ModelKind kind);
CalibrationOptions default_options(ModelKind kind);

// In Feller mode a violating start has each omega capped at sqrt(1.99 theta kappa) first.
CalibrationResult calibrate_full(const VolSurface& surface, const ModelParams& start,
                                 const CalibrationOptions& options);

// Free mask that pins the two correlations of a two-factor model.
std::vector<bool> pinned_rho_mask(ModelKind kind);

struct TermStructureFit {
    double v0 = 0.0;
    double theta = 0.0;
    double kappa = 0.0;
    double cost = 0.0;
    int iterations = 0;
    bool converged = false;
    bool kappa_identified = true;
};

NelderMeadConfig term_structure_config();

// Fits sqrt of the Heston average variance to sqrt(v2) on all tenors but the first.
TermStructureFit calibrate_variance_ts(const std::vector<double>& tau,
                                       const std::vector<double>& v2,
                                       const NelderMeadConfig& config = term_structure_config());

// Fits the vol-scale mean-reversion curve to expected-vol targets on all tenors but the first.
TermStructureFit calibrate_vol_ts_sz(const std::vector<double>& tau,
                                     const std::vector<double>& vols,
                                     const NelderMeadConfig& config = term_structure_config());

// Fits the Schobel-Zhu annualized variance with omega held fixed.
TermStructureFit calibrate_sz_variance_ts(const std::vector<double>& tau,
                                          const std::vector<double>& v2, double omega,
                                          const NelderMeadConfig& config =
                                              term_structure_config());

inline constexpr double outlier_threshold = 0.4;

// Days t whose value exceeds every earlier value by more than the log threshold.
std::vector<std::size_t> detect_outliers(const std::vector<double>& series,
                                         double threshold = outlier_threshold);

struct DailyCalibration {
    CalibrationResult result;
    std::optional<CalibrationResult> recalibrated;
    std::vector<std::string> outlier_params;
};

using Recalibrate = std::function<CalibrationResult(std::size_t day, const ModelParams& start)>;

std::vector<DailyCalibration> outlier_recalibration(const std::vector<CalibrationResult>& series,
                                                    const std::vector<std::size_t>& params,
                                                    const Recalibrate& recalibrate,
                                                    double start_factor = 2.0,
                                                    double kappa_factor = 1.0);

struct TwoStageResult {
    CalibrationResult stage1;
    CalibrationResult stage2;
};

// Symmetric two-factor parameters equivalent to a one-factor model.
TwoFactorParams symmetric_two_factor(ModelKind kind, const FactorParams& one_factor);

TwoStageResult two_stage_calibration(ModelKind kind, const VolSurface& surface,
                                     const FactorParams& symmetric_start,
                                     const CalibrationOptions& stage1,
                                     const CalibrationOptions& stage2);

struct CalibrationRisk {
    std::vector<std::string> names;
    std::vector<double> risk;
    std::array<CalibrationResult, 3> runs;  // MSE, MAE, MAPE
};

// Calibrates (v0, theta, kappa) of a one-factor model under MSE, MAE and MAPE.
CalibrationRisk calibration_risk(const VolSurface& surface, const ModelParams& base,
                                 const CalibrationOptions& options);

struct RmseReport {
    double vol = 0.0;
    double vega = 0.0;
};

RmseReport rmse_report(const ModelParams& params, const VolSurface& surface,
                       const IntegrationGrid& grid = {});

}  // namespace fxsv
