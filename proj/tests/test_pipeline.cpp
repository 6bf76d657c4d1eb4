#include <gtest/gtest.h>

#include <cmath>

#include "fxsv/errors.hpp"
#include "fxsv/pipeline.hpp"
#include "synthetic.hpp"

using namespace fxsv;

namespace {

const HestonParams truth{0.0082, 0.0143, 2.07, 0.3, -0.38, 0.0};

std::vector<VolSurface> three_days() {
    std::vector<VolSurface> out;
    for (int d = 0; d < 3; ++d) {
        fxsv::testing::MarketSetup m;
        m.date = Date{std::chrono::sys_days{m.date} + std::chrono::days{d}};
        m.spot = 1.35 + 0.004 * d;
        out.push_back(fxsv::testing::synthetic_surface(ModelParams::heston(truth), m));
    }
    return out;
}

}  // namespace

TEST(StartMethodNames, RoundTrip) {
    for (const auto m : {StartMethod::ICM, StartMethod::Durrleman, StartMethod::Hist, StartMethod::TwoStage,
                         StartMethod::EVP, StartMethod::MEVP}) {
        EXPECT_EQ(parse_start_method(start_method_name(m)), m);
    }
    EXPECT_FALSE(parse_start_method("bogus"));
}

TEST(PrepareContexts, VixAndHistoryPerDate) {
    const auto prepared = prepare_contexts(three_days());
    ASSERT_EQ(prepared.contexts.size(), 3u);
    EXPECT_TRUE(prepared.failures.empty());
    for (const auto& c : prepared.contexts) {
        EXPECT_GT(c.vix_1m, 0.05);
        EXPECT_LT(c.vix_1m, 0.2);
    }
}

TEST(PrepareContexts, EmptySurfaceIsRecordedAndSkipped) {
    auto days = three_days();
    days[1].slices.clear();
    const auto prepared = prepare_contexts(days);
    EXPECT_EQ(prepared.contexts.size(), 2u);
    ASSERT_EQ(prepared.failures.size(), 1u);
    EXPECT_EQ(prepared.failures[0].date, days[1].date);
}

TEST(BuildStart, OneFactorRejectsTwoFactorSplits) {
    const auto prepared = prepare_contexts(three_days());
    PipelineConfig c;
    c.start = StartMethod::EVP;
    try {
        build_start(prepared.contexts[0], c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
}

TEST(BuildStart, IcmStartHasRecoveredSign) {
    const auto prepared = prepare_contexts(three_days());
    const StartPoint sp = build_start(prepared.contexts[0], PipelineConfig{});
    EXPECT_LT(sp.rho, 0.0);
    EXPECT_GT(sp.omega, 0.0);
    EXPECT_EQ(sp.params.kind, ModelKind::Heston);
    EXPECT_EQ(sp.vix.tau.size(), 6u);
}

TEST(BuildStart, TwoFactorSplitsFollowModel) {
    const auto prepared = prepare_contexts(three_days());
    PipelineConfig c;
    c.model = ModelKind::Bates2F;
    EXPECT_EQ(build_start(prepared.contexts[0], c).params.kind, ModelKind::Bates2F);
    c.model = ModelKind::Bates2FFeller;
    const StartPoint mevp = build_start(prepared.contexts[0], c);
    EXPECT_TRUE(feller_satisfied(mevp.params));
    ASSERT_EQ(mevp.free.size(), 10u);
    EXPECT_FALSE(mevp.free[4]);
    EXPECT_FALSE(mevp.free[9]);
}

TEST(RunDate, MatchesLibraryRoundTrip) {
    const auto prepared = prepare_contexts(three_days());
    const PipelineConfig config;
    const DateResult r = run_date(prepared.contexts[0], config);
    const StartPoint sp = build_start(prepared.contexts[0], config);
    CalibrationOptions options = pipeline_options(config);
    const CalibrationResult lib = calibrate_full(prepared.contexts[0].surface, sp.params, options);
    EXPECT_EQ(to_vector(r.result.params), to_vector(lib.params));
    EXPECT_EQ(r.result.iterations, lib.iterations);
    EXPECT_LT(r.rmse.vol, 1e-4);
    const auto p = to_vector(r.result.params);
    EXPECT_NEAR(p[0], truth.v0, 1e-4);
    EXPECT_NEAR(p[4], truth.rho, 2e-2);
}

TEST(RunDate, DurrlemanAndHistoricalStartsRun) {
    const auto prepared = prepare_contexts(three_days());
    for (const auto start : {StartMethod::Durrleman, StartMethod::Hist}) {
        PipelineConfig c;
        c.start = start;
        c.max_iter = 50;
        const DateResult r = run_date(prepared.contexts[2], c);
        EXPECT_LE(r.result.iterations, 50);
        EXPECT_LE(r.result.cost, r.result.start_cost);
    }
}

TEST(PipelineOptions, ConfigOverridesDefaults) {
    PipelineConfig c;
    c.model = ModelKind::OUOU;
    c.cost = CostKind::MAPE;
    c.feller = true;
    c.stop_any = true;
    EXPECT_EQ(pipeline_options(c).nm.max_iter, 800);
    c.max_iter = 17;
    const auto o = pipeline_options(c);
    EXPECT_EQ(o.nm.max_iter, 17);
    EXPECT_EQ(o.cost.kind, CostKind::MAPE);
    EXPECT_TRUE(o.cost.feller);
    EXPECT_TRUE(o.nm.stop_any);
}
