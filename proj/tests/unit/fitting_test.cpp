#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "collider/fitting.hpp"
#include "collider/task_catalog.hpp"
#include "test_support.hpp"

namespace collider {
namespace {

using testing::example_a;

std::vector<Judgment> noiseless(const std::vector<double>& preds, int repeats = 1) {
  std::vector<Judgment> out;
  for (int r = 0; r < repeats; ++r) {
    for (const TaskSpec& t : catalog()) out.push_back({t, 100.0 * preds[index_of(t.id)]});
  }
  return out;
}

TEST(Fitting, SseAndMaeOnExampleA) {
  const std::vector<Judgment> js = {{task(TaskId::VI), 64.0}, {task(TaskId::VII), 69.0}, {task(TaskId::VIII), 81.0}};
  FitSpec spec;
  const ModelParameters params{example_a(), std::nullopt};
  EXPECT_NEAR(sse_objective(params, spec, js), 0.10911077597863406, 1e-11);
  const auto preds = model_predictions(params, spec, js);
  const std::vector<double> values = {64.0, 69.0, 81.0};
  EXPECT_NEAR(mae_loss(values, preds), 0.16728327190698302, 1e-12);
}

TEST(Fitting, AicReference) {
  EXPECT_NEAR(aic(1100.0, 11, 3), 56.65687204586901, 1e-12);
  // A perfect fit is floored rather than producing -inf.
  EXPECT_NEAR(aic(0.0, 11, 3), 11 * std::log(1e-9 / 11) + 6, 1e-9);
  EXPECT_ERROR_CODE(aic(1.0, 0, 3), ErrorCode::InvalidInput);
}

TEST(Fitting, PearsonBasics) {
  const std::vector<double> x = {1, 2, 3, 4}, y = {2, 4, 6, 8}, z = {5, 5, 5, 5};
  EXPECT_NEAR(*pearson(x, y), 1.0, 1e-15);
  EXPECT_FALSE(pearson(x, z).has_value());
  EXPECT_ERROR_CODE(pearson(x, std::vector<double>{1, 2}), ErrorCode::LengthMismatch);
}

TEST(Fitting, LayoutNamesAndCounts) {
  FitSpec spec;
  spec.tying = Tying::SharedPriorSharedStrength;
  EXPECT_EQ(ParameterLayout(spec).names(), (std::vector<std::string>{"w_C", "w_{C,E}", "w_E"}));
  spec.tying = Tying::SharedPriorFreeStrength;
  EXPECT_EQ(ParameterLayout(spec).names(), (std::vector<std::string>{"w_C", "w_{C1,E}", "w_{C2,E}", "w_E"}));
  spec.tying = Tying::FreePriorSharedStrength;
  EXPECT_EQ(ParameterLayout(spec).size(), 4U);
  spec.tying = Tying::FreePriorFreeStrength;
  EXPECT_EQ(ParameterLayout(spec).size(), 5U);
  spec.tying = Tying::SharedPriorSharedStrength;
  spec.model_family = ModelFamily::MutationSampler;
  EXPECT_EQ(ParameterLayout(spec).names().back(), "lambda");
}

TEST(Fitting, LayoutPackUnpackAndProject) {
  FitSpec spec;
  spec.tying = Tying::SharedPriorFreeStrength;
  const ParameterLayout layout(spec);
  const ModelParameters p{ColliderParameters::free_strength(0.4, 1.5, -0.5, 0.2), std::nullopt};
  EXPECT_EQ(layout.unpack(layout.pack(p)), p);
  const auto projected = layout.project(std::vector<double>{2.0, 9.0, -9.0, 0.1});
  EXPECT_EQ(projected[0], layout.upper(0));
  EXPECT_EQ(projected[1], kStrengthBound);
  EXPECT_EQ(projected[2], -kStrengthBound);
  EXPECT_ERROR_CODE(layout.unpack(std::vector<double>{0.5}), ErrorCode::LengthMismatch);
}

TEST(Fitting, GridSeedsAreSortedAndBounded) {
  const auto js = noiseless(predict_task_battery(ColliderParameters::shared(0.5, 1.0, 0.0), catalog()));
  FitSpec spec;
  spec.top_k = 4;
  const auto grid = grid_seed(spec, js);
  EXPECT_EQ(grid.evaluations, 125U);
  ASSERT_EQ(grid.seeds.size(), 4U);
  for (std::size_t i = 1; i < grid.seeds.size(); ++i) EXPECT_LE(grid.seeds[i - 1].objective, grid.seeds[i].objective);
  // The generating parameters sit on the default grid.
  EXPECT_NEAR(grid.seeds[0].objective, 0.0, 1e-18);
  EXPECT_EQ(grid.seeds[0].parameters.cbn, ColliderParameters::shared(0.5, 1.0, 0.0));
}

TEST(Fitting, CustomGridResolution) {
  const auto js = noiseless(predict_task_battery(example_a(), catalog()));
  FitSpec spec;
  spec.grid_resolution = {3, 4, 2};
  EXPECT_EQ(grid_seed(spec, js).evaluations, 24U);
  spec.grid_resolution = {3, 4};
  EXPECT_ERROR_CODE(grid_seed(spec, js), ErrorCode::InvalidInput);
  spec.grid_resolution = {1, 4, 2};
  EXPECT_ERROR_CODE(spec.validate(), ErrorCode::InvalidInput);
}

TEST(Fitting, RecoversThreeParameterLogistic) {
  const auto truth = ColliderParameters::shared(0.528, 1.06, 0.91);
  const auto js = noiseless(predict_task_battery(truth, catalog()));
  FitSpec spec;
  const FitResult fit = fit_model(spec, js);
  EXPECT_NEAR(fit.parameters.cbn.prior_c1, 0.528, 1e-4);
  EXPECT_NEAR(fit.parameters.cbn.strength_c1, 1.06, 1e-4);
  EXPECT_NEAR(fit.parameters.cbn.bias_e, 0.91, 1e-4);
  EXPECT_LT(fit.sse, 1e-6);
  EXPECT_EQ(fit.n_params, 3);
  EXPECT_EQ(fit.n_observations, kTaskCount);
  EXPECT_NEAR(*fit.r_fit, 1.0, 1e-6);
  EXPECT_EQ(fit.predictions.size(), kTaskCount);
}

TEST(Fitting, RecoversFourParameterLogistic) {
  const auto truth = ColliderParameters::free_strength(0.4, 1.8, 0.6, -0.3);
  const auto js = noiseless(predict_task_battery(truth, catalog()));
  FitSpec spec;
  spec.tying = Tying::SharedPriorFreeStrength;
  const FitResult fit = fit_model(spec, js);
  EXPECT_NEAR(fit.parameters.cbn.strength_c1, 1.8, 1e-3);
  EXPECT_NEAR(fit.parameters.cbn.strength_c2, 0.6, 1e-3);
  EXPECT_LT(fit.sse, 1e-5);
  EXPECT_EQ(fit.n_params, 4);
}

TEST(Fitting, RecoversNoisyOr) {
  ColliderParameters truth = ColliderParameters::shared(0.35, 0.6, 0.25, GeneratingFunction::NoisyOr);
  const auto js = noiseless(predict_task_battery(truth, catalog()));
  FitSpec spec;
  spec.generating_function = GeneratingFunction::NoisyOr;
  const FitResult fit = fit_model(spec, js);
  EXPECT_NEAR(fit.parameters.cbn.prior_c1, 0.35, 1e-3);
  EXPECT_NEAR(fit.parameters.cbn.strength_c1, 0.6, 1e-3);
  EXPECT_NEAR(fit.parameters.cbn.bias_e, 0.25, 1e-3);
}

TEST(Fitting, RefineTraceIsMonotone) {
  const auto js = noiseless(predict_task_battery(ColliderParameters::shared(0.6, 0.7, -0.4), catalog()));
  FitSpec spec;
  const FitResult fit = refine({example_a(), std::nullopt}, spec, js);
  ASSERT_FALSE(fit.objective_trace.empty());
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
    EXPECT_LE(fit.objective_trace[i], fit.objective_trace[i - 1]);
  }
  EXPECT_TRUE(fit.converged);
}

TEST(Fitting, RefineRejectsOutOfBoxSeed) {
  const auto js = noiseless(predict_task_battery(example_a(), catalog()));
  FitSpec spec;
  ModelParameters seed{ColliderParameters::shared(0.5, 4.0, 0.0), std::nullopt};
  EXPECT_ERROR_CODE(refine(seed, spec, js), ErrorCode::ParameterOutOfRange);
}

TEST(Fitting, EmptyJudgmentsRejected) {
  FitSpec spec;
  EXPECT_ERROR_CODE(fit_model(spec, {}), ErrorCode::EmptyInput);
}

TEST(Fitting, SamplerNeedsLogistic) {
  FitSpec spec;
  spec.model_family = ModelFamily::MutationSampler;
  spec.generating_function = GeneratingFunction::NoisyOr;
  EXPECT_ERROR_CODE(spec.validate(), ErrorCode::InvalidInput);
}

TEST(Fitting, SamplerFitRecoversChainLength) {
  FitSpec spec;
  spec.model_family = ModelFamily::MutationSampler;
  spec.sampler.chain_count = 400;
  spec.seed = 17;
  spec.lambda_bounds = {1.0, 24.0};
  const ModelParameters truth{ColliderParameters::shared(0.5, 1.5, 0.0), 4.0};
  const auto js = noiseless(model_predictions(truth, spec, noiseless(std::vector<double>(kTaskCount, 0.0))));
  const FitResult fit = fit_model(spec, js);
  ASSERT_TRUE(fit.parameters.chain_length.has_value());
  EXPECT_NEAR(*fit.parameters.chain_length, 4.0, 0.5);
  EXPECT_EQ(fit.n_params, 4);
}

TEST(FittingProperty, FitIsDeterministic) {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> noise(0.0, 5.0);
  auto js = noiseless(predict_task_battery(ColliderParameters::shared(0.6, 1.2, 0.3), catalog()), 3);
  for (auto& j : js) j.value = std::clamp(j.value + noise(rng), 0.0, 100.0);
  FitSpec spec;
  const FitResult a = fit_model(spec, js);
  const FitResult b = fit_model(spec, js);
  EXPECT_EQ(a.parameters, b.parameters);
  EXPECT_EQ(a.sse, b.sse);
}

TEST(FittingProperty, NestedModelNeverFitsWorse) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> noise(0.0, 5.0);
  for (int trial = 0; trial < 5; ++trial) {
    auto js = noiseless(predict_task_battery(testing::random_logistic(rng), catalog()));
    for (auto& j : js) j.value = std::clamp(j.value + noise(rng), 0.0, 100.0);
    FitSpec three;
    FitSpec four;
    four.tying = Tying::SharedPriorFreeStrength;
    EXPECT_LE(fit_model(four, js).sse, fit_model(three, js).sse + 1e-6);
  }
}

}  // namespace
}  // namespace collider
