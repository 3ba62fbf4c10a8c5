#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "collider/causal_model.hpp"
#include "collider/mutation_sampler.hpp"
#include "collider/task_catalog.hpp"

namespace collider {

enum class ModelFamily { CBN, MutationSampler };

std::string_view to_string(ModelFamily f);

/// One observed judgment on the 0-100 scale.
struct Judgment {
  TaskSpec task;
  double value = 0.0;
};

/// CBN parameters plus the chain length when the model is the mutation sampler.
struct ModelParameters {
  ColliderParameters cbn;
  std::optional<double> chain_length;

  friend bool operator==(const ModelParameters&, const ModelParameters&) = default;
};

struct FitSpec {
  ModelFamily model_family = ModelFamily::CBN;
  Tying tying = Tying::SharedPriorSharedStrength;
  GeneratingFunction generating_function = GeneratingFunction::Logistic;
  std::array<double, 2> lambda_bounds{1.0, 100.0};
  /// Grid points per free parameter, in layout order. Empty selects the
  /// default grids.
  std::vector<std::size_t> grid_resolution;
  double refine_tolerance = 1e-10;
  int max_refine_iterations = 4000;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  /// Chain settings for the sampler objective; chain_length and seed are
  /// overridden per evaluation.
  SamplerConfig sampler{1.0, 2000, 0, {0.5, 0.5}, 0.5, 1};

  void validate() const;
};

/// Maps between the free-parameter vector used by the optimizer and
/// ModelParameters for a given family/tying/generating function.
class ParameterLayout {
 public:
  enum class Kind { Prior, Strength, Bias, ChainLength };

  explicit ParameterLayout(const FitSpec& spec);

  std::size_t size() const { return kinds_.size(); }
  Kind kind(std::size_t i) const { return kinds_[i]; }
  const std::vector<std::string>& names() const { return names_; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }

  ModelParameters unpack(std::span<const double> x) const;
  std::vector<double> pack(const ModelParameters& p) const;
  std::vector<double> project(std::span<const double> x) const;
  std::vector<double> default_grid(std::size_t i) const;
  std::vector<double> grid_with_resolution(std::size_t i, std::size_t points) const;

 private:
  Tying tying_;
  GeneratingFunction generating_;
  bool sampler_;
  std::vector<Kind> kinds_;
  std::vector<std::string> names_;
  std::vector<double> lower_;
  std::vector<double> upper_;
};

struct FitResult {
  ModelParameters parameters;
  int n_params = 0;
  double sse = 0.0;
  /// Pearson r between judgments and 100*predictions; nullopt when either
  /// vector is constant.
  std::optional<double> r_fit;
  double aic = 0.0;
  double mae_loss = 0.0;
  std::size_t n_observations = 0;
  bool converged = false;
  int iterations = 0;
  /// Best objective after each simplex iteration.
  std::vector<double> objective_trace;
  std::vector<double> predictions;
};

struct GridSeed {
  ModelParameters parameters;
  double objective = 0.0;
};

struct GridSearchResult {
  std::vector<GridSeed> seeds;  // ascending objective, at most spec.top_k
  std::size_t evaluations = 0;
};

/// Model predictions in [0,1] for each judgment's task.
std::vector<double> model_predictions(const ModelParameters& params, const FitSpec& spec,
                                      std::span<const Judgment> judgments);

/// Sum of squared errors on the 0-100 scale.
double sse_objective(const ModelParameters& params, const FitSpec& spec,
                     std::span<const Judgment> judgments);

GridSearchResult grid_seed(const FitSpec& spec, std::span<const Judgment> judgments);

/// Bounded Nelder-Mead from `seed`, vertices projected onto the box.
FitResult refine(const ModelParameters& seed, const FitSpec& spec, std::span<const Judgment> judgments);

/// grid_seed, then refine from each of the top-k seeds; best result wins.
FitResult fit_model(const FitSpec& spec, std::span<const Judgment> judgments);

/// n*ln(sse/n) + 2k with sse floored at 1e-9.
double aic(double sse, std::size_t n, int k);

/// Mean |judgment - 100*prediction|.
double mae_loss(std::span<const double> judgments, std::span<const double> predictions);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

}  // namespace collider
