#include "collider/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "collider/error.hpp"

namespace collider {

namespace {

constexpr double kPriorLow = 0.001;
constexpr double kPriorHigh = 0.999;

bool free_prior(Tying t) {
  return t == Tying::FreePriorSharedStrength || t == Tying::FreePriorFreeStrength;
}

bool free_strength(Tying t) {
  return t == Tying::SharedPriorFreeStrength || t == Tying::FreePriorFreeStrength;
}

// Judgments reduced to distinct queries, so each evaluation computes every
// conditional once.
class Objective {
 public:
  Objective(const FitSpec& spec, std::span<const Judgment> judgments) : spec_(spec), layout_(spec) {
    if (judgments.empty()) throw Error(ErrorCode::EmptyInput, "no judgments to fit");
    slot_.reserve(judgments.size());
    values_.reserve(judgments.size());
    for (const Judgment& j : judgments) {
      auto it = std::find(queries_.begin(), queries_.end(), j.task.query);
      if (it == queries_.end()) {
        queries_.push_back(j.task.query);
        it = queries_.end() - 1;
      }
      slot_.push_back(static_cast<std::size_t>(it - queries_.begin()));
      values_.push_back(j.value);
    }
  }

  const ParameterLayout& layout() const { return layout_; }
  std::span<const double> values() const { return values_; }

  std::vector<double> predictions(const ModelParameters& p) const {
    std::vector<double> distinct;
    if (spec_.model_family == ModelFamily::CBN) {
      const JointTable joint = build_joint(p.cbn);
      distinct.reserve(queries_.size());
      for (const auto& q : queries_) distinct.push_back(conditional_prob(joint, q));
    } else {
      if (!p.chain_length) throw Error(ErrorCode::InvalidInput, "sampler model needs a chain length");
      SamplerConfig cfg = spec_.sampler;
      cfg.chain_length = *p.chain_length;
      cfg.seed = spec_.seed;
      distinct = expected_predictions(p.cbn, cfg, std::span<const EvidenceQuery>(queries_));
    }
    std::vector<double> out(slot_.size());
    for (std::size_t i = 0; i < slot_.size(); ++i) out[i] = distinct[slot_[i]];
    return out;
  }

  double sse(const ModelParameters& p) const {
    const std::vector<double> pred = predictions(p);
    double total = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double r = values_[i] - 100.0 * pred[i];
      total += r * r;
    }
    if (!std::isfinite(total)) {
      std::ostringstream msg;
      msg << "objective is " << total << " at " << describe(p);
      throw Error(ErrorCode::NonFinite, msg.str());
    }
    return total;
  }

  double operator()(std::span<const double> x) const { return sse(layout_.unpack(x)); }

 private:
  static std::string describe(const ModelParameters& p) {
    std::ostringstream out;
    out << "prior=(" << p.cbn.prior_c1 << ',' << p.cbn.prior_c2 << ") strength=(" << p.cbn.strength_c1
        << ',' << p.cbn.strength_c2 << ") bias=" << p.cbn.bias_e;
    if (p.chain_length) out << " lambda=" << *p.chain_length;
    return out.str();
  }

  const FitSpec& spec_;
  ParameterLayout layout_;
  std::vector<EvidenceQuery> queries_;
  std::vector<std::size_t> slot_;
  std::vector<double> values_;
};

struct Vertex {
  std::vector<double> x;
  double f = 0.0;
};

struct SimplexOutcome {
  Vertex best;
  bool converged = false;
  int iterations = 0;
};

SimplexOutcome nelder_mead(const Objective& objective, const std::vector<double>& start, double start_f,
                           double tolerance, int max_iterations, std::vector<double>& trace) {
  constexpr double kReflect = 1.0;
  constexpr double kExpand = 2.0;
  constexpr double kContract = 0.5;
  constexpr double kShrink = 0.5;

  const ParameterLayout& layout = objective.layout();
  const std::size_t dim = layout.size();
  auto eval = [&](std::vector<double> x) {
    x = layout.project(x);
    Vertex v{x, objective(x)};
    return v;
  };

  std::vector<Vertex> simplex;
  simplex.reserve(dim + 1);
  simplex.push_back({start, start_f});
  for (std::size_t i = 0; i < dim; ++i) {
    const double range = layout.upper(i) - layout.lower(i);
    double step = 0.1 * range;
    if (layout.kind(i) == ParameterLayout::Kind::ChainLength) step = std::min(step, 4.0);
    std::vector<double> x = start;
    x[i] = (x[i] + step <= layout.upper(i)) ? x[i] + step : x[i] - step;
    simplex.push_back(eval(x));
  }

  auto by_f = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
  SimplexOutcome out;
  for (int it = 0; it < max_iterations; ++it) {
    std::stable_sort(simplex.begin(), simplex.end(), by_f);
    const Vertex& best = simplex.front();
    const Vertex& worst = simplex.back();

    double spread_x = 0.0;
    for (std::size_t v = 1; v <= dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double range = layout.upper(i) - layout.lower(i);
        spread_x = std::max(spread_x, std::abs(simplex[v].x[i] - best.x[i]) / range);
      }
    }
    if (worst.f - best.f <= tolerance * std::max(1.0, std::abs(best.f)) || spread_x < 1e-12) {
      out.converged = true;
      break;
    }
    ++out.iterations;

    std::vector<double> centroid(dim, 0.0);
    for (std::size_t v = 0; v < dim; ++v) {
      for (std::size_t i = 0; i < dim; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(dim);
    }
    auto along = [&](const std::vector<double>& from, double t) {
      std::vector<double> x(dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] = centroid[i] + t * (from[i] - centroid[i]);
      return x;
    };

    Vertex reflected = eval(along(worst.x, -kReflect));
    if (reflected.f < best.f) {
      Vertex expanded = eval(along(reflected.x, kExpand));
      simplex.back() = expanded.f < reflected.f ? std::move(expanded) : std::move(reflected);
    } else if (reflected.f < simplex[dim - 1].f) {
      simplex.back() = std::move(reflected);
    } else {
      const bool outside = reflected.f < worst.f;
      Vertex contracted = outside ? eval(along(reflected.x, kContract)) : eval(along(worst.x, kContract));
      const double threshold = outside ? reflected.f : worst.f;
      if (contracted.f < threshold || (outside && contracted.f <= threshold)) {
        simplex.back() = std::move(contracted);
      } else {
        for (std::size_t v = 1; v <= dim; ++v) {
          std::vector<double> x(dim);
          for (std::size_t i = 0; i < dim; ++i) {
            x[i] = simplex[0].x[i] + kShrink * (simplex[v].x[i] - simplex[0].x[i]);
          }
          simplex[v] = eval(x);
        }
      }
    }
    trace.push_back(std::min_element(simplex.begin(), simplex.end(), by_f)->f);
  }
  std::stable_sort(simplex.begin(), simplex.end(), by_f);
  out.best = simplex.front();
  return out;
}

FitResult summarize(const Objective& objective, const ModelParameters& params) {
  FitResult r;
  r.parameters = params;
  r.n_params = static_cast<int>(objective.layout().size());
  r.predictions = objective.predictions(params);
  r.n_observations = r.predictions.size();
  r.sse = objective.sse(params);
  std::vector<double> scaled(r.predictions.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = 100.0 * r.predictions[i];
  r.r_fit = pearson(objective.values(), scaled);
  r.aic = aic(r.sse, r.n_observations, r.n_params);
  r.mae_loss = mae_loss(objective.values(), r.predictions);
  return r;
}

FitResult refine_with(const Objective& objective, const ModelParameters& seed, const FitSpec& spec) {
  const ParameterLayout& layout = objective.layout();
  std::vector<double> x = layout.pack(seed);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < layout.lower(i) || x[i] > layout.upper(i)) {
      throw Error(ErrorCode::ParameterOutOfRange, "seed parameter " + layout.names()[i] + " outside bounds");
    }
  }
  double f = objective(x);
  std::vector<double> trace{f};
  int iterations = 0;
  bool converged = false;
  // Restart from the incumbent until a fresh simplex stops paying off.
  for (int restart = 0; restart < 4; ++restart) {
    const int budget = spec.max_refine_iterations - iterations;
    if (budget <= 0) break;
    SimplexOutcome run = nelder_mead(objective, x, f, spec.refine_tolerance, budget, trace);
    iterations += run.iterations;
    const double improvement = f - run.best.f;
    if (run.best.f <= f) {
      x = run.best.x;
      f = run.best.f;
    }
    converged = run.converged;
    if (!converged) break;
    if (restart > 0 && improvement <= spec.refine_tolerance * std::max(1.0, std::abs(f))) break;
  }
  FitResult result = summarize(objective, layout.unpack(x));
  result.converged = converged;
  result.iterations = iterations;
  result.objective_trace = std::move(trace);
  return result;
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return out;
}

}  // namespace

std::string_view to_string(ModelFamily f) { return f == ModelFamily::CBN ? "cbn" : "sampler"; }

void FitSpec::validate() const {
  for (std::size_t r : grid_resolution) {
    if (r < 2) throw Error(ErrorCode::InvalidInput, "grid_resolution must be >= 2 per parameter");
  }
  if (!(refine_tolerance > 0.0)) throw Error(ErrorCode::InvalidInput, "refine_tolerance must be > 0");
  if (max_refine_iterations < 0) throw Error(ErrorCode::InvalidInput, "max_refine_iterations must be >= 0");
  if (top_k < 1) throw Error(ErrorCode::InvalidInput, "top_k must be >= 1");
  if (model_family == ModelFamily::MutationSampler) {
    if (!(lambda_bounds[0] >= 1.0 && lambda_bounds[1] >= lambda_bounds[0])) {
      throw Error(ErrorCode::InvalidInput, "lambda_bounds must satisfy 1 <= lo <= hi");
    }
    if (generating_function != GeneratingFunction::Logistic) {
      throw Error(ErrorCode::InvalidInput, "the mutation sampler needs the logistic generating function");
    }
  }
}

ParameterLayout::ParameterLayout(const FitSpec& spec)
    : tying_(spec.tying),
      generating_(spec.generating_function),
      sampler_(spec.model_family == ModelFamily::MutationSampler) {
  const bool logistic = generating_ == GeneratingFunction::Logistic;
  const double s_lo = logistic ? -kStrengthBound : kPriorLow;
  const double s_hi = logistic ? kStrengthBound : kPriorHigh;
  auto add = [&](Kind k, std::string name, double lo, double hi) {
    kinds_.push_back(k);
    names_.push_back(std::move(name));
    lower_.push_back(lo);
    upper_.push_back(hi);
  };
  if (free_prior(tying_)) {
    add(Kind::Prior, "w_{C1}", kPriorLow, kPriorHigh);
    add(Kind::Prior, "w_{C2}", kPriorLow, kPriorHigh);
  } else {
    add(Kind::Prior, "w_C", kPriorLow, kPriorHigh);
  }
  if (free_strength(tying_)) {
    add(Kind::Strength, "w_{C1,E}", s_lo, s_hi);
    add(Kind::Strength, "w_{C2,E}", s_lo, s_hi);
  } else {
    add(Kind::Strength, "w_{C,E}", s_lo, s_hi);
  }
  add(Kind::Bias, "w_E", s_lo, s_hi);
  if (sampler_) add(Kind::ChainLength, "lambda", spec.lambda_bounds[0], spec.lambda_bounds[1]);
}

ModelParameters ParameterLayout::unpack(std::span<const double> x) const {
  if (x.size() != size()) throw Error(ErrorCode::LengthMismatch, "parameter vector has the wrong size");
  ModelParameters p;
  p.cbn.generating_function = generating_;
  p.cbn.tying = tying_;
  std::size_t i = 0;
  if (free_prior(tying_)) {
    p.cbn.prior_c1 = x[i++];
    p.cbn.prior_c2 = x[i++];
  } else {
    p.cbn.prior_c1 = p.cbn.prior_c2 = x[i++];
  }
  if (free_strength(tying_)) {
    p.cbn.strength_c1 = x[i++];
    p.cbn.strength_c2 = x[i++];
  } else {
    p.cbn.strength_c1 = p.cbn.strength_c2 = x[i++];
  }
  p.cbn.bias_e = x[i++];
  if (sampler_) p.chain_length = x[i++];
  return p;
}

std::vector<double> ParameterLayout::pack(const ModelParameters& p) const {
  std::vector<double> x;
  x.reserve(size());
  x.push_back(p.cbn.prior_c1);
  if (free_prior(tying_)) x.push_back(p.cbn.prior_c2);
  x.push_back(p.cbn.strength_c1);
  if (free_strength(tying_)) x.push_back(p.cbn.strength_c2);
  x.push_back(p.cbn.bias_e);
  if (sampler_) {
    if (!p.chain_length) throw Error(ErrorCode::InvalidInput, "sampler parameters need a chain length");
    x.push_back(*p.chain_length);
  }
  return x;
}

std::vector<double> ParameterLayout::project(std::span<const double> x) const {
  std::vector<double> out(x.begin(), x.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lower_[i], upper_[i]);
  return out;
}

std::vector<double> ParameterLayout::default_grid(std::size_t i) const {
  const bool logistic = generating_ == GeneratingFunction::Logistic;
  switch (kinds_.at(i)) {
    case Kind::Prior: return {0.1, 0.3, 0.5, 0.7, 0.9};
    case Kind::Strength:
    case Kind::Bias:
      if (logistic) return {-2.0, -1.0, 0.0, 1.0, 2.0};
      return {0.1, 0.3, 0.5, 0.7, 0.9};
    case Kind::ChainLength: {
      std::vector<double> out;
      for (double l : {1., 2., 3., 4., 5., 6., 7., 8., 9., 10., 11., 12., 16., 24., 32., 48., 64.}) {
        if (l >= lower_[i] && l <= upper_[i]) out.push_back(l);
      }
      if (out.empty()) out.push_back(lower_[i]);
      return out;
    }
  }
  return {};
}

std::vector<double> ParameterLayout::grid_with_resolution(std::size_t i, std::size_t points) const {
  if (points < 2) throw Error(ErrorCode::InvalidInput, "grid resolution must be >= 2");
  const bool logistic = generating_ == GeneratingFunction::Logistic;
  const Kind k = kinds_.at(i);
  if (k == Kind::ChainLength) {
    std::vector<double> out;
    for (double l : linspace(lower_[i], std::min(upper_[i], 64.0), points)) {
      const double rounded = std::round(l);
      if (out.empty() || out.back() != rounded) out.push_back(rounded);
    }
    return out;
  }
  if (k == Kind::Prior || !logistic) {
    std::vector<double> out(points);
    for (std::size_t j = 0; j < points; ++j) out[j] = (static_cast<double>(j) + 0.5) / static_cast<double>(points);
    return out;
  }
  return linspace(-2.0, 2.0, points);
}

std::vector<double> model_predictions(const ModelParameters& params, const FitSpec& spec,
                                      std::span<const Judgment> judgments) {
  return Objective(spec, judgments).predictions(params);
}

double sse_objective(const ModelParameters& params, const FitSpec& spec, std::span<const Judgment> judgments) {
  return Objective(spec, judgments).sse(params);
}

GridSearchResult grid_seed(const FitSpec& spec, std::span<const Judgment> judgments) {
  spec.validate();
  const Objective objective(spec, judgments);
  const ParameterLayout& layout = objective.layout();
  if (!spec.grid_resolution.empty() && spec.grid_resolution.size() != layout.size()) {
    throw Error(ErrorCode::InvalidInput, "grid_resolution needs one entry per free parameter");
  }
  std::vector<std::vector<double>> axes;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    axes.push_back(spec.grid_resolution.empty() ? layout.default_grid(i)
                                                : layout.grid_with_resolution(i, spec.grid_resolution[i]));
  }

  std::size_t total = 1;
  for (const auto& axis : axes) total *= axis.size();
  std::vector<GridSeed> all;
  all.reserve(total);
  std::vector<double> x(axes.size());
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::size_t rem = flat;
    for (std::size_t i = axes.size(); i-- > 0;) {
      x[i] = axes[i][rem % axes[i].size()];
      rem /= axes[i].size();
    }
    const ModelParameters p = layout.unpack(x);
    all.push_back({p, objective.sse(p)});
  }

  GridSearchResult result;
  result.evaluations = all.size();
  std::stable_sort(all.begin(), all.end(), [](const GridSeed& a, const GridSeed& b) { return a.objective < b.objective; });
  all.resize(std::min(all.size(), spec.top_k));
  result.seeds = std::move(all);
  return result;
}

FitResult refine(const ModelParameters& seed, const FitSpec& spec, std::span<const Judgment> judgments) {
  spec.validate();
  const Objective objective(spec, judgments);
  return refine_with(objective, seed, spec);
}

FitResult fit_model(const FitSpec& spec, std::span<const Judgment> judgments) {
  spec.validate();
  const Objective objective(spec, judgments);
  const GridSearchResult grid = grid_seed(spec, judgments);
  std::optional<FitResult> best;
  for (const GridSeed& seed : grid.seeds) {
    FitResult r = refine_with(objective, seed.parameters, spec);
    if (!best || r.sse < best->sse) best = std::move(r);
  }
  return *best;
}

double aic(double sse, std::size_t n, int k) {
  if (n == 0) throw Error(ErrorCode::InvalidInput, "aic needs n > 0");
  if (sse < 0.0 || !std::isfinite(sse)) throw Error(ErrorCode::InvalidInput, "aic needs a finite sse >= 0");
  const double floored = std::max(sse, 1e-9);
  const auto nd = static_cast<double>(n);
  return nd * std::log(floored / nd) + 2.0 * k;
}

double mae_loss(std::span<const double> judgments, std::span<const double> predictions) {
  if (judgments.size() != predictions.size()) {
    throw Error(ErrorCode::LengthMismatch, "judgments and predictions differ in length");
  }
  if (judgments.empty()) throw Error(ErrorCode::EmptyInput, "mae_loss needs at least one judgment");
  double total = 0.0;
  for (std::size_t i = 0; i < judgments.size(); ++i) total += std::abs(judgments[i] - 100.0 * predictions[i]);
  return total / static_cast<double>(judgments.size());
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::LengthMismatch, "pearson inputs differ in length");
  if (x.size() < 2) return std::nullopt;
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace collider
