#include "causalstab/stabsel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "causalstab/lasso.hpp"
#include "causalstab/parallel.hpp"

namespace cstab {

SelectorKind parse_selector_kind(const std::string& s) {
  if (s == "lasso") return SelectorKind::LassoPath;
  if (s == "gbt" || s == "importance") return SelectorKind::ImportanceThreshold;
  throw std::invalid_argument("unknown selector: " + s);
}

std::string selector_kind_name(SelectorKind kind) {
  return kind == SelectorKind::LassoPath ? "lasso" : "gbt";
}

void LambdaGrid::validate() const {
  if (values.size() < 2) throw std::invalid_argument("LambdaGrid: needs at least 2 points");
  for (Eigen::Index g = 0; g < values.size(); ++g) {
    if (values[g] <= 0) throw std::invalid_argument("LambdaGrid: values must be positive");
    if (g > 0 && values[g] >= values[g - 1]) {
      throw std::invalid_argument("LambdaGrid: values must be strictly decreasing");
    }
  }
}

std::pair<std::vector<int>, std::vector<int>> draw_subsample_pair(int n, int m, RngSpec rng) {
  if (m < 1 || m > n / 2) {
    throw std::invalid_argument("draw_subsample_pair: m must satisfy 1 <= m <= floor(n/2)");
  }
  Rng gen(rng);
  std::vector<int> first = gen.sample_without_replacement(n, m);
  std::vector<int> complement;
  complement.reserve(static_cast<std::size_t>(n - m));
  {
    std::size_t k = 0;
    for (int i = 0; i < n; ++i) {
      if (k < first.size() && first[k] == i) {
        ++k;
      } else {
        complement.push_back(i);
      }
    }
  }
  std::vector<int> pick = gen.sample_without_replacement(n - m, m);
  std::vector<int> second(pick.size());
  for (std::size_t i = 0; i < pick.size(); ++i) {
    second[i] = complement[static_cast<std::size_t>(pick[i])];
  }
  return {std::move(first), std::move(second)};
}

namespace {

// Standardized view of a subsample as the lasso selector consumes it.
// Constant columns are zeroed (they can never enter an active set), and the
// response is centered and, optionally, scaled to unit population variance.
struct SelectorView {
  Eigen::MatrixXd x;
  Eigen::VectorXd response;
  std::vector<int> live_columns;  // columns with nonzero variance
};

SelectorView make_lasso_view(const Eigen::MatrixXd& X, const Eigen::VectorXd& response,
                             bool standardize_response) {
  const auto n = X.rows();
  SelectorView view;
  view.x.resize(n, X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n);
    if (var > 0) {
      view.x.col(j) = (X.col(j).array() - mean) / std::sqrt(var);
      view.live_columns.push_back(static_cast<int>(j));
    } else {
      view.x.col(j).setZero();
    }
  }
  const double r_mean = response.mean();
  view.response = response.array() - r_mean;
  if (standardize_response) {
    const double r_var = view.response.squaredNorm() / static_cast<double>(n);
    if (r_var > 0) view.response /= std::sqrt(r_var);
  }
  return view;
}

// Writes the G x p event slice for one subsample into `events` at index b.
void run_selector(SelectorKind kind, const Eigen::MatrixXd& X_A,
                  const Eigen::VectorXd& response, const LambdaGrid& grid,
                  const StabselParams& params, RngSpec rng, SelectionEvents& events, int b) {
  const int G = grid.size();
  const int p = static_cast<int>(X_A.cols());
  if (kind == SelectorKind::LassoPath) {
    SelectorView view = make_lasso_view(X_A, response, params.standardize_response);
    if (view.live_columns.empty()) return;  // nothing selectable
    Eigen::MatrixXd live(X_A.rows(), static_cast<Eigen::Index>(view.live_columns.size()));
    for (std::size_t c = 0; c < view.live_columns.size(); ++c) {
      live.col(static_cast<Eigen::Index>(c)) = view.x.col(view.live_columns[c]);
    }
    RegularizationPath path = lasso_path(live, view.response, grid.values);
    for (int g = 0; g < G; ++g) {
      for (int c : path.active_sets[static_cast<std::size_t>(g)].indices) {
        events.set(b, g, view.live_columns[static_cast<std::size_t>(c)], true);
      }
    }
  } else {
    TreeEnsemble ensemble = gbt_fit(X_A, response, params.selector_gbt, rng);
    const Eigen::VectorXd importance = gbt_importance(ensemble);
    for (int g = 0; g < G; ++g) {
      for (int j = 0; j < p; ++j) {
        if (importance[j] >= grid.values[g]) events.set(b, g, j, true);
      }
    }
  }
}

double preview_lambda_max(SelectorKind kind, const PreviewFit& preview,
                          const StabselParams& params) {
  if (kind == SelectorKind::LassoPath) {
    SelectorView view = make_lasso_view(preview.x, preview.response,
                                        params.standardize_response);
    if (view.live_columns.empty()) return 0.0;
    Eigen::MatrixXd live(preview.x.rows(),
                         static_cast<Eigen::Index>(view.live_columns.size()));
    for (std::size_t c = 0; c < view.live_columns.size(); ++c) {
      live.col(static_cast<Eigen::Index>(c)) = view.x.col(view.live_columns[c]);
    }
    return lasso_lambda_max(live, view.response);
  }
  TreeEnsemble ensemble = gbt_fit(preview.x, preview.response, params.selector_gbt,
                                  RngSpec{0, 0});
  const Eigen::VectorXd importance = gbt_importance(ensemble);
  return importance.size() > 0 ? importance.maxCoeff() : 0.0;
}

std::vector<int> complement_of(const std::vector<int>& sorted_subset, int n) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - sorted_subset.size());
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < sorted_subset.size() && sorted_subset[k] == i) {
      ++k;
    } else {
      out.push_back(i);
    }
  }
  return out;
}

bool disjoint_sorted(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return false;
    if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  return true;
}

bool has_both_arms(const Eigen::VectorXi& z, const std::vector<int>& rows) {
  bool control = false, treated = false;
  for (int r : rows) {
    (z[r] == 1 ? treated : control) = true;
    if (control && treated) return true;
  }
  return false;
}

// response_for(A, Ac, rng) supplies the selector response for rows A.
using ResponseProvider =
    std::function<Eigen::VectorXd(const std::vector<int>&, const std::vector<int>&, RngSpec)>;

std::pair<ProbabilityCurves, SelectionEvents> estimate_impl(
    const Eigen::MatrixXd& X, const Eigen::VectorXi* z_for_retries,
    const ResponseProvider& provider, SelectorKind selector, const LambdaGrid& grid,
    const StabselParams& params, RngSpec rng, ProbabilityCurves::Mode mode) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  grid.validate();
  if (grid.selector_kind != selector) {
    throw std::invalid_argument("estimate_selection_probabilities: grid built for a different selector");
  }
  if (params.B < 1) throw std::invalid_argument("estimate_selection_probabilities: B must be >= 1");
  if (params.m < 1 || params.m > n / 2) {
    throw std::invalid_argument("estimate_selection_probabilities: m must satisfy 1 <= m <= floor(n/2)");
  }

  SelectionEvents events;
  events.B = params.B;
  events.G = grid.size();
  events.p = p;
  events.m = params.m;
  events.events.assign(static_cast<std::size_t>(2 * params.B) *
                           static_cast<std::size_t>(grid.size()) *
                           static_cast<std::size_t>(p),
                       0);
  events.pairs.resize(static_cast<std::size_t>(params.B));

  parallel_for(static_cast<std::size_t>(params.B), params.threads, [&](std::size_t bi) {
    const int b = static_cast<int>(bi);
    RngSpec stream = rng.substream(100 + static_cast<std::uint64_t>(b));
    SubsamplePair pair;
    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      auto drawn =
          draw_subsample_pair(n, params.m, stream.substream(static_cast<std::uint64_t>(attempt)));
      pair.first = std::move(drawn.first);
      pair.second = std::move(drawn.second);
      if (z_for_retries == nullptr) {
        accepted = true;
      } else {
        accepted = has_both_arms(*z_for_retries, complement_of(pair.first, n)) &&
                   has_both_arms(*z_for_retries, complement_of(pair.second, n));
      }
    }
    if (!accepted) {
      throw std::runtime_error(
          "estimate_selection_probabilities: complement kept losing a treatment arm after 10 redraws");
    }
    for (int side = 0; side < 2; ++side) {
      const std::vector<int>& A = side == 0 ? pair.first : pair.second;
      const std::vector<int> Ac = complement_of(A, n);
      if (!disjoint_sorted(A, Ac) || A.size() + Ac.size() != static_cast<std::size_t>(n)) {
        throw std::logic_error("stabsel: training rows overlap selection rows");
      }
      Eigen::VectorXd response =
          provider(A, Ac, stream.substream(16 + static_cast<std::uint64_t>(side)));
      run_selector(selector, rows_subset(X, A), response, grid, params,
                   stream.substream(32 + static_cast<std::uint64_t>(side)), events,
                   2 * b + side);
    }
    events.pairs[bi] = std::move(pair);
  });

  return {curves_from_events(events, mode), std::move(events)};
}

}  // namespace

LambdaGrid build_lambda_grid(SelectorKind kind, const std::vector<PreviewFit>& previews,
                             int grid_size, const StabselParams& params) {
  if (previews.empty()) throw std::invalid_argument("build_lambda_grid: no preview fits");
  if (grid_size < 2) throw std::invalid_argument("build_lambda_grid: grid_size must be >= 2");
  double peak = 0.0;
  for (const auto& preview : previews) {
    peak = std::max(peak, preview_lambda_max(kind, preview, params));
  }
  if (peak <= 0.0) {
    throw std::invalid_argument("build_lambda_grid: all-zero preview response");
  }
  const double lambda_max = params.grid_headroom * peak;
  const double ratio =
      std::pow(params.lambda_min_ratio, 1.0 / static_cast<double>(grid_size - 1));
  LambdaGrid grid;
  grid.selector_kind = kind;
  grid.values.resize(grid_size);
  for (int g = 0; g < grid_size; ++g) grid.values[g] = lambda_max * std::pow(ratio, g);
  grid.validate();
  return grid;
}

std::pair<ProbabilityCurves, SelectionEvents> estimate_selection_probabilities(
    const Dataset& data, SelectorKind selector, const CateSpec& cate,
    const LambdaGrid& grid, const StabselParams& params, RngSpec rng) {
  data.validate();
  const bool needs_arms = !cate.fixed_tau;
  ResponseProvider provider = [&data, &cate](const std::vector<int>& A,
                                             const std::vector<int>& Ac, RngSpec fit_rng) {
    CateModel model = fit_cate(data.subset(Ac), cate, fit_rng);
    return predict_cate(model, rows_subset(data.X, A));
  };
  return estimate_impl(data.X, needs_arms ? &data.z : nullptr, provider, selector, grid,
                       params, rng, ProbabilityCurves::Mode::Crossfit);
}

std::pair<ProbabilityCurves, SelectionEvents> estimate_oracle_probabilities(
    const Eigen::MatrixXd& X, const Eigen::VectorXd& response, SelectorKind selector,
    const LambdaGrid& grid, const StabselParams& params, RngSpec rng) {
  if (X.rows() != response.size()) {
    throw std::invalid_argument("estimate_oracle_probabilities: dimension mismatch");
  }
  ResponseProvider provider = [&response](const std::vector<int>& A,
                                          const std::vector<int>&, RngSpec) {
    return rows_subset(response, A);
  };
  return estimate_impl(X, nullptr, provider, selector, grid, params, rng,
                       ProbabilityCurves::Mode::Oracle);
}

namespace {

std::vector<PreviewFit> make_previews(const Eigen::MatrixXd& X, const Eigen::VectorXi* z,
                                      const ResponseProvider& provider,
                                      const StabselParams& params, RngSpec rng) {
  const int n = static_cast<int>(X.rows());
  std::vector<PreviewFit> previews;
  for (int i = 0; i < params.preview_fits; ++i) {
    RngSpec stream = rng.substream(static_cast<std::uint64_t>(i));
    SubsamplePair pair;
    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      auto drawn =
          draw_subsample_pair(n, params.m, stream.substream(static_cast<std::uint64_t>(attempt)));
      pair.first = std::move(drawn.first);
      pair.second = std::move(drawn.second);
      accepted = z == nullptr || (has_both_arms(*z, complement_of(pair.first, n)));
    }
    if (!accepted) {
      throw std::runtime_error("stabsel preview: complement kept losing a treatment arm");
    }
    const std::vector<int> Ac = complement_of(pair.first, n);
    PreviewFit preview;
    preview.x = rows_subset(X, pair.first);
    preview.response = provider(pair.first, Ac, stream.substream(16));
    previews.push_back(std::move(preview));
  }
  return previews;
}

}  // namespace

StabselResult run_causal_stabsel(const Dataset& data, SelectorKind selector,
                                 const CateSpec& cate, const StabselParams& params,
                                 RngSpec rng) {
  data.validate();
  StabselParams local = params;
  if (local.m <= 0) local.m = data.n() / 2;
  const bool needs_arms = !cate.fixed_tau;
  ResponseProvider provider = [&data, &cate](const std::vector<int>& A,
                                             const std::vector<int>& Ac, RngSpec fit_rng) {
    CateModel model = fit_cate(data.subset(Ac), cate, fit_rng);
    return predict_cate(model, rows_subset(data.X, A));
  };
  auto previews = make_previews(data.X, needs_arms ? &data.z : nullptr, provider, local,
                                rng.substream(1));
  StabselResult result;
  result.grid = build_lambda_grid(selector, previews, local.grid_size, local);
  auto pair = estimate_impl(data.X, needs_arms ? &data.z : nullptr, provider, selector,
                            result.grid, local, rng.substream(2),
                            ProbabilityCurves::Mode::Crossfit);
  result.curves = std::move(pair.first);
  result.events = std::move(pair.second);
  return result;
}

StabselResult run_oracle_stabsel(const Eigen::MatrixXd& X, const Eigen::VectorXd& response,
                                 SelectorKind selector, const StabselParams& params,
                                 RngSpec rng) {
  if (X.rows() != response.size()) {
    throw std::invalid_argument("run_oracle_stabsel: dimension mismatch");
  }
  StabselParams local = params;
  if (local.m <= 0) local.m = static_cast<int>(X.rows()) / 2;
  ResponseProvider provider = [&response](const std::vector<int>& A,
                                          const std::vector<int>&, RngSpec) {
    return rows_subset(response, A);
  };
  auto previews = make_previews(X, nullptr, provider, local, rng.substream(1));
  StabselResult result;
  result.grid = build_lambda_grid(selector, previews, local.grid_size, local);
  auto pair = estimate_impl(X, nullptr, provider, selector, result.grid, local,
                            rng.substream(2), ProbabilityCurves::Mode::Oracle);
  result.curves = std::move(pair.first);
  result.events = std::move(pair.second);
  return result;
}

ProbabilityCurves curves_from_events(const SelectionEvents& events,
                                     ProbabilityCurves::Mode mode) {
  ProbabilityCurves curves;
  curves.mode = mode;
  curves.pi_hat = Eigen::MatrixXd::Zero(events.p, events.G);
  for (int b = 0; b < 2 * events.B; ++b) {
    for (int g = 0; g < events.G; ++g) {
      for (int j = 0; j < events.p; ++j) {
        if (events.get(b, g, j)) curves.pi_hat(j, g) += 1.0;
      }
    }
  }
  curves.pi_hat /= static_cast<double>(2 * events.B);
  return curves;
}

void save_events(const std::string& path, const SelectionEvents& events) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_events: cannot open " + path);
  const char magic[4] = {'C', 'S', 'E', 'V'};
  out.write(magic, 4);
  const std::uint32_t header[4] = {
      static_cast<std::uint32_t>(events.B), static_cast<std::uint32_t>(events.G),
      static_cast<std::uint32_t>(events.p), static_cast<std::uint32_t>(events.m)};
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  const std::size_t total = events.events.size();
  std::vector<std::uint8_t> packed((total + 7) / 8, 0);
  for (std::size_t i = 0; i < total; ++i) {
    if (events.events[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  out.write(reinterpret_cast<const char*>(packed.data()),
            static_cast<std::streamsize>(packed.size()));
}

SelectionEvents load_events(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_events: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || magic[0] != 'C' || magic[1] != 'S' || magic[2] != 'E' || magic[3] != 'V') {
    throw std::runtime_error("load_events: bad magic");
  }
  std::uint32_t header[4];
  in.read(reinterpret_cast<char*>(header), sizeof(header));
  if (!in) throw std::runtime_error("load_events: truncated header");
  SelectionEvents events;
  events.B = static_cast<int>(header[0]);
  events.G = static_cast<int>(header[1]);
  events.p = static_cast<int>(header[2]);
  events.m = static_cast<int>(header[3]);
  const std::size_t total = static_cast<std::size_t>(2 * events.B) *
                            static_cast<std::size_t>(events.G) *
                            static_cast<std::size_t>(events.p);
  std::vector<std::uint8_t> packed((total + 7) / 8);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (!in) throw std::runtime_error("load_events: truncated payload");
  events.events.assign(total, 0);
  for (std::size_t i = 0; i < total; ++i) {
    events.events[i] = (packed[i / 8] >> (i % 8)) & 1u;
  }
  return events;
}

}  // namespace cstab
