#include "causalstab/cate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace cstab {

CateMethod parse_cate_method(const std::string& s) {
  if (s == "t" || s == "T") return CateMethod::T;
  if (s == "x" || s == "X") return CateMethod::X;
  if (s == "dr" || s == "DR") return CateMethod::DR;
  throw std::invalid_argument("unknown CATE method: " + s);
}

BaseLearner parse_base_learner(const std::string& s) {
  if (s == "ridge") return BaseLearner::Ridge;
  if (s == "gbt") return BaseLearner::Gbt;
  throw std::invalid_argument("unknown base learner: " + s);
}

std::vector<std::vector<int>> FoldAssignment::folds() const {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    out[static_cast<std::size_t>(fold_of[i])].push_back(static_cast<int>(i));
  }
  return out;
}

FoldAssignment kfold_split(int n, int k, RngSpec rng) {
  if (k < 2) throw std::invalid_argument("kfold_split: k must be >= 2");
  if (k > n) throw std::invalid_argument("kfold_split: k > n");
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng gen(rng);
  gen.shuffle(order);
  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    fa.fold_of[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i % k;
  }
  return fa;
}

RegressorFn fit_regressor(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                          BaseLearner base, const LearnerConfig& learners, RngSpec rng) {
  const int n = static_cast<int>(X.rows());
  if (base == BaseLearner::Ridge) {
    if (n < 2) throw std::invalid_argument("ridge nuisance fit needs at least 2 rows");
    const int k = std::min(learners.ridge_cv_folds, n);
    LinearModel model = ridge_cv(X, y, learners.ridge_penalties, std::max(k, 2), rng);
    return [model](const Eigen::MatrixXd& Xq) { return model.predict(Xq); };
  }
  if (n < learners.gbt.min_leaf) {
    throw std::invalid_argument("gbt nuisance fit needs at least min_leaf rows");
  }
  TreeEnsemble model = gbt_fit(X, y, learners.gbt, rng);
  return [model](const Eigen::MatrixXd& Xq) { return model.predict(Xq); };
}

namespace {

std::pair<std::vector<int>, std::vector<int>> split_by_arm(const Eigen::VectorXi& z) {
  std::vector<int> control, treated;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    (z[i] == 1 ? treated : control).push_back(static_cast<int>(i));
  }
  return {control, treated};
}

}  // namespace

NuisanceModels fit_nuisances(const Dataset& data, BaseLearner base,
                             const PropensitySpec& propensity, ClipRange clip,
                             RngSpec rng, const LearnerConfig& learners) {
  if (!(clip.low > 0.0 && clip.high < 1.0 && clip.low < clip.high)) {
    throw std::invalid_argument("fit_nuisances: clip range must satisfy 0 < low < high < 1");
  }
  auto [control, treated] = split_by_arm(data.z);
  if (control.empty() || treated.empty()) {
    throw std::invalid_argument("fit_nuisances: both treatment arms must be nonempty");
  }
  NuisanceModels out;
  out.clip = clip;
  out.m0 = fit_regressor(rows_subset(data.X, control), rows_subset(data.y, control), base,
                         learners, rng.substream(0));
  out.m1 = fit_regressor(rows_subset(data.X, treated), rows_subset(data.y, treated), base,
                         learners, rng.substream(1));
  if (propensity.known) {
    const double e0 = std::clamp(propensity.value, clip.low, clip.high);
    out.e = [e0](const Eigen::MatrixXd& Xq) {
      return Eigen::VectorXd::Constant(Xq.rows(), e0).eval();
    };
  } else {
    LinearModel model = logistic_fit(data.X, data.z, learners.logistic_l2);
    out.e = [model, clip](const Eigen::MatrixXd& Xq) {
      Eigen::VectorXd prob = logistic_probability(model, Xq);
      return prob.cwiseMax(clip.low).cwiseMin(clip.high).eval();
    };
  }
  return out;
}

Eigen::VectorXd dr_pseudo_outcomes(const Dataset& data, const NuisanceModels& nuisances) {
  const Eigen::VectorXd e = nuisances.e(data.X);
  const Eigen::VectorXd mu0 = nuisances.m0(data.X);
  const Eigen::VectorXd mu1 = nuisances.m1(data.X);
  if (!e.allFinite() || !mu0.allFinite() || !mu1.allFinite()) {
    throw std::runtime_error("dr_pseudo_outcomes: non-finite nuisance prediction");
  }
  Eigen::VectorXd phi(data.n());
  for (int i = 0; i < data.n(); ++i) {
    const double zi = static_cast<double>(data.z[i]);
    const double fitted = data.z[i] == 1 ? mu1[i] : mu0[i];
    phi[i] = (zi - e[i]) / (e[i] * (1.0 - e[i])) * (data.y[i] - fitted) + mu1[i] - mu0[i];
  }
  return phi;
}

CateModel fit_cate(const Dataset& train, const CateSpec& spec, RngSpec rng) {
  CateModel model;
  model.method = spec.method;
  model.base = spec.base;
  model.n_features = train.p();

  if (spec.fixed_tau) {
    model.tau = spec.fixed_tau;
    return model;
  }

  switch (spec.method) {
    case CateMethod::T: {
      NuisanceModels nui =
          fit_nuisances(train, spec.base, spec.propensity, spec.clip, rng.substream(0),
                        spec.learners);
      model.tau = [nui](const Eigen::MatrixXd& Xq) {
        return Eigen::VectorXd(nui.m1(Xq) - nui.m0(Xq));
      };
      break;
    }
    case CateMethod::X: {
      NuisanceModels nui =
          fit_nuisances(train, spec.base, spec.propensity, spec.clip, rng.substream(0),
                        spec.learners);
      auto [control, treated] = split_by_arm(train.z);
      const Eigen::MatrixXd Xt = rows_subset(train.X, treated);
      const Eigen::MatrixXd Xc = rows_subset(train.X, control);
      // Imputed individual effects per arm.
      const Eigen::VectorXd d1 = rows_subset(train.y, treated) - nui.m0(Xt);
      const Eigen::VectorXd d0 = nui.m1(Xc) - rows_subset(train.y, control);
      RegressorFn tau1 = fit_regressor(Xt, d1, spec.base, spec.learners, rng.substream(1));
      RegressorFn tau0 = fit_regressor(Xc, d0, spec.base, spec.learners, rng.substream(2));
      RegressorFn e = nui.e;
      model.tau = [tau0, tau1, e](const Eigen::MatrixXd& Xq) {
        const Eigen::VectorXd w = e(Xq);
        return Eigen::VectorXd(w.cwiseProduct(tau0(Xq)) +
                               (1.0 - w.array()).matrix().cwiseProduct(tau1(Xq)));
      };
      break;
    }
    case CateMethod::DR: {
      const int k = spec.dr_folds;
      if (k < 2) throw std::invalid_argument("fit_cate: dr_folds must be >= 2");
      FoldAssignment folds = kfold_split(train.n(), k, rng.substream(0));
      Eigen::VectorXd phi(train.n());
      const auto fold_rows = folds.folds();
      for (int f = 0; f < k; ++f) {
        std::vector<int> held_out = fold_rows[static_cast<std::size_t>(f)];
        std::vector<int> fit_rows;
        for (int i = 0; i < train.n(); ++i) {
          if (folds.fold_of[static_cast<std::size_t>(i)] != f) fit_rows.push_back(i);
        }
        NuisanceModels nui =
            fit_nuisances(train.subset(fit_rows), spec.base, spec.propensity, spec.clip,
                          rng.substream(1 + static_cast<std::uint64_t>(f)), spec.learners);
        const Eigen::VectorXd fold_phi = dr_pseudo_outcomes(train.subset(held_out), nui);
        for (std::size_t i = 0; i < held_out.size(); ++i) {
          phi[held_out[i]] = fold_phi[static_cast<Eigen::Index>(i)];
        }
      }
      if (spec.winsorize_pseudo) phi = winsorize(phi);
      RegressorFn stage2 =
          fit_regressor(train.X, phi, spec.base, spec.learners, rng.substream(100));
      model.tau = stage2;
      break;
    }
  }
  return model;
}

Eigen::VectorXd predict_cate(const CateModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.n_features && model.n_features != 0) {
    throw std::invalid_argument("predict_cate: feature count mismatch");
  }
  if (X.rows() == 0) return Eigen::VectorXd(0);
  Eigen::VectorXd out = model.tau(X);
  if (!out.allFinite()) throw std::runtime_error("predict_cate: non-finite prediction");
  return out;
}

Eigen::VectorXd winsorize(const Eigen::VectorXd& v, double lo, double hi) {
  if (v.size() == 0) return v;
  std::vector<double> sorted(v.data(), v.data() + v.size());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo_idx = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi_idx = std::min(lo_idx + 1, sorted.size() - 1);
    const double frac = pos - std::floor(pos);
    return (1.0 - frac) * sorted[lo_idx] + frac * sorted[hi_idx];
  };
  const double lo_v = quantile(lo);
  const double hi_v = quantile(hi);
  return v.cwiseMax(lo_v).cwiseMin(hi_v);
}

}  // namespace cstab
