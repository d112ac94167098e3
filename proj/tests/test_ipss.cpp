#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "causalstab/ipss.hpp"
#include "causalstab/rng.hpp"

using namespace cstab;

TEST_CASE("f_transform: hand values, range check") {
  CHECK(f_transform(0.5) == 0.0);
  CHECK(f_transform(1.0) == doctest::Approx(1.0));
  CHECK(f_transform(0.75) == doctest::Approx(0.125));
  CHECK(f_transform(0.0) == 0.0);
  CHECK(f_transform(0.49) == 0.0);
  CHECK_THROWS_AS(f_transform(-0.01), std::invalid_argument);
  CHECK_THROWS_AS(f_transform(1.01), std::invalid_argument);
}

TEST_CASE("f_transform: convex and nondecreasing on random pairs") {
  Rng gen(RngSpec{31, 0});
  for (int i = 0; i < 10000; ++i) {
    double a = gen.uniform();
    double b = gen.uniform();
    if (a > b) std::swap(a, b);
    CHECK(f_transform(0.5 * (a + b)) <= 0.5 * (f_transform(a) + f_transform(b)) + 1e-15);
    CHECK(f_transform(a) <= f_transform(b) + 1e-15);
  }
}

TEST_CASE("measure_weights: uniform spacing and delta 0 gives trapezoid weights") {
  Eigen::VectorXd lambdas = Eigen::VectorXd::LinSpaced(5, 5.0, 1.0);  // decreasing
  MeasureWeights mw = measure_weights(lambdas, 0.0);
  for (int g = 0; g < 5; ++g) {
    // End cells carry half-width under the trapezoid rule.
    const double expect = (g == 0 || g == 4) ? 0.125 : 0.25;
    CHECK(mw.weights[g] == doctest::Approx(expect));
  }
  CHECK(mw.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("measure_weights: two-point hand normalization") {
  Eigen::VectorXd lambdas(2);
  lambdas << 2.0, 1.0;
  MeasureWeights mw = measure_weights(lambdas, 1.0);
  CHECK(mw.weights[0] == doctest::Approx(1.0 / 3.0));
  CHECK(mw.weights[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("measure_weights: always sums to one") {
  Rng gen(RngSpec{32, 0});
  for (int rep = 0; rep < 20; ++rep) {
    const int G = 2 + static_cast<int>(gen.below(30));
    Eigen::VectorXd lambdas(G);
    double v = 10.0 * (1.0 + gen.uniform());
    for (int g = 0; g < G; ++g) {
      lambdas[g] = v;
      v *= 0.5 + 0.4 * gen.uniform();
    }
    MeasureWeights mw = measure_weights(lambdas, 3.0 * gen.uniform());
    CHECK(mw.weights.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mw.weights.minCoeff() >= 0.0);
  }
}

TEST_CASE("integral_scores: saturation and vanishing cases") {
  Eigen::VectorXd lambdas = Eigen::VectorXd::LinSpaced(4, 4.0, 1.0);
  MeasureWeights mw = measure_weights(lambdas, 0.0);
  Eigen::MatrixXd pi(3, 4);
  pi.row(0).setOnes();
  pi.row(1).setConstant(0.5);
  pi.row(2) << 0.1, 0.2, 0.3, 0.49;
  Eigen::VectorXd scores = integral_scores(pi, mw);
  CHECK(scores[0] == doctest::Approx(1.0));
  CHECK(scores[1] == 0.0);
  CHECK(scores[2] == 0.0);
}

TEST_CASE("integral_scores: 0.75 on half the weight") {
  Eigen::VectorXd lambdas(2);
  lambdas << 2.0, 1.0;
  MeasureWeights mw = measure_weights(lambdas, 0.0);  // equal halves
  Eigen::MatrixXd pi(1, 2);
  pi << 0.75, 0.0;
  CHECK(integral_scores(pi, mw)[0] == doctest::Approx(0.0625));
}

TEST_CASE("qhat_curve: counting and hand mean") {
  SelectionEvents events;
  events.B = 2;
  events.G = 2;
  events.p = 4;
  events.m = 5;
  events.events.assign(2 * 2 * 2 * 4, 0);
  // At grid point 0 the four subsamples select {2,1,0,1} features.
  events.set(0, 0, 0, true);
  events.set(0, 0, 1, true);
  events.set(1, 0, 3, true);
  events.set(3, 0, 2, true);
  Eigen::VectorXd q = qhat_curve(events);
  CHECK(q[0] == doctest::Approx(1.0));
  CHECK(q[1] == 0.0);

  SelectionEvents all = events;
  std::fill(all.events.begin(), all.events.end(), 1);
  CHECK(qhat_curve(all)[0] == doctest::Approx(4.0));
  CHECK(qhat_curve(all)[1] == doctest::Approx(4.0));
}

TEST_CASE("efp_bound_constant: hand value at a single-point measure") {
  Eigen::VectorXd q(1);
  q << 1.0;
  MeasureWeights mw;
  mw.weights = Eigen::VectorXd::Ones(1);
  CHECK(efp_bound_constant(q, mw, 2, 10) == doctest::Approx(0.02575).epsilon(1e-12));

  q << 0.0;
  CHECK(efp_bound_constant(q, mw, 2, 10) == 0.0);
  CHECK_THROWS_AS(efp_bound_constant(q, mw, 1, 10), std::invalid_argument);
}

TEST_CASE("efp_bound_constant: monotone in q-hat") {
  Eigen::VectorXd lambdas = Eigen::VectorXd::LinSpaced(6, 3.0, 0.5);
  MeasureWeights mw = measure_weights(lambdas, 1.0);
  Rng gen(RngSpec{33, 0});
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::VectorXd qa(6), qb(6);
    for (int g = 0; g < 6; ++g) {
      qa[g] = 20.0 * gen.uniform();
      qb[g] = qa[g] + 5.0 * gen.uniform();
    }
    CHECK(efp_bound_constant(qa, mw, 10, 30) <= efp_bound_constant(qb, mw, 10, 30));
  }
}

TEST_CASE("efp_bound_constant: stable under grid refinement of piecewise-constant q") {
  // q(lambda) = 8 below 1.0, else 2; geometric grids at two resolutions.
  auto build = [](int G) {
    Eigen::VectorXd lambdas(G);
    const double ratio = std::pow(0.01, 1.0 / (G - 1));
    for (int g = 0; g < G; ++g) lambdas[g] = 5.0 * std::pow(ratio, g);
    Eigen::VectorXd q(G);
    for (int g = 0; g < G; ++g) q[g] = lambdas[g] > 1.0 ? 2.0 : 8.0;
    return std::make_pair(lambdas, q);
  };
  auto [l1, q1] = build(60);
  auto [l2, q2] = build(120);
  const double c1 = efp_bound_constant(q1, measure_weights(l1, 1.0), 20, 40);
  const double c2 = efp_bound_constant(q2, measure_weights(l2, 1.0), 20, 40);
  CHECK(std::abs(c1 - c2) <= 5.0 / 60.0 * std::max(c1, c2));
}

TEST_CASE("efp_scores: division, cap, and zero-score convention") {
  Eigen::VectorXd I(3);
  I << 0.5, 0.0, 1.0;
  Eigen::VectorXd efp = efp_scores(I, 0.05, 12);
  CHECK(efp[0] == doctest::Approx(0.1));
  CHECK(efp[1] == doctest::Approx(12.0));
  CHECK(efp[2] == doctest::Approx(0.05));

  I << 1.0, 0.5, 0.1;
  efp = efp_scores(I, 100.0, 12);  // cap kicks in everywhere
  for (int j = 0; j < 3; ++j) CHECK(efp[j] == doctest::Approx(12.0));
}

TEST_CASE("select_at_target: hand examples and monotonicity in t") {
  Eigen::VectorXd efp(3);
  efp << 0.1, 0.4, 5.0;
  CHECK(select_at_target(efp, 0.0).size() == 0);
  CHECK(select_at_target(efp, 5.0) == SelectionSet::of({0, 1, 2}));
  CHECK(select_at_target(efp, 0.4) == SelectionSet::of({0, 1}));

  Rng gen(RngSpec{34, 0});
  for (int rep = 0; rep < 100; ++rep) {
    Eigen::VectorXd v(8);
    for (int j = 0; j < 8; ++j) v[j] = 10.0 * gen.uniform();
    const double t1 = 10.0 * gen.uniform();
    const double t2 = t1 + 5.0 * gen.uniform();
    const SelectionSet small = select_at_target(v, t1);
    const SelectionSet large = select_at_target(v, t2);
    for (int j : small.indices) CHECK(large.contains(j));
  }
}

TEST_CASE("select_fdr: hand scan example") {
  Eigen::VectorXd efp(3);
  efp << 0.05, 0.2, 3.0;
  SelectionSet sel = select_fdr(efp, 0.1);
  CHECK(sel == SelectionSet::of({0, 1}));
  CHECK(select_fdr(efp, 0.0).size() == 0);

  Eigen::VectorXd all_capped = Eigen::VectorXd::Constant(4, 20.0);
  CHECK(select_fdr(all_capped, 0.1).size() == 0);  // 20/4 = 5 > 0.1
}

TEST_CASE("select_fdr: equals exhaustive threshold scan on random vectors") {
  Rng gen(RngSpec{35, 0});
  for (int rep = 0; rep < 200; ++rep) {
    const int p = 2 + static_cast<int>(gen.below(10));
    Eigen::VectorXd efp(p);
    for (int j = 0; j < p; ++j) {
      efp[j] = gen.below(4) == 0 ? static_cast<double>(p) : 2.0 * gen.uniform();
    }
    const double alpha = 0.5 * gen.uniform();

    // Oracle: scan a dense threshold set (observed values, midpoints, zero)
    // and keep the largest admissible selection.
    std::vector<double> candidates(efp.data(), efp.data() + p);
    std::sort(candidates.begin(), candidates.end());
    std::vector<double> dense = {0.0};
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      dense.push_back(candidates[i]);
      if (i + 1 < candidates.size()) dense.push_back(0.5 * (candidates[i] + candidates[i + 1]));
    }
    SelectionSet best;
    for (double t : dense) {
      std::vector<int> sel;
      for (int j = 0; j < p; ++j) {
        if (efp[j] <= t) sel.push_back(j);
      }
      if (!sel.empty() && t / static_cast<double>(sel.size()) <= alpha &&
          static_cast<int>(sel.size()) >= best.size()) {
        best = SelectionSet::of(sel);
      }
    }
    CHECK(select_fdr(efp, alpha) == best);
  }
}

TEST_CASE("ss_max_select: hand cases and brute force") {
  ProbabilityCurves curves;
  curves.pi_hat.resize(2, 3);
  curves.pi_hat << 0.2, 0.8, 0.5, 0.1, 0.3, 0.2;
  CHECK(ss_max_select(curves, 1.0).size() == 0);
  CHECK(ss_max_select(curves, 0.6) == SelectionSet::of({0}));

  CHECK_THROWS_AS(ss_max_select(curves, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(ss_max_select(curves, 1.01), std::invalid_argument);

  Rng gen(RngSpec{36, 0});
  for (int rep = 0; rep < 50; ++rep) {
    ProbabilityCurves random;
    random.pi_hat.resize(6, 5);
    for (int j = 0; j < 6; ++j) {
      for (int g = 0; g < 5; ++g) random.pi_hat(j, g) = gen.uniform();
    }
    const double gamma = std::min(0.5 + 0.5 * gen.uniform() + 1e-9, 1.0);
    std::vector<int> expect;
    for (int j = 0; j < 6; ++j) {
      double best = 0.0;
      for (int g = 0; g < 5; ++g) best = std::max(best, random.pi_hat(j, g));
      if (best >= gamma) expect.push_back(j);
    }
    CHECK(ss_max_select(random, gamma) == SelectionSet::of(expect));
  }
}

TEST_CASE("pipeline monotonicity: raising one pi entry never hurts any feature") {
  Rng gen(RngSpec{37, 0});
  Eigen::VectorXd lambdas = Eigen::VectorXd::LinSpaced(6, 2.0, 0.2);
  MeasureWeights mw = measure_weights(lambdas, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::MatrixXd pi(4, 6);
    for (int j = 0; j < 4; ++j) {
      for (int g = 0; g < 6; ++g) pi(j, g) = gen.uniform();
    }
    const Eigen::VectorXd base_scores = integral_scores(pi, mw);
    const double C = 0.08;
    const double t = 2.0 * gen.uniform();
    const SelectionSet before = select_at_target(efp_scores(base_scores, C, 4), t);

    Eigen::MatrixXd raised = pi;
    const int j = static_cast<int>(gen.below(4));
    const int g = static_cast<int>(gen.below(6));
    raised(j, g) = std::min(1.0, raised(j, g) + gen.uniform() * (1.0 - raised(j, g)));
    const Eigen::VectorXd raised_scores = integral_scores(raised, mw);
    for (int f = 0; f < 4; ++f) CHECK(raised_scores[f] >= base_scores[f] - 1e-15);
    const SelectionSet after = select_at_target(efp_scores(raised_scores, C, 4), t);
    for (int f : before.indices) CHECK(after.contains(f));
  }
}

TEST_CASE("ipss_report: truncation before the q-cap and efp bounds") {
  // Synthetic events: feature 0 selected almost everywhere; the rest switch
  // on as lambda shrinks, pushing q-hat over the cap in the tail.
  const int B = 4, G = 10, p = 6;
  SelectionEvents events;
  events.B = B;
  events.G = G;
  events.p = p;
  events.m = 10;
  events.events.assign(static_cast<std::size_t>(2 * B) * G * p, 0);
  for (int b = 0; b < 2 * B; ++b) {
    for (int g = 0; g < G; ++g) {
      events.set(b, g, 0, g > 0);
      for (int j = 1; j < p; ++j) events.set(b, g, j, g >= 4 + (j % 3));
    }
  }
  LambdaGrid grid;
  grid.selector_kind = SelectorKind::LassoPath;
  grid.values = Eigen::VectorXd::LinSpaced(G, 1.0, 0.1);
  ProbabilityCurves curves = curves_from_events(events, ProbabilityCurves::Mode::Oracle);
  IpssParams params;
  params.q_cap_fraction = 0.5;
  EfpReport report = ipss_report(curves, events, grid, params);

  CHECK(report.q_hat.size() == G);
  CHECK(report.q_hat[G - 1] == doctest::Approx(6.0));
  CHECK(report.efp[0] < report.efp[1]);
  for (int j = 0; j < p; ++j) {
    CHECK(report.efp[j] > 0.0);
    CHECK(report.efp[j] <= static_cast<double>(p));
  }
  // q-hat: 0,1,1,1,2,4,... so the first exceedance of p/2 = 3 is at g = 5
  // and integration keeps the first five grid points.
  CHECK(report.q_hat[4] == doctest::Approx(2.0));
  CHECK(report.q_hat[5] == doctest::Approx(4.0));
  Eigen::VectorXd kept = grid.values.head(5);
  MeasureWeights mw = measure_weights(kept, params.delta);
  const double expect_C = efp_bound_constant(report.q_hat.head(5), mw, B, p);
  CHECK(report.bound_constant == doctest::Approx(expect_C).epsilon(1e-12));
}
