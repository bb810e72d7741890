#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tslab/experiments.hpp"
#include "tslab/rng.hpp"

using namespace tslab;

namespace {

Vector vec1(double x) {
  Vector v(1);
  v(0) = x;
  return v;
}

SweepConfig scalar_lds_sweep() {
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::lds;
  cfg.process.binding = ProcessTemplate::Binding::a_scalar;
  cfg.process.H = Matrix::Identity(1, 1);
  cfg.family.kind = FamilyConfig::Kind::linear_ball;
  cfg.family.B = 2.0;
  cfg.T_grid = {64, 128, 256, 512};
  cfg.param_grid = {0.5};
  cfg.n_rep = 50;
  cfg.master_seed = 99;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

FiniteChainSpec uniform_chain(double noise_std) {
  Matrix P(2, 2);
  P << 0.5, 0.5, 0.5, 0.5;
  return FiniteChainSpec::make_stationary(P, {vec1(1.0), vec1(-1.0)},
                                          {vec1(1.0), vec1(-1.0)}, noise_std);
}

}  // namespace

TEST_CASE("risk_curve: scalar lds decays like 1/T") {
  SweepConfig cfg = scalar_lds_sweep();
  const ExperimentResult res = risk_curve(cfg);
  REQUIRE(res.rows.size() == cfg.T_grid.size() * 50);
  REQUIRE(res.aggregates.size() == cfg.T_grid.size());
  // Per-cell aggregate identity se = sd / sqrt(n).
  for (const auto& agg : res.aggregates) {
    double s = 0.0, s2 = 0.0;
    int n = 0;
    for (const auto& row : res.rows) {
      if (row.cell_id != agg.cell_id) continue;
      s += row.excess_risk;
      s2 += row.excess_risk * row.excess_risk;
      ++n;
      CHECK(std::isfinite(row.risk_se));
    }
    CHECK(n == agg.n);
    const double mean = s / n;
    const double sd = std::sqrt(std::max(0.0, (s2 - n * mean * mean) / (n - 1.0)));
    CHECK(agg.se_risk == doctest::Approx(sd / std::sqrt(static_cast<double>(n))));
  }
  // Coarse decay: risk at the largest T well below the smallest-T risk.
  const double first = res.aggregates.front().mean_risk;
  const double last = res.aggregates.back().mean_risk;
  CHECK(last < first * 0.3);
}

TEST_CASE("risk_curve: noiseless finite chain has zero risk") {
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::finite_chain;
  cfg.process.chain = uniform_chain(0.0);
  cfg.family.kind = FamilyConfig::Kind::finite_table;
  cfg.family.table.atoms = cfg.process.chain.atoms;
  cfg.family.table.functions = {{vec1(0.0), vec1(0.0)}, {vec1(1.0), vec1(-1.0)}};
  cfg.family.truth_index = 1;
  cfg.T_grid = {32, 64};
  cfg.param_grid = {0.0};
  cfg.n_rep = 8;
  cfg.master_seed = 4;
  const ExperimentResult res = risk_curve(cfg);
  for (const auto& row : res.rows) CHECK(row.excess_risk <= 1e-12);
}

TEST_CASE("risk_curve: quadrupling n_rep halves the aggregate standard error") {
  SweepConfig cfg = scalar_lds_sweep();
  cfg.T_grid = {128};
  cfg.n_rep = 100;
  const double se1 = risk_curve(cfg).aggregates.front().se_risk;
  cfg.n_rep = 400;
  const double se2 = risk_curve(cfg).aggregates.front().se_risk;
  CHECK(se2 / se1 == doctest::Approx(0.5).epsilon(0.45));
}

TEST_CASE("reproducibility: identical CSV bytes across thread counts") {
  SweepConfig cfg = scalar_lds_sweep();
  cfg.T_grid = {64, 128};
  cfg.n_rep = 16;
  cfg.out_csv = "/tmp/tslab_repr_a.csv";
  cfg.threads = 1;
  risk_curve(cfg);
  SweepConfig cfg2 = cfg;
  cfg2.out_csv = "/tmp/tslab_repr_b.csv";
  cfg2.threads = 2;
  risk_curve(cfg2);
  const std::string a = slurp("/tmp/tslab_repr_a.csv");
  const std::string b = slurp("/tmp/tslab_repr_b.csv");
  REQUIRE(!a.empty());
  CHECK(a == b);
  CHECK(slurp("/tmp/tslab_repr_a.csv.agg.csv") == slurp("/tmp/tslab_repr_b.csv.agg.csv"));
  // Header contract.
  CHECK(a.rfind("cell_id,T,param,replicate,excess_risk,risk_se,m_t,fit_iters,"
                "projection_active,notes\n",
                0) == 0);
  std::remove("/tmp/tslab_repr_a.csv");
  std::remove("/tmp/tslab_repr_b.csv");
}

TEST_CASE("burn_in_detect on synthetic aggregates") {
  ExperimentResult res;
  for (std::size_t T : {16, 32, 64, 128, 256}) {
    CellAggregate a;
    a.cell_id = "synthetic";
    a.T = T;
    a.param = 0.0;
    a.mean_risk = 3.0 / static_cast<double>(T);
    res.aggregates.push_back(a);
  }
  const auto det = burn_in_detect(res, 0.05);
  REQUIRE(det.size() == 1);
  REQUIRE(det[0].T_star.has_value());
  CHECK(*det[0].T_star == 16);

  ExperimentResult flat;
  for (std::size_t T : {16, 32, 64, 128, 256}) {
    CellAggregate a;
    a.cell_id = "floor";
    a.T = T;
    a.param = 0.0;
    a.mean_risk = 3.0 / static_cast<double>(T) + 0.5;
    flat.aggregates.push_back(a);
  }
  const auto det2 = burn_in_detect(flat, 0.3);
  REQUIRE(det2.size() == 1);
  CHECK(!det2[0].T_star.has_value());

  ExperimentResult tiny;
  tiny.aggregates.assign(flat.aggregates.begin(), flat.aggregates.begin() + 3);
  CHECK_THROWS_AS(burn_in_detect(tiny, 0.3), std::invalid_argument);
}

TEST_CASE("mixing_sweep returns the invariance statistic") {
  SweepConfig cfg = scalar_lds_sweep();
  cfg.param_grid = {0.0, 0.5};
  cfg.T_grid = {128, 256, 512, 1024};
  cfg.n_rep = 200;
  const MixingSweepResult ms = mixing_sweep(cfg);
  CHECK(ms.T_used == 1024);
  REQUIRE(ms.t_times_risk.size() == 2);
  CHECK(ms.invariance_statistic >= 1.0);
  CHECK(ms.invariance_statistic < 3.0);
}

TEST_CASE("parameter recovery: conversion inequality and bound side") {
  SweepConfig cfg = scalar_lds_sweep();
  cfg.T_grid = {128, 256};
  cfg.n_rep = 20;
  const ExperimentResult res = parameter_recovery_curve(cfg);
  for (const auto& row : res.rows) {
    CHECK(row.notes.find("conversion_fail") == std::string::npos);
    CHECK(row.notes.find("param_err_sq=") != std::string::npos);
    CHECK(row.bound_side > 0.0);
    CHECK(std::isfinite(row.param_err_sq));
  }
}

TEST_CASE("parameter recovery on a small glm") {
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::glm;
  cfg.process.binding = ProcessTemplate::Binding::none;
  cfg.process.A_base = 0.5 * Matrix::Identity(1, 1);
  cfg.process.H = Matrix::Identity(1, 1);
  cfg.process.link = LinkFn::leaky_relu(0.5);
  cfg.process.P_star_diag = Vector::Ones(1);
  cfg.process.rho = 0.3;
  cfg.family.kind = FamilyConfig::Kind::glm_ball;
  cfg.family.B = 2.0;
  cfg.T_grid = {128, 256};
  cfg.param_grid = {0.0};
  cfg.n_rep = 10;
  cfg.n_eval = 100;
  cfg.master_seed = 12;
  const ExperimentResult res = parameter_recovery_curve(cfg);
  int conversion_fails = 0;
  for (const auto& row : res.rows)
    conversion_fails += row.notes.find("conversion_fail") != std::string::npos;
  CHECK(conversion_fails == 0);
}

TEST_CASE("bound_vs_actual on a two-member family never violates the bound") {
  SweepConfig cfg;
  cfg.process.kind = ProcessTemplate::Kind::finite_chain;
  cfg.process.chain = uniform_chain(0.25);
  cfg.family.kind = FamilyConfig::Kind::finite_table;
  cfg.family.table.atoms = cfg.process.chain.atoms;
  cfg.family.table.functions = {{vec1(1.0), vec1(-1.0)}, {vec1(0.5), vec1(-0.5)}};
  cfg.family.truth_index = 0;
  cfg.T_grid = {16, 64, 256};
  cfg.param_grid = {0.0};
  cfg.n_rep = 50;
  cfg.master_seed = 7;
  const auto rows = bound_vs_actual(cfg);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(row.ok);
    CHECK(row.actual <= row.rhs + 1e-12);
    CHECK(row.gamma_opnorm == doctest::Approx(1.0).epsilon(1e-9));  // iid chain
  }

  // Singleton family: actual risk 0 and a finite bound.
  SweepConfig single = cfg;
  single.family.table.functions = {{vec1(1.0), vec1(-1.0)}};
  single.family.truth_index = 0;
  const auto srows = bound_vs_actual(single);
  for (const auto& row : srows) {
    CHECK(row.actual == 0.0);
    CHECK(row.ok);
  }
}

TEST_CASE("realizability hook rejects out-of-ball truths") {
  SweepConfig cfg = scalar_lds_sweep();
  cfg.family.B = 0.25;  // ||A_star|| = 0.5 > B
  CHECK_THROWS_AS(risk_curve(cfg), std::invalid_argument);
}
