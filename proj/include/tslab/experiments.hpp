#ifndef TSLAB_EXPERIMENTS_HPP
#define TSLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tslab/diagnostics.hpp"
#include "tslab/estimators.hpp"
#include "tslab/hypotheses.hpp"
#include "tslab/processes.hpp"

namespace tslab {

// A process with one named free parameter bound per sweep cell.
struct ProcessTemplate {
  enum class Kind { lds, glm, finite_chain };
  // none: A_base used as-is; a_scalar: A = [param] (1x1); a_scale: A = param * A_base.
  enum class Binding { none, a_scalar, a_scale };
  Kind kind = Kind::lds;
  Binding binding = Binding::none;
  Matrix A_base;
  Matrix H;
  LinkFn link;                       // glm
  Vector P_star_diag;                // glm
  double rho = 0.5;                  // glm Lyapunov rate (binding may override)
  std::optional<double> trunc_radius;
  FiniteChainSpec chain;             // finite_chain

  ProcessSpec instantiate(double param) const;
};

struct FamilyConfig {
  enum class Kind { linear_ball, glm_ball, finite_table };
  Kind kind = Kind::linear_ball;
  double B = 1.0;        // ball families
  FiniteTable table;     // finite_table
  int truth_index = 0;   // finite_table
};

struct SweepConfig {
  ProcessTemplate process;
  FamilyConfig family;
  std::vector<std::size_t> T_grid;
  std::vector<double> param_grid;
  int n_rep = 2;
  int n_eval = 200;
  std::uint64_t master_seed = 0;
  OptimizerOpts opt;
  int threads = 0;
  bool record_m_t = true;
  std::string out_csv;  // empty: no files written
};

struct ResultRow {
  std::string cell_id;
  std::size_t T = 0;
  double param = 0.0;
  int replicate = 0;
  double excess_risk = 0.0;
  double risk_se = 0.0;
  double m_t = 0.0;
  int fit_iters = 0;
  bool projection_active = false;
  std::string notes;
  // parameter-recovery extras (also encoded into notes for CSV)
  double param_err_sq = 0.0;
  double bound_side = 0.0;
};

struct CellAggregate {
  std::string cell_id;
  std::size_t T = 0;
  double param = 0.0;
  double mean_risk = 0.0;
  double se_risk = 0.0;
  double mean_m_t = 0.0;
  int n = 0;
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  std::vector<CellAggregate> aggregates;
};

// Simulate / fit / evaluate over the (param, T) grid; excess risk through the
// exact path where the process admits one, fresh-trajectory MC otherwise.
ExperimentResult risk_curve(const SweepConfig& cfg);

struct MixingSweepResult {
  ExperimentResult result;
  std::map<double, double> t_times_risk;  // param -> T * mean risk at largest T
  double invariance_statistic = 0.0;
  std::size_t T_used = 0;
};

MixingSweepResult mixing_sweep(const SweepConfig& cfg);

struct BurnInDetection {
  double param = 0.0;
  std::optional<std::size_t> T_star;  // empty: band never entered permanently
};

// Smallest grid T after which every successive log-log slope of the aggregate
// risk stays within -1 +/- slope_tol.
std::vector<BurnInDetection> burn_in_detect(const ExperimentResult& result,
                                            double slope_tol);

// Linear/GLM sweep recording ||Ahat - A_star||_F^2 and the bound-side quantity
// ||H||^2 dx^2 / (T lambda_min(avg gramian) zeta^2); flags replicates violating
// the risk >= zeta^2 lambda_min ||Delta||_F^2 conversion beyond MC tolerance.
ExperimentResult parameter_recovery_curve(const SweepConfig& cfg);

struct BoundVsActualRow {
  std::size_t T = 0;
  double actual = 0.0;
  double actual_se = 0.0;
  double rhs = 0.0;
  double em_t = 0.0;
  double r = 0.0;
  double C = 0.0;
  double gamma_opnorm = 0.0;
  double log_card = 0.0;
  bool ok = false;
};

// Finite-family finite-chain comparison of realized mean risk against the
// assembled risk bound with exact C, exact dependency norm, and MC E M_T.
std::vector<BoundVsActualRow> bound_vs_actual(const SweepConfig& cfg);

// CSV schema: cell_id,T,param,replicate,excess_risk,risk_se,m_t,fit_iters,
// projection_active,notes. Aggregates to <path>.agg.csv, seed ledger to
// <path>.seeds.json. Byte-identical output for identical configs.
void write_result_csv(const ExperimentResult& result, const std::string& path,
                      std::uint64_t master_seed);

// Per-replicate stream index: (cell_ordinal << 32) | replicate.
std::uint64_t replicate_seed(std::uint64_t master_seed, std::size_t cell_ordinal,
                             int replicate);

}  // namespace tslab

#endif  // TSLAB_EXPERIMENTS_HPP
