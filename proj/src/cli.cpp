#include "tslab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <stdexcept>

#include "tslab/diagnostics.hpp"
#include "tslab/experiments.hpp"
#include "tslab/rng.hpp"
#include "tslab/serialization.hpp"

namespace tslab {

namespace {

namespace fs = std::filesystem;

struct RunContext {
  Json config;
  fs::path out_dir;
  std::uint64_t master_seed = 0;
  int threads = 0;
  std::vector<std::string> outputs;

  fs::path out(const std::string& name) {
    outputs.push_back(name);
    return out_dir / name;
  }
};

void write_manifest(RunContext& ctx, const std::string& command) {
  Json manifest{{"version", kVersion},
                {"command", command},
                {"config", ctx.config},
                {"master_seed", ctx.master_seed},
                {"seed_rule", kSeedRuleVersion},
                {"outputs", ctx.outputs}};
  std::ofstream f(ctx.out_dir / "manifest.json", std::ios::binary);
  f << manifest.dump(2) << '\n';
}

OptimizerOpts optimizer_from_json(const Json& j) {
  OptimizerOpts opt;
  if (!j.is_object()) return opt;
  opt.restarts = j.value("restarts", opt.restarts);
  opt.max_iters = j.value("max_iters", opt.max_iters);
  opt.grad_tol = j.value("grad_tol", opt.grad_tol);
  opt.armijo_c = j.value("armijo_c", opt.armijo_c);
  opt.backtrack = j.value("backtrack", opt.backtrack);
  opt.init_step = j.value("init_step", opt.init_step);
  return opt;
}

std::vector<std::vector<Vector>> tables_from_json(const Json& j) {
  std::vector<std::vector<Vector>> out;
  for (const auto& f : j) {
    std::vector<Vector> fn;
    for (const auto& v : f) fn.push_back(vector_from_json(v));
    out.push_back(std::move(fn));
  }
  return out;
}

void run_simulate(RunContext& ctx) {
  const ProcessSpec proc = process_from_json(ctx.config.at("process"));
  const std::size_t T = ctx.config.at("T").get<std::size_t>();
  const std::uint64_t seed = ctx.config.value("seed", ctx.master_seed);
  const TrajectoryBatch batch = simulate(proc, T, seed);
  write_trajectory_csv(batch, ctx.out("trajectory.csv").string());
  Json info{{"T", T},
            {"seed", seed},
            {"truncated_flag", batch.truncated_flag}};
  std::ofstream f(ctx.out("simulate.json"));
  f << info.dump(2) << '\n';
}

void run_fit(RunContext& ctx) {
  const ProcessSpec proc = process_from_json(ctx.config.at("process"));
  const std::size_t T = ctx.config.at("T").get<std::size_t>();
  const std::uint64_t seed = ctx.config.value("seed", ctx.master_seed);
  const TrajectoryBatch batch = simulate(proc, T, seed);
  const Json& famj = ctx.config.at("family");
  const std::string kind = famj.at("family").get<std::string>();

  FitResult fit;
  HypothesisSpec family = family_from_json(famj);
  Member f_star;
  if (kind == "linear_ball") {
    fit = lse_linear(batch, famj.at("B").get<double>());
    f_star = LinearMember{std::get<LdsSpec>(proc).A_star};
  } else if (kind == "glm_ball") {
    OptimizerOpts opt = optimizer_from_json(ctx.config.value("optimizer", Json::object()));
    opt.seed = derive_stream(ctx.master_seed, 1);
    const auto& glm = std::get<GlmSpec>(proc);
    fit = erm_glm(batch, famj.at("B").get<double>(), glm.link, opt);
    f_star = GlmMember{glm.A_star};
  } else if (kind == "finite_table") {
    const auto& tab = std::get<FiniteTable>(family);
    fit = erm_finite(batch, tab);
    f_star = TableMember{famj.value("truth_index", 0)};
  } else {
    throw std::invalid_argument("fit: unsupported family kind " + kind);
  }

  Json out{{"parameter", member_to_json(fit.parameter)},
           {"empirical_risk", fit.empirical_risk},
           {"projection_active", fit.projection_active},
           {"optimizer_trace",
            Json{{"iterations", fit.trace.iterations},
                 {"final_grad_norm", fit.trace.final_grad_norm},
                 {"restarts_used", fit.trace.restarts_used}}}};
  try {
    const RiskEstimate risk = excess_risk_exact(family, fit.parameter, f_star, proc, T);
    out["excess_risk"] = Json{{"value", risk.value}, {"std_error", 0.0}, {"method",
        risk.method == RiskMethod::exact_gramian ? "exact_gramian" : "exact_marginal"}};
  } catch (const std::invalid_argument&) {
    const RiskEstimate risk = excess_risk_mc(family, fit.parameter, f_star, proc, T,
                                             ctx.config.value("n_eval", 200),
                                             derive_stream(ctx.master_seed, 2));
    out["excess_risk"] =
        Json{{"value", risk.value}, {"std_error", risk.std_error}, {"method", "monte_carlo"}};
  }
  std::ofstream f(ctx.out("fit.json"));
  f << out.dump(2) << '\n';
}

void run_diagnose(RunContext& ctx) {
  const std::string check = ctx.config.at("check").get<std::string>();
  Json report{{"check", check}};

  if (check == "dependency_matrix") {
    const auto proc = process_from_json(ctx.config.at("process"));
    const auto& chain = std::get<FiniteChainSpec>(proc);
    const std::size_t T = ctx.config.at("T").get<std::size_t>();
    const DependencyMatrix G = dependency_matrix_finite(chain, T);
    write_dependency_csv(G.gamma, ctx.out("dependency_matrix.csv").string());
    report["opnorm"] = dependency_opnorm(G);
    report["T"] = T;
  } else if (check == "samson") {
    const auto proc = process_from_json(ctx.config.at("process"));
    const auto& chain = std::get<FiniteChainSpec>(proc);
    const auto rows = samson_check(chain, ctx.config.at("g").get<std::vector<double>>(),
                                   ctx.config.at("T").get<std::size_t>(),
                                   ctx.config.at("lambdas").get<std::vector<double>>(),
                                   ctx.config.value("n_mc", 100000),
                                   derive_stream(ctx.master_seed, 3), ctx.threads);
    Json rj = Json::array();
    bool any_violation = false;
    for (const auto& r : rows) {
      any_violation |= r.violation;
      rj.push_back(Json{{"lambda", r.lambda},
                        {"lhs", r.lhs},
                        {"lhs_se", r.lhs_se},
                        {"rhs", r.rhs},
                        {"violation", r.violation}});
    }
    report["rows"] = std::move(rj);
    report["any_violation"] = any_violation;
  } else if (check == "lower_isometry") {
    const auto proc = process_from_json(ctx.config.at("process"));
    const auto& chain = std::get<FiniteChainSpec>(proc);
    const auto rep = lower_isometry_check(
        chain, tables_from_json(ctx.config.at("net")), ctx.config.at("r").get<double>(),
        ctx.config.value("alpha", 2.0), ctx.config.at("C").get<double>(),
        ctx.config.at("T").get<std::size_t>(), ctx.config.value("n_mc", 10000),
        derive_stream(ctx.master_seed, 4), ctx.threads);
    report["empirical_prob"] = rep.empirical_prob;
    report["se"] = rep.se;
    report["bound"] = rep.bound;
    report["vacuous"] = rep.vacuous;
  } else if (check == "truncated_noise") {
    const auto rep = truncated_noise_diag(
        ctx.config.at("d").get<int>(), ctx.config.at("R").get<double>(),
        ctx.config.value("n_mc", 1000000), derive_stream(ctx.master_seed, 5), ctx.threads);
    report["mean_max_abs"] = rep.mean_max_abs;
    report["mean_se"] = rep.mean_se;
    report["cov_eig_min"] = rep.cov_eig_min;
    report["cov_eig_max"] = rep.cov_eig_max;
    report["cov_entry_se"] = rep.cov_entry_se;
    report["mgf_max_ratio"] = rep.mgf_max_ratio;
    report["mgf_ratio_se"] = rep.mgf_ratio_se;
    report["quad_trunc_mean"] = rep.quad_trunc_mean;
    report["quad_full_mean"] = rep.quad_full_mean;
    report["quad_tr_bound"] = rep.quad_tr_bound;
    report["trunc_fraction"] = rep.trunc_fraction;
    if (rep.d == 1) report["second_moment_1d_analytic"] = rep.second_moment_1d_analytic;
  } else if (check == "hyper") {
    const auto proc = process_from_json(ctx.config.at("process"));
    const double scale = ctx.config.value("member_scale", 1.0);
    const int dy = process_dy(proc);
    FamilySampler sampler;
    if (const auto* chain = std::get_if<FiniteChainSpec>(&proc)) {
      const auto atoms = chain->atoms;
      sampler = [atoms, dy, scale](int, std::uint64_t seed) -> VectorFn {
        SplitMix64 g(seed);
        std::vector<Vector> values;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
          Vector v(dy);
          for (int i = 0; i < dy; ++i) v(i) = scale * (2.0 * uniform01(g) - 1.0);
          values.push_back(std::move(v));
        }
        const auto atoms_copy = atoms;
        return [values, atoms_copy](const Vector& x) -> Vector {
          return values[static_cast<std::size_t>(atom_index(atoms_copy, x))];
        };
      };
    } else {
      const int dx = process_dx(proc);
      sampler = [dx, dy, scale](int, std::uint64_t seed) -> VectorFn {
        SplitMix64 g(seed);
        Matrix A(dy, dx);
        for (int i = 0; i < dy; ++i)
          for (int j = 0; j < dx; ++j) A(i, j) = scale * standard_normal(g);
        return [A](const Vector& x) -> Vector { return A * x; };
      };
    }
    const auto est = hyper_estimate(
        proc, sampler, ctx.config.at("T").get<std::size_t>(), ctx.config.value("n_mc", 200),
        ctx.config.value("n_funcs", 32), ctx.config.value("alpha", 2.0),
        derive_stream(ctx.master_seed, 6), ctx.threads);
    report["C_hat"] = est.C_hat;
    report["alpha_fit"] = est.alpha_fit;
    report["n_mc"] = est.n_mc;
    report["n_funcs"] = est.n_funcs;
    report["family_descriptor"] = est.family_descriptor;
  } else if (check == "stationary_transfer") {
    const auto proc = process_from_json(ctx.config.at("process"));
    const auto& chain = std::get<FiniteChainSpec>(proc);
    const auto rep = stationary_transfer_check(
        chain, tables_from_json(ctx.config.at("family_sample")),
        ctx.config.at("r").get<double>(), ctx.config.at("T").get<std::size_t>(),
        ctx.config.value("eps_moment", 1.0));
    report["C_chisq"] = rep.C_chisq;
    report["C_tv"] = rep.C_tv;
    report["C_8to2"] = rep.C_8to2;
    report["B"] = rep.B;
    report["C_transferred"] = rep.C_transferred;
    report["C_direct"] = rep.C_direct;
    report["direct_le_transferred"] = rep.direct_le_transferred;
    report["momeq_ok"] = rep.momeq_ok;
  } else if (check == "burn_in") {
    const std::string kind = ctx.config.at("kind").get<std::string>();
    BurnInResult r;
    const Json& p = ctx.config.at("params");
    if (kind == "nonparametric")
      r = burn_in_nonparametric(p.at("p").get<double>(), p.at("q").get<double>(),
                                p.at("gamma").get<double>(), p.at("C").get<double>(),
                                p.at("gamma_dep_sq").get<double>(), p.at("B").get<double>());
    else if (kind == "parametric")
      r = burn_in_parametric(p.at("p").get<double>(), p.at("q").get<double>(),
                             p.at("b1").get<double>(), p.at("b2").get<double>(),
                             p.at("gamma").get<double>(), p.at("alpha").get<double>(),
                             p.at("B").get<double>());
    else if (kind == "lds")
      r = burn_in_lds(p.at("tau").get<double>(), p.at("rho").get<double>(),
                      p.at("kappa").get<int>(), p.at("H_opnorm").get<double>(),
                      p.at("dx").get<int>(), p.at("mu").get<double>());
    else if (kind == "glm")
      r = burn_in_glm(p.at("P_opnorm").get<double>(), p.at("cond_H").get<double>(),
                      p.at("dx").get<int>(), p.at("zeta").get<double>(),
                      p.at("rho").get<double>());
    else if (kind == "alpha1")
      r = burn_in_alpha1(p.at("B").get<double>(), p.at("p").get<double>(),
                         p.at("q").get<double>(), p.at("gamma_dep_sq").get<double>());
    else
      throw std::invalid_argument("unknown burn_in kind: " + kind);
    report["value"] = r.value;
    report["label"] = r.label;
    report["terms"] = r.terms;
  } else if (check == "chaining") {
    const Json& p = ctx.config.at("params");
    const double pp = p.at("p").get<double>();
    const double q = p.at("q").get<double>();
    ChainingOpts opts;
    opts.gamma_max = p.value("gamma_max", 1.0);
    opts.grid = p.value("grid", 64);
    const double value = chaining_bound(
        [pp, q](double eps) { return pp * std::pow(eps, -q); },
        p.at("sigma_w").get<double>(), p.at("T").get<std::size_t>(),
        p.at("d_y").get<int>(), opts);
    report["value"] = value;
  } else if (check == "main_bound") {
    const Json& p = ctx.config.at("params");
    const BoundReport r = main_bound(
        p.at("em_t").get<double>(), p.at("r").get<double>(), p.at("B").get<double>(),
        p.at("log_card").get<double>(), p.at("C").get<double>(),
        p.at("alpha").get<double>(), p.at("gamma_opnorm").get<double>(),
        p.at("T").get<std::size_t>());
    report["em_t"] = r.em_t;
    report["r"] = r.r;
    report["union_term"] = r.union_term;
    report["total"] = r.total;
    report["log_union"] = r.log_union;
  } else if (check == "ellipsoid") {
    const Json& p = ctx.config.at("params");
    const int m = ellipsoid_m_eps(p.at("beta").get<double>(), p.at("B").get<double>(),
                                  p.at("q").get<double>(), p.at("epsilon").get<double>());
    report["m_eps"] = m;
    report["C_eps"] = ellipsoid_hyper_constant(m, p.value("K", 1.0), p.at("B").get<double>(),
                                               p.at("q").get<double>());
    Ellipsoid ell = make_ellipsoid(p.at("beta").get<double>(), p.at("B").get<double>(),
                                   p.at("q").get<double>(), {}, cosine_basis());
    const CoverCertificate cert = ellipsoid_cover(ell, p.at("epsilon").get<double>());
    report["log_cardinality"] = cert.log_cardinality;
    report["realized"] = cert.elements.size();
    report["elements_omitted"] = cert.elements_omitted;
    if (ctx.config.value("export_cover", false))
      write_cover_csv(cert, ctx.out("cover.csv").string());
  } else {
    throw std::invalid_argument("unknown diagnose check: " + check);
  }

  std::ofstream f(ctx.out("diagnose.json"));
  f << report.dump(2) << '\n';
}

ProcessTemplate template_from_json(const Json& j) {
  ProcessTemplate tpl;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lds")
    tpl.kind = ProcessTemplate::Kind::lds;
  else if (kind == "glm")
    tpl.kind = ProcessTemplate::Kind::glm;
  else if (kind == "finite_chain")
    tpl.kind = ProcessTemplate::Kind::finite_chain;
  else
    throw std::invalid_argument("unknown process template kind: " + kind);
  const std::string binding = j.value("binding", std::string("none"));
  if (binding == "none")
    tpl.binding = ProcessTemplate::Binding::none;
  else if (binding == "a_scalar")
    tpl.binding = ProcessTemplate::Binding::a_scalar;
  else if (binding == "a_scale")
    tpl.binding = ProcessTemplate::Binding::a_scale;
  else
    throw std::invalid_argument("unknown binding: " + binding);
  if (tpl.kind == ProcessTemplate::Kind::finite_chain) {
    tpl.chain = std::get<FiniteChainSpec>(process_from_json(j.at("chain")));
    return tpl;
  }
  if (j.contains("A_base")) tpl.A_base = matrix_from_json(j.at("A_base"));
  tpl.H = matrix_from_json(j.at("H"));
  if (j.contains("trunc_radius")) tpl.trunc_radius = j.at("trunc_radius").get<double>();
  if (tpl.kind == ProcessTemplate::Kind::glm) {
    tpl.link = link_from_json(j.at("link"));
    tpl.P_star_diag = vector_from_json(j.at("P_star"));
    tpl.rho = j.at("rho").get<double>();
  }
  return tpl;
}

FamilyConfig family_config_from_json(const Json& j) {
  FamilyConfig fam;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear_ball") {
    fam.kind = FamilyConfig::Kind::linear_ball;
    fam.B = j.at("B").get<double>();
  } else if (kind == "glm_ball") {
    fam.kind = FamilyConfig::Kind::glm_ball;
    fam.B = j.at("B").get<double>();
  } else if (kind == "finite_table") {
    fam.kind = FamilyConfig::Kind::finite_table;
    fam.table.functions = tables_from_json(j.at("functions"));
    fam.table.atoms.clear();
    for (const auto& a : j.at("atoms")) fam.table.atoms.push_back(vector_from_json(a));
    fam.truth_index = j.value("truth_index", 0);
  } else {
    throw std::invalid_argument("unknown family config kind: " + kind);
  }
  return fam;
}

void run_experiment(RunContext& ctx) {
  const std::string experiment = ctx.config.at("experiment").get<std::string>();
  SweepConfig cfg;
  cfg.process = template_from_json(ctx.config.at("process_template"));
  cfg.family = family_config_from_json(ctx.config.at("family"));
  cfg.T_grid = ctx.config.at("T_grid").get<std::vector<std::size_t>>();
  cfg.param_grid = ctx.config.at("param_grid").get<std::vector<double>>();
  cfg.n_rep = ctx.config.value("n_rep", 2);
  cfg.n_eval = ctx.config.value("n_eval", 200);
  cfg.master_seed = ctx.master_seed;
  cfg.opt = optimizer_from_json(ctx.config.value("optimizer", Json::object()));
  cfg.threads = ctx.threads;
  cfg.record_m_t = ctx.config.value("record_m_t", true);
  const std::string out_name = ctx.config.value("out", std::string("results.csv"));
  cfg.out_csv = ctx.out(out_name).string();
  ctx.outputs.push_back(out_name + ".agg.csv");
  ctx.outputs.push_back(out_name + ".seeds.json");

  Json summary{{"experiment", experiment}};
  if (experiment == "risk_curve") {
    risk_curve(cfg);
  } else if (experiment == "mixing_sweep") {
    const MixingSweepResult ms = mixing_sweep(cfg);
    summary["invariance_statistic"] = ms.invariance_statistic;
    summary["T_used"] = ms.T_used;
    Json tr = Json::object();
    for (const auto& [param, v] : ms.t_times_risk) tr[std::to_string(param)] = v;
    summary["t_times_risk"] = std::move(tr);
    Json bd = Json::array();
    for (const auto& det : burn_in_detect(ms.result, ctx.config.value("slope_tol", 0.25))) {
      Json d{{"param", det.param}};
      if (det.T_star)
        d["T_star"] = *det.T_star;
      else
        d["T_star"] = "not reached";
      bd.push_back(std::move(d));
    }
    summary["burn_in"] = std::move(bd);
  } else if (experiment == "parameter_recovery") {
    parameter_recovery_curve(cfg);
  } else if (experiment == "bound_vs_actual") {
    const auto rows = bound_vs_actual(cfg);
    Json rj = Json::array();
    bool all_ok = true;
    for (const auto& r : rows) {
      all_ok &= r.ok;
      rj.push_back(Json{{"T", r.T},
                        {"actual", r.actual},
                        {"rhs", r.rhs},
                        {"em_t", r.em_t},
                        {"r", r.r},
                        {"C", r.C},
                        {"gamma_opnorm", r.gamma_opnorm},
                        {"ok", r.ok}});
    }
    summary["rows"] = std::move(rj);
    summary["all_ok"] = all_ok;
    if (!all_ok) throw std::runtime_error("bound_vs_actual: bound violated");
  } else {
    throw std::invalid_argument("unknown experiment: " + experiment);
  }
  std::ofstream f(ctx.out("experiment.json"));
  f << summary.dump(2) << '\n';
}

}  // namespace

int run(const RunConfig& rc) {
  try {
    if (rc.command != "simulate" && rc.command != "fit" && rc.command != "diagnose" &&
        rc.command != "experiment") {
      std::cerr << "usage: tslab {simulate|fit|diagnose|experiment} --config PATH --out DIR"
                   " [--seed U64] [--threads N]\n";
      return 1;
    }
    RunContext ctx;
    {
      std::ifstream f(rc.config_path);
      if (!f) {
        std::cerr << "error: cannot read config file " << rc.config_path << '\n';
        return 1;
      }
      try {
        f >> ctx.config;
      } catch (const std::exception& e) {
        std::cerr << "error: config parse failure: " << e.what() << '\n';
        return 1;
      }
    }
    if (rc.out_dir.empty()) {
      std::cerr << "error: --out DIR is required\n";
      return 1;
    }
    ctx.threads = rc.threads;
    if (rc.master_seed) {
      ctx.master_seed = *rc.master_seed;
    } else {
      std::random_device rd;
      ctx.master_seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }

    // All outputs live under out_dir; nothing is written before this point.
    ctx.out_dir = fs::path(rc.out_dir);
    fs::create_directories(ctx.out_dir);

    if (rc.command == "simulate")
      run_simulate(ctx);
    else if (rc.command == "fit")
      run_fit(ctx);
    else if (rc.command == "diagnose")
      run_diagnose(ctx);
    else
      run_experiment(ctx);
    write_manifest(ctx, rc.command);
    return 0;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const Json::exception& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tslab
