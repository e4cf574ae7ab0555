// Command-line driver: scenario configs in, CSV tables and a gate report
// out. Exit codes: 0 all gates pass, 1 gate failure, 2 usage/config error,
// 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anisoeig/pipeline.hpp"

namespace {

using namespace anisoeig;

std::string f17(double v) { return detail::fmt17(v); }

int cmd_eig(const ScenarioConfig& cfg, const std::string& out_dir,
            double eps_single, const std::string& dump_path) {
  Grid2D grid = cfg.make_grid();
  std::vector<double> eps_list =
      eps_single > 0.0 ? std::vector<double>{eps_single} : cfg.eps_list;
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(std::filesystem::path(out_dir) / "eig.csv",
                    std::ios::binary);
  csv << "eps,k_eps,iters,residual\n";
  bool dumped = false;
  for (double eps : eps_list) {
    SparseOperator op = assemble_global(grid, cfg.coeffs, eps);
    if (!dump_path.empty() && !dumped) {
      std::ofstream dump(dump_path, std::ios::binary);
      dump_matrix(op, dump);
      dumped = true;
    }
    EigenPair pair = principal_eigenpair(op, cfg.tol);
    csv << f17(eps) << ',' << f17(pair.k) << ',' << pair.iterations << ','
        << f17(pair.residual) << '\n';
    std::cout << "eps = " << f17(eps) << "  k_eps = " << f17(pair.k)
              << "  iters = " << pair.iterations
              << "  residual = " << f17(pair.residual) << '\n';
  }
  return 0;
}

int cmd_local_spectrum(const ScenarioConfig& cfg, const std::string& out_dir) {
  Grid2D grid = cfg.make_grid();
  LocalSpectrum spec = local_spectrum(grid, cfg.coeffs, cfg.tol);
  std::filesystem::create_directories(out_dir);
  std::ofstream csv(std::filesystem::path(out_dir) / "local_spectrum.csv",
                    std::ios::binary);
  csv << "y,k_y\n";
  for (std::size_t i = 0; i < spec.y_nodes.size(); ++i)
    csv << f17(spec.y_nodes[i]) << ',' << f17(spec.k[i]) << '\n';
  double kmax = spec.k.front();
  for (double k : spec.k) kmax = std::max(kmax, k);
  std::cout << "local spectrum over " << spec.y_nodes.size()
            << " y-nodes, max k^y = " << f17(kmax) << '\n';
  return 0;
}

int cmd_limit(const ScenarioConfig& cfg, const std::string& out_dir) {
  Grid2D grid = cfg.make_grid();
  LocalSpectrum spec = local_spectrum(grid, cfg.coeffs, cfg.tol);
  LimitPrediction pred = predict_limit(spec, cfg.coeffs);
  std::filesystem::create_directories(out_dir);
  std::ofstream out(std::filesystem::path(out_dir) / "limit.txt",
                    std::ios::binary);
  auto emit = [&](std::ostream& os) {
    os << "regime = " << regime_name(pred.regime) << '\n'
       << "M = " << f17(pred.M) << '\n'
       << "gamma = " << f17(pred.gamma) << '\n'
       << "j_M = " << f17(pred.jM) << '\n'
       << "k0_predicted = " << f17(pred.k0) << '\n';
  };
  emit(out);
  emit(std::cout);
  return 0;
}

int cmd_sweep(const ScenarioConfig& cfg, const std::string& out_dir) {
  SweepReport rep = run_sweep(cfg, out_dir);
  for (const auto& r : rep.rows)
    std::cout << "eps = " << f17(r.eps) << "  k_eps = " << f17(r.k_eps)
              << "  sup_tv = " << f17(r.sup_tv) << '\n';
  std::cout << "k_extrapolated = " << f17(rep.k_extrap)
            << "  k0_predicted = " << f17(rep.prediction.k0) << "  regime = "
            << regime_name(rep.prediction.regime) << '\n';
  for (const auto& g : rep.gates)
    std::cout << "gate " << g.first << " = " << (g.second ? "pass" : "fail")
              << '\n';
  std::cout << "overall = " << (rep.pass_all ? "pass" : "fail") << '\n';
  return rep.pass_all ? 0 : 1;
}

int cmd_qsd(const ScenarioConfig& cfg, const std::string& out_dir) {
  std::vector<QsdEstimate> ests = run_qsd(cfg, out_dir);
  for (const auto& e : ests)
    std::cout << "t = " << f17(e.t) << "  survivors = " << e.survivors
              << "  tv_vs_phi = " << f17(e.tv_vs_phi) << '\n';
  return 0;
}

int cmd_hj_check(const ScenarioConfig& cfg, const std::string& out_dir) {
  Grid2D grid = cfg.make_grid();
  LocalSpectrum spec = local_spectrum(grid, cfg.coeffs, cfg.tol);
  LimitPrediction pred = predict_limit(spec, cfg.coeffs);
  if (spec.ydom != Domain1D::Torus) {
    std::cerr << "hj-check needs a torus y-domain\n";
    return 2;
  }
  int sign = pred.gamma >= 0.0 ? +1 : -1;
  bool super = pred.regime == Regime::TransportSupercritical;
  std::filesystem::create_directories(out_dir);
  bool ok = true;
  for (int refine : {4, 8}) {
    HjSolution sol = super
                         ? build_ubar(spec, cfg.coeffs, pred.k0, sign, refine)
                         : build_v(spec, cfg.coeffs, sign, refine);
    double resid = hj_residual(sol, spec, cfg.coeffs, sol.k_used);
    std::cout << (super ? "ubar" : "v") << " refine = " << refine
              << "  periodicity_defect = " << f17(sol.periodicity_defect)
              << "  residual = " << f17(resid) << '\n';
    if (refine == 4) {
      ok = sol.periodicity_defect <= kHjDefectTol && resid <= kHjDefectTol;
      auto res = detail::hj_residual_samples(sol, spec, cfg.coeffs, sol.k_used);
      std::ofstream csv(std::filesystem::path(out_dir) / "hj.csv",
                        std::ios::binary);
      csv << "y,u,residual\n";
      for (std::size_t l = 0; l < sol.y.size(); ++l)
        csv << f17(sol.y[l]) << ',' << f17(sol.u[l]) << ',' << f17(res[l])
            << '\n';
    }
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical lab for strongly anisotropic elliptic "
               "principal-eigenvalue problems"};
  app.require_subcommand(1);
  app.fallthrough();  // --config may follow the subcommand

  std::string config_path, out_dir, dump_path;
  long long seed_override = -1;
  double eps_single = -1.0;

  app.add_option("--config", config_path, "scenario file")->required();
  app.add_option("--out", out_dir, "output directory (default: from config)");
  app.add_option("--seed", seed_override, "override the [qsd] seed");

  auto* sc_eig = app.add_subcommand("eig", "global principal eigenpair per eps");
  sc_eig->add_option("--eps", eps_single, "solve at a single eps");
  sc_eig->add_option("--dump-matrix", dump_path,
                     "write the assembled matrix (row col value)");
  auto* sc_loc = app.add_subcommand("local-spectrum", "k^y curve");
  auto* sc_lim = app.add_subcommand("limit", "small-eps limit prediction");
  auto* sc_sweep = app.add_subcommand("sweep", "full eps sweep with gates");
  auto* sc_qsd = app.add_subcommand("qsd-mc", "killed-diffusion Monte Carlo");
  auto* sc_hj = app.add_subcommand("hj-check", "explicit HJ constructions");

  CLI11_PARSE(app, argc, argv);

  try {
    anisoeig::ScenarioConfig cfg = anisoeig::load_config(config_path);
    if (seed_override >= 0) {
      if (!cfg.qsd) throw anisoeig::ConfigError("--seed given but no [qsd] block");
      cfg.qsd->seed = static_cast<std::uint64_t>(seed_override);
    }
    std::string out = out_dir.empty() ? cfg.out_dir : out_dir;

    if (sc_eig->parsed()) return cmd_eig(cfg, out, eps_single, dump_path);
    if (sc_loc->parsed()) return cmd_local_spectrum(cfg, out);
    if (sc_lim->parsed()) return cmd_limit(cfg, out);
    if (sc_sweep->parsed()) return cmd_sweep(cfg, out);
    if (sc_qsd->parsed()) return cmd_qsd(cfg, out);
    if (sc_hj->parsed()) return cmd_hj_check(cfg, out);
    return 2;
  } catch (const anisoeig::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const anisoeig::InvalidArgument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const anisoeig::Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  }
}
