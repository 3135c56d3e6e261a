#include "torusrg/cli.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <sstream>
#include <thread>

#include "torusrg/config.hpp"
#include "torusrg/oracle.hpp"
#include "torusrg/serialization.hpp"

namespace torusrg {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct RunArtifacts {
  SolveReport report;
  DiophantineFrequency freq;
  json report_json;
};

RunArtifacts execute_solve(const RunConfig& cfg) {
  RunArtifacts out;
  out.freq = certify(cfg.omega, cfg.nu, cfg.qmax);
  ScaleDecomposition scales(cfg.eta);
  out.report = solve(cfg.potential, out.freq, cfg.lambda, cfg.ell, scales, cfg.opts);
  out.report_json = solve_report_to_json(out.report, out.freq, cfg.echo);
  return out;
}

void write_solve_outputs(const RunConfig& cfg, const RunArtifacts& art,
                         const std::string& out_dir) {
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "report.json").string(),
                  art.report_json.dump(2) + "\n");
  write_text_file((fs::path(out_dir) / "coefficients.json").string(),
                  fourier_map_to_json(art.report.X).dump(2) + "\n");
  std::vector<double> tgrid(static_cast<std::size_t>(std::max(cfg.traj_samples, 2)));
  for (std::size_t i = 0; i < tgrid.size(); ++i)
    tgrid[i] = cfg.traj_t0 + (cfg.traj_t1 - cfg.traj_t0) * static_cast<double>(i) /
                                 static_cast<double>(tgrid.size() - 1);
  const auto rows = trajectory(art.report.X, art.freq, cfg.theta0, tgrid);
  write_text_file((fs::path(out_dir) / "trajectory.csv").string(), trajectory_csv(rows));
}

double max_stable_s(const SolveReport& rep) {
  double best = -1.0;
  for (const auto& c : rep.cs_norms) {
    if (c.windowed <= 0.0) continue;
    if (std::abs(c.windowed - c.half_window) <= 0.05 * c.windowed)
      best = std::max(best, c.s);
  }
  return best;
}

}  // namespace

int cmd_solve(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  try {
    const RunArtifacts art = execute_solve(cfg);
    write_solve_outputs(cfg, art, out_dir);
    if (art.report.status != SolveStatus::Success) {
      std::cerr << "solve failed: " << to_string(art.report.status) << " "
                << art.report.message << " (partial report written)\n";
      return 2;
    }
    return 0;
  } catch (const ResonantFrequencyError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "solve error: " << e.what() << '\n';
    return 2;
  }
}

int cmd_verify(const std::string& report_path) {
  json rj;
  RunConfig cfg;
  FourierMap X;
  try {
    rj = json::parse(read_text_file(report_path));
    cfg = parse_run_config(rj.at("config"));
    const fs::path dir = fs::path(report_path).parent_path();
    X = fourier_map_from_json(
        json::parse(read_text_file((dir / "coefficients.json").string())));
  } catch (const std::exception& e) {
    std::cerr << "verify: cannot load inputs: " << e.what() << '\n';
    return 1;
  }

  std::vector<std::string> failures;
  try {
    const DiophantineFrequency freq = certify(cfg.omega, cfg.nu, cfg.qmax);

    // residual, with the independent direct evaluator
    const double resid = oracle::equation_residual_direct(X, cfg.potential, cfg.lambda, freq);
    const double resid_tol = 2.0 * std::max(cfg.opts.solver.global_tol,
                                            rj.at("final").at("residual").get<double>());
    if (resid > resid_tol) {
      std::ostringstream os;
      os << "residual check: " << resid << " > " << resid_tol;
      failures.push_back(os.str());
    }

    // Hermitian symmetry
    const double herm = X.hermitian_defect();
    if (herm > 2e-13 * std::max(1.0, X.ell1_norm()))
      failures.push_back("hermitian symmetry defect " + std::to_string(herm));

    // mean equation (constant Ward identity at the solution)
    const FourierMap w = oracle::w0_direct(cfg.potential, X, cfg.lambda, cfg.opts.lattice_bound);
    const CoeffVec w0c = w.at(Mode{0, 0, 0, 0});
    double mean = 0.0;
    for (int i = 0; i < X.dim(); ++i) mean += std::abs(w0c[static_cast<std::size_t>(i)]);
    if (mean > 2.0 * 10.0 * cfg.opts.solver.stage_tol)
      failures.push_back("mean-equation defect " + std::to_string(mean));

    // per-stage Ward residuals from the report
    for (const auto& st : rj.at("stages")) {
      for (const auto& sc : st.at("scales")) {
        if (sc.at("ward_const").get<double>() > 2e-8)
          failures.push_back("stored ward_const beyond threshold");
        const double wd = sc.at("ward_deriv").get<double>();
        if (!(wd <= 2e-8)) failures.push_back("stored ward_deriv beyond threshold");
      }
    }

    // cs_norm table recompute
    for (const auto& c : rj.at("cs_norms")) {
      const CsNorm mine = cs_norm(X, c.at("s").get<double>());
      const double stored = c.at("windowed").get<double>();
      if (std::abs(mine.windowed - stored) > 1e-9 * std::max(1.0, std::abs(stored)))
        failures.push_back("cs_norm mismatch at s=" + std::to_string(c.at("s").get<double>()));
    }
  } catch (const std::exception& e) {
    std::cerr << "verify error: " << e.what() << '\n';
    return 1;
  }

  if (!failures.empty()) {
    std::cerr << "verification failed:\n";
    for (const auto& f : failures) std::cerr << "  - " << f << '\n';
    return 3;
  }
  return 0;
}

int cmd_scan(const std::string& config_path, const std::string& out_dir,
             const std::string& param_name, const std::vector<double>& values,
             int jobs) {
  json base;
  try {
    base = json::parse(read_text_file(config_path));
    if (param_name != "lambda" && param_name != "eta")
      throw std::invalid_argument("scan parameter must be lambda or eta");
    if (values.empty()) throw std::invalid_argument("empty --param-list");
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }

  struct Row {
    double param = 0.0;
    std::string status = "config_error";
    double residual = 0.0;
    std::string y_norms;
    double max_s = -1.0;
  };
  std::vector<Row> rows(values.size());
  std::mutex mtx;
  std::size_t next = 0;

  auto worker = [&]() {
    for (;;) {
      std::size_t i;
      {
        std::lock_guard<std::mutex> lk(mtx);
        if (next >= values.size()) return;
        i = next++;
      }
      Row row;
      row.param = values[i];
      try {
        json doc = base;
        doc[param_name] = values[i];
        const RunConfig cfg = parse_run_config(
            doc, fs::path(config_path).parent_path().string());
        const RunArtifacts art = execute_solve(cfg);
        row.status = to_string(art.report.status);
        row.residual = art.report.final_residual;
        std::ostringstream ys;
        ys.precision(17);
        for (std::size_t k = 0; k < art.report.stages.size(); ++k) {
          if (k) ys << ';';
          ys << art.report.stages[k].y_norm;
        }
        row.y_norms = ys.str();
        row.max_s = max_stable_s(art.report);
      } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
      }
      rows[i] = std::move(row);
    }
  };

  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(values.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::ostringstream os;
  os.precision(17);
  os << "param,status,residual,y_norms,max_finite_s\n";
  bool any_ok = false;
  for (const auto& r : rows) {
    os << r.param << ',' << r.status << ',' << r.residual << ",\"" << r.y_norms
       << "\"," << r.max_s << '\n';
    if (r.status == "success") any_ok = true;
  }
  fs::create_directories(out_dir);
  write_text_file((fs::path(out_dir) / "scan.csv").string(), os.str());
  return any_ok ? 0 : 2;
}

int cmd_diagnose_scales(const std::string& config_path, const std::string& out_dir) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  }
  try {
    const DiophantineFrequency freq = certify(cfg.omega, cfg.nu, cfg.qmax);
    ScaleDecomposition scales(cfg.eta);
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / "scales.csv").string(),
                    scale_occupancy_csv(scale_occupancy(scales, freq, cfg.opts.lattice_bound)));

    const SolveReport rep = solve(cfg.potential, freq, cfg.lambda, cfg.ell, scales, cfg.opts);
    std::ostringstream os;
    os.precision(17);
    os << "j,n,iters,final_residual,ward_const,ward_deriv,H_norm,sigma00_abs,dsigma00_abs\n";
    for (const auto& st : rep.stages)
      for (const auto& sc : st.rg.scales)
        os << st.j << ',' << sc.n << ',' << sc.iters << ',' << sc.final_residual << ','
           << sc.ward_const << ',' << sc.ward_deriv << ',' << sc.H_norm << ','
           << sc.sigma00_abs << ',' << sc.dsigma00_abs << '\n';
    write_text_file((fs::path(out_dir) / "stage_diagnostics.csv").string(), os.str());
    return rep.status == SolveStatus::Success ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "diagnose error: " << e.what() << '\n';
    return 2;
  }
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"invariant-torus solver: multiscale renormalization with Ward diagnostics"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", report_path, param_name = "lambda", param_list;
  int jobs = 1;

  auto* s_solve = app.add_subcommand("solve", "run the solver and write reports");
  s_solve->add_option("--config", config_path, "config JSON path")->required();
  s_solve->add_option("--out", out_dir, "output directory");

  auto* s_verify = app.add_subcommand("verify", "independently re-check a report");
  s_verify->add_option("report", report_path, "path to report.json")->required();

  auto* s_scan = app.add_subcommand("scan", "parameter scan");
  s_scan->add_option("--config", config_path, "config JSON path")->required();
  s_scan->add_option("--out", out_dir, "output directory");
  s_scan->add_option("--param", param_name, "lambda or eta");
  s_scan->add_option("--param-list", param_list, "comma-separated values")->required();
  s_scan->add_option("--jobs", jobs, "parallel workers");

  auto* s_diag = app.add_subcommand("diagnose-scales", "scale occupancy and per-stage diagnostics");
  s_diag->add_option("--config", config_path, "config JSON path")->required();
  s_diag->add_option("--out", out_dir, "output directory");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << '\n';
    return 1;
  }

  if (s_solve->parsed()) return cmd_solve(config_path, out_dir);
  if (s_verify->parsed()) return cmd_verify(report_path);
  if (s_scan->parsed()) {
    std::vector<double> values;
    std::stringstream ss(param_list);
    std::string item;
    try {
      while (std::getline(ss, item, ',')) values.push_back(std::stod(item));
    } catch (const std::exception&) {
      std::cerr << "config error: bad --param-list\n";
      return 1;
    }
    return cmd_scan(config_path, out_dir, param_name, values, jobs);
  }
  if (s_diag->parsed()) return cmd_diagnose_scales(config_path, out_dir);
  return 1;
}

}  // namespace torusrg
