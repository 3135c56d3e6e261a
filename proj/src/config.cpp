#include "torusrg/config.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

#include "torusrg/serialization.hpp"

namespace torusrg {

using nlohmann::json;

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  RunConfig cfg;

  if (doc.contains("frequency")) {
    const auto& f = doc.at("frequency");
    if (f.is_string())
      cfg.omega = parse_frequency_spec(f.get<std::string>());
    else
      cfg.omega = f.get<std::vector<double>>();
  } else {
    cfg.omega = parse_frequency_spec("golden");
  }
  cfg.nu = doc.value("nu", 1.2);
  cfg.qmax = doc.value("qmax", 50);

  if (!doc.contains("potential"))
    throw std::invalid_argument("config: missing potential");
  const auto& p = doc.at("potential");
  if (p.is_string()) {
    std::filesystem::path path(p.get<std::string>());
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    cfg.potential = potential_from_json(json::parse(read_text_file(path.string())));
  } else {
    cfg.potential = potential_from_json(p);
  }

  cfg.lambda = doc.value("lambda", 0.0);
  cfg.ell = doc.value("ell", cfg.potential.ell());
  cfg.eta = doc.value("eta", 0.5);
  cfg.opts.M = doc.value("M", 8);
  cfg.opts.lattice_bound = doc.value("lattice_bound", 32);
  cfg.opts.forced_stages = doc.value("stages", -1);
  cfg.continuation = doc.value("continuation", false);
  cfg.seed = doc.value("seed", static_cast<std::uint64_t>(1));

  if (doc.contains("tolerances")) {
    const auto& t = doc.at("tolerances");
    cfg.opts.solver.scale_tol = t.value("scale_tol", 1e-12);
    cfg.opts.solver.stage_tol = t.value("stage_tol", 1e-11);
    cfg.opts.solver.global_tol = t.value("global_tol", 1e-10);
  }
  if (doc.contains("ward_probes")) {
    cfg.opts.solver.ward_probes.clear();
    for (const auto& e : doc.at("ward_probes")) {
      Mode q{0, 0, 0, 0};
      for (std::size_t i = 0; i < e.size() && i < kMaxDim; ++i)
        q[i] = e[i].get<int>();
      cfg.opts.solver.ward_probes.push_back(q);
    }
  }
  if (doc.contains("cs_norm_orders"))
    cfg.opts.cs_norm_orders = doc.at("cs_norm_orders").get<std::vector<double>>();

  if (doc.contains("trajectory")) {
    const auto& t = doc.at("trajectory");
    cfg.traj_t0 = t.value("t0", 0.0);
    cfg.traj_t1 = t.value("t1", 10.0);
    cfg.traj_samples = t.value("samples", 201);
    if (t.contains("theta0")) cfg.theta0 = t.at("theta0").get<std::vector<double>>();
  }

  // invariants
  if (!(cfg.eta > 0.0 && cfg.eta < 1.0))
    throw std::invalid_argument("config: eta must lie in (0,1)");
  if (!std::isfinite(cfg.lambda))
    throw std::invalid_argument("config: lambda must be a finite real");
  if (cfg.opts.lattice_bound < cfg.potential.max_linf_mode())
    throw std::invalid_argument("config: lattice_bound smaller than the largest potential mode");
  if (static_cast<int>(cfg.omega.size()) != cfg.potential.dim())
    throw std::invalid_argument("config: frequency dimension does not match the potential");

  // normalized echo for deterministic report output
  json echo;
  echo["frequency"] = cfg.omega;
  echo["nu"] = cfg.nu;
  echo["qmax"] = cfg.qmax;
  echo["potential"] = potential_to_json(cfg.potential);
  echo["lambda"] = cfg.lambda;
  echo["ell"] = cfg.ell;
  echo["eta"] = cfg.eta;
  echo["M"] = cfg.opts.M;
  echo["lattice_bound"] = cfg.opts.lattice_bound;
  echo["stages"] = cfg.opts.forced_stages;
  echo["tolerances"] = {{"scale_tol", cfg.opts.solver.scale_tol},
                        {"stage_tol", cfg.opts.solver.stage_tol},
                        {"global_tol", cfg.opts.solver.global_tol}};
  echo["seed"] = cfg.seed;
  cfg.echo = echo;
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  const json doc = json::parse(read_text_file(path));
  return parse_run_config(doc, std::filesystem::path(path).parent_path().string());
}

}  // namespace torusrg
