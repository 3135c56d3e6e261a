#pragma once

#include <nlohmann/json.hpp>
#include <string>

#include "torusrg/assembly.hpp"

namespace torusrg {

/// Batch-run configuration: one JSON document covers frequency, potential,
/// coupling, cutoff and tolerance choices.
struct RunConfig {
  std::vector<double> omega;
  double nu = 1.2;
  int qmax = 50;

  Potential potential;
  double lambda = 0.0;
  int ell = 1;

  double eta = 0.5;
  SolveOptions opts;  // M, lattice_bound, solver tolerances, stages, cs orders

  bool continuation = false;
  std::uint64_t seed = 1;

  // trajectory export
  double traj_t0 = 0.0;
  double traj_t1 = 10.0;
  int traj_samples = 201;
  std::vector<double> theta0;

  nlohmann::json echo;  // normalized configuration for deterministic reports
};

/// Parses and validates a config document (invariants: 0 < eta < 1, finite
/// lambda, lattice_bound >= max potential mode). Throws std::runtime_error or
/// std::invalid_argument on violations.
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::string& base_dir = "");

RunConfig load_run_config(const std::string& path);

}  // namespace torusrg
