#pragma once

#include <string>
#include <vector>

namespace torusrg {

/// Exit-code contract: 0 ok, 1 config error, 2 solve failure, 3 verify
/// mismatch. Subcommands: solve | verify | scan | diagnose-scales.
int run_cli(const std::vector<std::string>& args);

int cmd_solve(const std::string& config_path, const std::string& out_dir);
int cmd_verify(const std::string& report_path);
int cmd_scan(const std::string& config_path, const std::string& out_dir,
             const std::string& param_name, const std::vector<double>& values,
             int jobs);
int cmd_diagnose_scales(const std::string& config_path, const std::string& out_dir);

}  // namespace torusrg
