#pragma once

#include <nlohmann/json_fwd.hpp>
#include <string>

#include "torusrg/assembly.hpp"
#include "torusrg/frequency.hpp"
#include "torusrg/potential.hpp"

namespace torusrg {

nlohmann::json fourier_map_to_json(const FourierMap& m);
FourierMap fourier_map_from_json(const nlohmann::json& j);

nlohmann::json potential_to_json(const Potential& p);
/// Accepts either explicit modes {dim, ell, modes:[...]} or
/// {synthetic:{dim, ell, window, seed}}.
Potential potential_from_json(const nlohmann::json& j);

nlohmann::json frequency_to_json(const DiophantineFrequency& f);

nlohmann::json solve_report_to_json(const SolveReport& rep,
                                    const DiophantineFrequency& freq,
                                    const nlohmann::json& config_echo);

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace torusrg
