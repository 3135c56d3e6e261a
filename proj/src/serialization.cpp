#include "torusrg/serialization.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace torusrg {

using nlohmann::json;

json fourier_map_to_json(const FourierMap& m) {
  json j;
  j["dim"] = m.dim();
  j["lattice_bound"] = m.lattice_bound();
  j["real_flag"] = m.real_valued();
  json modes = json::array();
  for (const auto& [q, v] : m.coeffs()) {
    json e;
    json qv = json::array(), re = json::array(), im = json::array();
    for (int i = 0; i < m.dim(); ++i) {
      qv.push_back(q[static_cast<std::size_t>(i)]);
      re.push_back(v[static_cast<std::size_t>(i)].real());
      im.push_back(v[static_cast<std::size_t>(i)].imag());
    }
    e["q"] = qv;
    e["re"] = re;
    e["im"] = im;
    modes.push_back(e);
  }
  j["modes"] = modes;
  return j;
}

FourierMap fourier_map_from_json(const json& j) {
  const int dim = j.at("dim").get<int>();
  const int bound = j.at("lattice_bound").get<int>();
  const bool real = j.value("real_flag", true);
  FourierMap m(dim, bound, real);
  for (const auto& e : j.at("modes")) {
    Mode q{0, 0, 0, 0};
    const auto& qv = e.at("q");
    for (int i = 0; i < dim && i < static_cast<int>(qv.size()); ++i)
      q[static_cast<std::size_t>(i)] = qv[static_cast<std::size_t>(i)].get<int>();
    CoeffVec v = zero_coeff();
    const auto& re = e.at("re");
    const auto& im = e.at("im");
    for (int i = 0; i < dim; ++i)
      v[static_cast<std::size_t>(i)] = Cd(re[static_cast<std::size_t>(i)].get<double>(),
                                          im[static_cast<std::size_t>(i)].get<double>());
    m.set(q, v);
  }
  return m;
}

json potential_to_json(const Potential& p) {
  json j;
  j["dim"] = p.dim();
  j["ell"] = p.ell();
  json modes = json::array();
  for (const auto& [q, v] : p.coeffs()) {
    json e;
    json qv = json::array();
    for (int i = 0; i < p.dim(); ++i) qv.push_back(q[static_cast<std::size_t>(i)]);
    e["q"] = qv;
    e["re"] = v.real();
    e["im"] = v.imag();
    modes.push_back(e);
  }
  j["modes"] = modes;
  return j;
}

Potential potential_from_json(const json& j) {
  if (j.contains("synthetic")) {
    const auto& s = j.at("synthetic");
    return synth_ck_potential(s.value("dim", 2), s.at("ell").get<int>(),
                              s.at("window").get<int>(),
                              s.value("seed", static_cast<std::uint64_t>(1)));
  }
  const int dim = j.at("dim").get<int>();
  Potential p(dim, j.value("ell", 1));
  for (const auto& e : j.at("modes")) {
    Mode q{0, 0, 0, 0};
    const auto& qv = e.at("q");
    for (int i = 0; i < dim && i < static_cast<int>(qv.size()); ++i)
      q[static_cast<std::size_t>(i)] = qv[static_cast<std::size_t>(i)].get<int>();
    p.set(q, Cd(e.at("re").get<double>(), e.value("im", 0.0)));
  }
  return p;
}

json frequency_to_json(const DiophantineFrequency& f) {
  json j;
  j["omega"] = f.omega;
  j["gamma"] = f.gamma;
  j["nu"] = f.nu;
  j["Qmax"] = f.Qmax;
  json am = json::array();
  for (int i = 0; i < f.dim(); ++i) am.push_back(f.argmin[static_cast<std::size_t>(i)]);
  j["argmin_q"] = am;
  return j;
}

json solve_report_to_json(const SolveReport& rep, const DiophantineFrequency& freq,
                          const json& config_echo) {
  json j;
  j["report_version"] = 1;
  j["config"] = config_echo;
  j["frequency_certificate"] = frequency_to_json(freq);
  j["status"] = to_string(rep.status);
  if (!rep.message.empty()) j["message"] = rep.message;

  json stages = json::array();
  for (const auto& st : rep.stages) {
    json s;
    s["j"] = st.j;
    s["y_norm"] = st.y_norm;
    s["x_norm"] = st.x_norm;
    s["stage_residual"] = st.stage_residual;
    s["decay"] = {{"envelope", st.decay.envelope},
                  {"worst_ratio", st.decay.worst_ratio},
                  {"fitted_rate", st.decay.fitted_rate},
                  {"sample_count", st.decay.sample_count}};
    s["rg_status"] = to_string(st.rg.status);
    json scales = json::array();
    for (const auto& sc : st.rg.scales) {
      scales.push_back({{"n", sc.n},
                        {"iters", sc.iters},
                        {"final_residual", sc.final_residual},
                        {"ward_const", sc.ward_const},
                        {"ward_deriv", sc.ward_deriv},
                        {"H_norm", sc.H_norm},
                        {"sigma00_abs", sc.sigma00_abs},
                        {"dsigma00_abs", sc.dsigma00_abs},
                        {"z_norm", sc.z_norm},
                        {"dz_norm", sc.dz_norm}});
    }
    s["scales"] = scales;
    stages.push_back(s);
  }
  j["stages"] = stages;

  j["final"] = {{"residual", rep.final_residual},
                {"tail", rep.final_tail},
                {"x_norm", rep.X.ell1_norm()},
                {"y_act_norm", rep.Y_act.ell1_norm()}};

  json cs = json::array();
  for (const auto& c : rep.cs_norms) {
    cs.push_back({{"s", c.s},
                  {"windowed", c.windowed},
                  {"half_window", c.half_window},
                  {"tail_estimate", c.tail_estimate},
                  {"extrapolated", c.extrapolated}});
  }
  j["cs_norms"] = cs;
  return j;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  if (rows.empty()) return "t\n";
  const std::size_t d = rows.front().theta.size();
  os << "t";
  for (std::size_t i = 1; i <= d; ++i) os << ",theta_" << i;
  for (std::size_t i = 1; i <= d; ++i) os << ",I_" << i;
  os << '\n';
  for (const auto& r : rows) {
    os << r.t;
    for (double v : r.theta) os << ',' << v;
    for (double v : r.action) os << ',' << v;
    os << '\n';
  }
  return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace torusrg
