// dicke_sim: command-line front-end for steady states, Liouvillian spectra,
// time evolution, Wigner maps and parameter sweeps of N driven two-level
// atoms collectively coupled to a broadband squeezed vacuum reservoir.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dicke/dynamics.hpp"
#include "dicke/observables.hpp"
#include "dicke/output.hpp"
#include "dicke/spectral.hpp"
#include "dicke/sweeps.hpp"

namespace {

using nlohmann::json;
constexpr const char* kVersion = "dicke_sim 1.0.0";

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_keys(const json& obj, const char* section,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(std::string(section) + " must be a JSON object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok)
      throw ConfigError("unknown key '" + key + "' in " + section +
                        " (strict mode rejects unrecognized keys)");
  }
}

void validate_config(const json& cfg) {
  check_keys(cfg, "config root",
             {"model", "task", "spectrum", "evolve", "fourier", "wigner", "sweep",
              "output_dir", "workers", "tolerances"});
  if (cfg.contains("model"))
    check_keys(cfg["model"], "model",
               {"n_atoms", "drive_ratio", "rabi", "gamma", "n_bar", "m_abs",
                "perfect_squeezing", "drive_phase", "squeeze_phase"});
  if (cfg.contains("spectrum")) check_keys(cfg["spectrum"], "spectrum", {"k", "shift_re", "shift_im"});
  if (cfg.contains("evolve"))
    check_keys(cfg["evolve"], "evolve",
               {"t_final", "sample_dt", "rtol", "atol", "record_variances"});
  if (cfg.contains("fourier")) check_keys(cfg["fourier"], "fourier", {"transient_cut", "window"});
  if (cfg.contains("wigner")) check_keys(cfg["wigner"], "wigner", {"n_theta", "n_phi"});
  if (cfg.contains("sweep"))
    check_keys(cfg["sweep"], "sweep",
               {"points", "k", "max_k", "n_harmonics", "want_gaps", "want_observables",
                "want_variances"});
  if (cfg.contains("tolerances"))
    check_keys(cfg["tolerances"], "tolerances",
               {"residual_tol", "im_zero_tolerance", "dense_cap", "steady_residual_tol",
                "atom_cap"});
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("key '") + key + "' has the wrong type");
  }
}

dicke::ModelParams model_from_config(const json& cfg) {
  if (!cfg.contains("model")) throw ConfigError("config must contain a 'model' section");
  const json& m = cfg["model"];
  if (!m.contains("n_atoms")) throw ConfigError("model.n_atoms is required");

  dicke::ModelParams p;
  p.n_atoms = get_or<int>(m, "n_atoms", 1);
  const bool has_ratio = m.contains("drive_ratio");
  if (has_ratio && (m.contains("rabi") || m.contains("gamma")))
    throw ConfigError("model: give either drive_ratio or rabi/gamma, not both");
  if (has_ratio) {
    // reduced units: N*Gamma/2 = 1
    p.gamma = 2.0 / p.n_atoms;
    p.rabi = get_or<double>(m, "drive_ratio", 0.0);
  } else {
    if (!m.contains("gamma"))
      throw ConfigError("model: gamma is required when drive_ratio is not given");
    p.gamma = get_or<double>(m, "gamma", 1.0);
    p.rabi = get_or<double>(m, "rabi", 0.0);
  }
  p.n_bar = get_or<double>(m, "n_bar", 0.0);
  p.drive_phase = get_or<double>(m, "drive_phase", M_PI / 2.);
  p.squeeze_phase = get_or<double>(m, "squeeze_phase", 0.0);
  if (m.contains("m_abs"))
    p.m_abs = get_or<double>(m, "m_abs", 0.0);
  else if (get_or<bool>(m, "perfect_squeezing", true))
    p.m_abs = std::sqrt(p.n_bar * (p.n_bar + 1.0));
  try {
    p.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }
  return p;
}

dicke::SpectralConfig spectral_from_config(const json& cfg) {
  dicke::SpectralConfig sc;
  if (!cfg.contains("tolerances")) return sc;
  const json& t = cfg["tolerances"];
  sc.residual_tol = get_or<double>(t, "residual_tol", sc.residual_tol);
  sc.im_zero_tolerance = get_or<double>(t, "im_zero_tolerance", sc.im_zero_tolerance);
  sc.dense_cap = get_or<int>(t, "dense_cap", sc.dense_cap);
  sc.steady_residual_tol = get_or<double>(t, "steady_residual_tol", sc.steady_residual_tol);
  return sc;
}

int atom_cap_from_config(const json& cfg) {
  if (!cfg.contains("tolerances")) return dicke::kDefaultAtomCap;
  return get_or<int>(cfg["tolerances"], "atom_cap", dicke::kDefaultAtomCap);
}

void apply_set_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("--set expects key.path=value, got '" + assignment + "'");
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  json* node = &cfg;
  size_t start = 0;
  while (true) {
    const size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
    if (key.empty()) throw ConfigError("--set: empty key segment in '" + path + "'");
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;  // plain string
      }
      (*node)[key] = parsed;
      break;
    }
    node = &((*node)[key]);
    start = dot + 1;
  }
}

json evolve_options_json(const dicke::EvolveOptions& o) {
  return json{{"t_final", o.t_final},
              {"sample_dt", o.sample_dt},
              {"rtol", o.rtol},
              {"atol", o.atol},
              {"record_variances", o.record_variances}};
}

dicke::EvolveOptions evolve_options(const json& cfg) {
  dicke::EvolveOptions o;
  if (!cfg.contains("evolve")) return o;
  const json& e = cfg["evolve"];
  o.t_final = get_or<double>(e, "t_final", o.t_final);
  o.sample_dt = get_or<double>(e, "sample_dt", o.sample_dt);
  o.rtol = get_or<double>(e, "rtol", o.rtol);
  o.atol = get_or<double>(e, "atol", o.atol);
  o.record_variances = get_or<bool>(e, "record_variances", o.record_variances);
  return o;
}

// ---------------------------------------------------------------------------

int run_task(const std::string& task, json cfg, int workers) {
  cfg["task"] = task;
  validate_config(cfg);
  const dicke::ModelParams params = model_from_config(cfg);
  const dicke::SpectralConfig spectral = spectral_from_config(cfg);
  const int atom_cap = atom_cap_from_config(cfg);

  std::string out_root = get_or<std::string>(cfg, "output_dir", "");
  if (out_root.empty()) {
    const char* env = std::getenv("DICKE_SIM_OUT");
    out_root = env ? env : "out";
  }
  dicke::OutputDir out{std::filesystem::path(out_root)};

  const auto finish = [&](int code) {
    out.write_manifest(kVersion, cfg.dump());
    return code;
  };

  try {
    if (task == "spectrum") {
      const auto L = dicke::build_liouvillian(params, atom_cap);
      dicke::SpectrumResult spec;
      if (cfg.contains("spectrum") && cfg["spectrum"].contains("k")) {
        const int k = get_or<int>(cfg["spectrum"], "k", 16);
        const dicke::Complex shift{get_or<double>(cfg["spectrum"], "shift_re", 0.0),
                                   get_or<double>(cfg["spectrum"], "shift_im", 0.0)};
        spec = dicke::low_lying_spectrum(L, k, shift, spectral);
      } else {
        spec = dicke::full_spectrum(L, spectral);
      }
      out.write_text("spectrum.csv", dicke::spectrum_csv(spec));
      out.write_text("gaps.json", dicke::gaps_json(spec.gaps, spec.units_tag));
      return finish(0);
    }

    if (task == "steady" || task == "wigner") {
      const auto L = dicke::build_liouvillian(params, atom_cap);
      const dicke::DensityMatrix rho = dicke::steady_state(L, spectral);
      if (task == "steady") {
        const auto ops = dicke::build_spin_operators(params.n_atoms, atom_cap);
        const auto [vx, vy] = dicke::transverse_variances(rho, ops);
        const auto pm = dicke::occupation_distribution(rho);
        json obs;
        obs["Sz_over_N"] = dicke::expectation(ops.s_z, rho).real() / params.n_atoms;
        obs["Sx_over_N"] = dicke::expectation(ops.s_x, rho).real() / params.n_atoms;
        obs["Sy_over_N"] = dicke::expectation(ops.s_y, rho).real() / params.n_atoms;
        obs["var_x"] = vx;
        obs["var_y"] = vy;
        obs["participation_ratio"] = pm.participation_ratio();
        out.write_text("steady_obs.json", obs.dump(2) + "\n");
        out.write_text("pm.csv", dicke::occupation_csv(pm));
      } else {
        const int n_theta = cfg.contains("wigner")
                                ? get_or<int>(cfg["wigner"], "n_theta", 181)
                                : 181;
        const int n_phi =
            cfg.contains("wigner") ? get_or<int>(cfg["wigner"], "n_phi", 360) : 360;
        const auto map = dicke::spin_wigner(rho, n_theta, n_phi, workers);
        if (!map.warning.empty()) std::cerr << "warning: " << map.warning << "\n";
        out.write_text("wigner.csv", dicke::wigner_csv(map));
        const auto bin = dicke::wigner_bin(map);
        out.write_binary("wigner.bin", bin.data(), bin.size());
      }
      return finish(0);
    }

    if (task == "evolve" || task == "fourier") {
      const dicke::EvolveOptions opts = evolve_options(cfg);
      const auto rho0 = dicke::all_down_state(params.n_atoms);
      const auto trace = dicke::evolve(params, rho0, opts);
      out.write_text("trace.csv", dicke::trace_csv(trace));
      if (task == "fourier") {
        double cut = 30.0;
        dicke::Window window = dicke::Window::hann;
        if (cfg.contains("fourier")) {
          cut = get_or<double>(cfg["fourier"], "transient_cut", cut);
          const std::string w = get_or<std::string>(cfg["fourier"], "window", "hann");
          if (w == "hann")
            window = dicke::Window::hann;
          else if (w == "rectangular")
            window = dicke::Window::rectangular;
          else
            throw ConfigError("fourier.window must be 'hann' or 'rectangular'");
        }
        const auto peaks = dicke::fourier_spectrum(trace, cut, window);
        out.write_text("fourier.csv", dicke::fourier_csv(peaks));
        json pk;
        pk["bin_width"] = peaks.bin_width;
        pk["window"] = (window == dicke::Window::hann) ? "hann" : "rectangular";
        pk["transient_cut"] = cut;
        pk["units"] = "NGamma/2 (angular)";
        pk["peaks"] = json::array();
        for (size_t i = 0; i < std::min<size_t>(8, peaks.peak_list.size()); ++i)
          pk["peaks"].push_back(
              {{"freq", peaks.peak_list[i].first}, {"amplitude", peaks.peak_list[i].second}});
        out.write_text("fourier_peaks.json", pk.dump(2) + "\n");
      }
      return finish(0);
    }

    if (task == "sweep-drive" || task == "sweep-squeeze" || task == "scan-size") {
      dicke::SweepPlan plan;
      plan.base = params;
      plan.spectral = spectral;
      plan.workers = workers;
      const json sweep = cfg.contains("sweep") ? cfg["sweep"] : json::object();
      if (sweep.contains("points")) {
        plan.points = sweep["points"].get<std::vector<double>>();
      } else if (task == "scan-size") {
        plan.points = {10, 20, 40, 80};
      } else {
        throw ConfigError("sweep.points is required for " + task);
      }
      plan.k = get_or<int>(sweep, "k", plan.k);
      plan.max_k = get_or<int>(sweep, "max_k", plan.max_k);
      plan.n_harmonics = get_or<int>(sweep, "n_harmonics", plan.n_harmonics);

      dicke::SweepTable table;
      if (task == "sweep-drive") {
        plan.axis = dicke::SweepAxis::drive;
        plan.want_gaps = get_or<bool>(sweep, "want_gaps", false);
        plan.want_observables = get_or<bool>(sweep, "want_observables", true);
        plan.want_variances = get_or<bool>(sweep, "want_variances", true);
        table = dicke::sweep_drive(plan);
      } else if (task == "sweep-squeeze") {
        plan.axis = dicke::SweepAxis::n_bar;
        plan.want_gaps = get_or<bool>(sweep, "want_gaps", true);
        plan.want_observables = get_or<bool>(sweep, "want_observables", false);
        plan.want_variances = get_or<bool>(sweep, "want_variances", false);
        table = dicke::sweep_squeeze(plan);
      } else {
        plan.axis = dicke::SweepAxis::size;
        plan.want_gaps = true;
        plan.want_observables = get_or<bool>(sweep, "want_observables", false);
        plan.want_variances = get_or<bool>(sweep, "want_variances", false);
        const auto scan = dicke::finite_size_scan(plan);
        out.write_text("sweep.csv", dicke::sweep_csv(scan.table));
        out.write_text("sweep.meta.json", dicke::sweep_meta_json(scan.table, kVersion));
        out.write_text("branches.csv", dicke::branches_csv(scan));
        return finish(0);
      }
      out.write_text("sweep.csv", dicke::sweep_csv(table));
      out.write_text("sweep.meta.json", dicke::sweep_meta_json(table, kVersion));
      return finish(0);
    }

    throw ConfigError("unknown task '" + task + "'");
  } catch (const dicke::SizeError& e) {
    std::cerr << "resource cap exceeded: " << e.what() << "\n";
    json diag{{"error", e.what()}, {"kind", "size"}, {"task", task}};
    out.write_text("error.json", diag.dump(2) + "\n");
    return finish(4);
  } catch (const ConfigError&) {
    throw;  // handled by main
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    json diag{{"error", e.what()}, {"kind", "numerical"}, {"task", task}};
    out.write_text("error.json", diag.dump(2) + "\n");
    return finish(3);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Driven Dicke systems in squeezed vacuum reservoirs"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough(true);

  std::string config_path, out_dir;
  std::vector<std::string> overrides;
  int workers = 1;
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--set", overrides, "override config entries, e.g. --set model.n_atoms=100");
  app.add_option("--out", out_dir, "output directory (default $DICKE_SIM_OUT or ./out)");
  app.add_option("--workers", workers, "parallel workers for sweeps and grids");

  const std::vector<std::string> tasks = {"spectrum",    "steady",        "evolve",
                                          "fourier",     "wigner",        "sweep-drive",
                                          "sweep-squeeze", "scan-size"};
  for (const auto& t : tasks) app.add_subcommand(t)->silent(false);
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json cfg = json::object();
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ConfigError("cannot open config file " + config_path);
      try {
        in >> cfg;
      } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
      }
    }
    for (const auto& ov : overrides) apply_set_override(cfg, ov);
    if (!out_dir.empty()) cfg["output_dir"] = out_dir;

    std::string task;
    for (const auto* sub : app.get_subcommands())
      task = sub->get_name();
    if (task.empty() && cfg.contains("task")) task = cfg["task"].get<std::string>();
    if (task.empty())
      throw ConfigError("no task given (subcommand or config 'task' entry required)");

    return run_task(task, std::move(cfg), workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
