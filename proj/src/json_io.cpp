#include "json_io.hpp"

#include "error.hpp"
#include "record_io.hpp"

#include <json.hpp>

#include <cmath>

namespace qtomo {

using nlohmann::json;

namespace {

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 1;
    int column = 1;
    const std::size_t stop = e.byte > 0 ? e.byte - 1 : 0;
    for (std::size_t k = 0; k < stop && k < text.size(); ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("malformed JSON", line, column);
  }
}

template <class T>
T get(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw SchemaError(key, "missing field");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(key, "wrong type");
  }
}

template <class T>
T get_or(const json& doc, const char* key, T fallback) {
  if (!doc.is_object() || !doc.contains(key)) return fallback;
  return get<T>(doc, key);
}

double finite(double v, const char* key) {
  if (!std::isfinite(v)) throw SchemaError(key, "must be finite");
  return v;
}

DeltaUnits units_of(const json& doc, std::optional<DeltaUnits> override_units) {
  if (override_units) return *override_units;
  const auto name = get_or<std::string>(doc, "delta_units", "ordinary");
  if (name == "ordinary") return DeltaUnits::Ordinary;
  if (name == "angular") return DeltaUnits::Angular;
  throw SchemaError("delta_units", "expected angular or ordinary, got " + name);
}

CMatrix complex_matrix(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains("real")) throw SchemaError(key, "needs a real part");
  const auto re = get<std::vector<std::vector<double>>>(doc, "real");
  std::vector<std::vector<double>> im;
  if (doc.contains("imag")) im = get<std::vector<std::vector<double>>>(doc, "imag");
  const auto n = static_cast<Eigen::Index>(re.size());
  if (n == 0) throw SchemaError(key, "empty matrix");
  if (!im.empty() && static_cast<Eigen::Index>(im.size()) != n) throw SchemaError(key, "real/imag shapes differ");
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = re[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != n) throw SchemaError(key, "matrix must be square");
    if (!im.empty() && im[static_cast<std::size_t>(i)].size() != row.size()) {
      throw SchemaError(key, "real/imag shapes differ");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      const double b = im.empty() ? 0.0 : im[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      m(i, j) = Complex(finite(row[static_cast<std::size_t>(j)], key), finite(b, key));
    }
  }
  return m;
}

json matrix_json(const CMatrix& m) {
  json re = json::array();
  json im = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    json c = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      r.push_back(m(i, j).real());
      c.push_back(m(i, j).imag());
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"real", re}, {"imag", im}};
}

Ladder5 ladder_from(const json& doc, DeltaUnits units) {
  Ladder5 lad;
  lad.rabi_omega = finite(get<double>(doc, "omega"), "omega");
  lad.delta1 = detuning_to_angular(finite(get_or<double>(doc, "delta1", 0.0), "delta1"), units);
  lad.delta2 = detuning_to_angular(finite(get_or<double>(doc, "delta2", 0.0), "delta2"), units);
  return lad;
}

HamiltonianSpec hamiltonian_from(const json& doc, DeltaUnits units) {
  const auto type = get_or<std::string>(doc, "type", "ladder5");
  if (type == "ladder5") return ladder_from(doc, units);
  if (type == "generic") return GenericHamiltonian{complex_matrix(doc, "hamiltonian")};
  throw SchemaError("hamiltonian", "unknown type " + type);
}

double gamma_from(const json& doc) {
  const double g = finite(get_or<double>(doc, "gamma", 0.0), "gamma");
  if (g < 0.0) throw SchemaError("gamma", "must be >= 0");
  return g;
}

EvolutionModel model_from(const json& doc, std::optional<DeltaUnits> units) {
  if (!doc.is_object() || !doc.contains("hamiltonian")) throw SchemaError("hamiltonian", "missing field");
  return EvolutionModel(hamiltonian_from(doc.at("hamiltonian"), units_of(doc, units)), gamma_from(doc));
}

DensityMatrix initial_state_from(const json& doc) {
  const int dim = get_or<int>(doc, "dim", 5);
  if (dim < 1) throw SchemaError("dim", "must be positive");
  if (!doc.contains("initial_state")) throw SchemaError("initial_state", "missing field");
  const json& init = doc.at("initial_state");
  if (init.is_object()) return DensityMatrix(complex_matrix(init, "initial_state"));
  if (!init.is_string()) throw SchemaError("initial_state", "expected a name or a matrix");
  const auto name = init.get<std::string>();
  if (name.rfind("basis:", 0) == 0) {
    int k = -1;
    try {
      k = std::stoi(name.substr(6));
    } catch (const std::exception&) {
      throw SchemaError("initial_state", "bad basis index in " + name);
    }
    if (k < 0 || k >= dim) throw SchemaError("initial_state", "basis index out of range");
    return DensityMatrix::basis_state(dim, k);
  }
  if (name.rfind("mF=", 0) == 0) {
    // sublevels are ordered m_F = +F ... -F
    int m = 0;
    try {
      m = std::stoi(name.substr(3));
    } catch (const std::exception&) {
      throw SchemaError("initial_state", "bad m_F label " + name);
    }
    const int index = (dim - 1) / 2 - m;
    if ((dim - 1) % 2 != 0 || index < 0 || index >= dim) {
      throw SchemaError("initial_state", "m_F label " + name + " does not fit dimension " + std::to_string(dim));
    }
    return DensityMatrix::basis_state(dim, index);
  }
  throw SchemaError("initial_state", "unknown state name " + name);
}

PreparationSchedule schedule_from(const json& doc, std::optional<DeltaUnits> override_units) {
  const DeltaUnits units = units_of(doc, override_units);
  PreparationSchedule schedule{initial_state_from(doc), {}};
  if (doc.contains("segments")) {
    if (!doc.at("segments").is_array()) throw SchemaError("segments", "expected an array");
    for (const json& seg : doc.at("segments")) {
      PreparationSegment s;
      s.duration = finite(get<double>(seg, "duration"), "duration");
      if (s.duration < 0.0) throw SchemaError("duration", "must be >= 0");
      s.hamiltonian = seg.contains("hamiltonian") ? hamiltonian_from(seg.at("hamiltonian"), units)
                                                  : HamiltonianSpec(ladder_from(seg, units));
      s.gamma = gamma_from(seg);
      if (hamiltonian_dim(s.hamiltonian) != schedule.initial.dim()) {
        throw SchemaError("segments", "segment dimension differs from the initial state");
      }
      schedule.segments.push_back(std::move(s));
    }
  }
  return schedule;
}

}  // namespace

EvolutionModel parse_model(std::string_view text, std::optional<DeltaUnits> units) {
  return model_from(parse_json(text), units);
}

EvolutionModel load_model(const std::filesystem::path& path, std::optional<DeltaUnits> units) {
  return parse_model(read_file(path), units);
}

ExperimentConfig parse_config(std::string_view text, std::optional<DeltaUnits> units) {
  const json doc = parse_json(text);
  ExperimentConfig cfg;
  cfg.delta_units = units_of(doc, units);
  const EvolutionModel model = model_from(doc, cfg.delta_units);
  cfg.hamiltonian = model.spec();
  cfg.gamma = model.gamma();
  cfg.sample_interval = finite(get_or<double>(doc, "sample_interval", cfg.sample_interval), "sample_interval");
  cfg.n_samples = get_or<int>(doc, "n_samples", cfg.n_samples);
  cfg.repeats = get_or<int>(doc, "repeats", cfg.repeats);
  cfg.atoms_per_shot = static_cast<long>(get_or<double>(doc, "atoms_per_shot", static_cast<double>(cfg.atoms_per_shot)));
  cfg.rng_seed = get_or<std::uint64_t>(doc, "rng_seed", cfg.rng_seed);
  cfg.noiseless = get_or<bool>(doc, "noiseless", cfg.noiseless);
  if (doc.contains("detuning_noise")) {
    const json& dn = doc.at("detuning_noise");
    DetuningNoise noise;
    noise.rms = detuning_to_angular(finite(get<double>(dn, "rms"), "rms"), cfg.delta_units);
    noise.correlation_time = finite(get_or<double>(dn, "correlation_time", noise.correlation_time), "correlation_time");
    noise.realizations = get_or<int>(dn, "realizations", noise.realizations);
    cfg.detuning_noise = noise;
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw SchemaError("config", e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::optional<DeltaUnits> units) {
  return parse_config(read_file(path), units);
}

PreparationSchedule parse_schedule(std::string_view text, std::optional<DeltaUnits> units) {
  return schedule_from(parse_json(text), units);
}

DensityMatrix parse_state(std::string_view text, std::optional<DeltaUnits> units) {
  const json doc = parse_json(text);
  if (doc.is_object() && doc.contains("rho")) return DensityMatrix(complex_matrix(doc.at("rho"), "rho"));
  if (doc.is_object() && doc.contains("rho0")) return DensityMatrix(complex_matrix(doc.at("rho0"), "rho0"));
  if (doc.is_object() && doc.contains("initial_state")) return run_preparation(schedule_from(doc, units));
  throw SchemaError("state", "expected rho, rho0 or initial_state");
}

DensityMatrix load_state(const std::filesystem::path& path, std::optional<DeltaUnits> units) {
  return parse_state(read_file(path), units);
}

std::string format_state_json(const DensityMatrix& rho) {
  json doc;
  doc["rho"] = matrix_json(rho.matrix());
  return doc.dump(2) + "\n";
}

std::string format_result_json(const ReconstructionResult& result, const ResultExtras& extras) {
  json doc;
  doc["rho0"] = matrix_json(result.rho0.matrix());
  doc["epsilon"] = result.epsilon;
  doc["fidelity"] = extras.fidelity ? json(*extras.fidelity) : json(nullptr);
  doc["gamma"] = result.gamma_used;
  doc["window"] = {result.window_start, result.window_end};
  json opt;
  opt["best_f"] = result.opt.best_f;
  opt["evaluations"] = result.opt.evals;
  opt["termination"] = to_string(result.opt.converged_by);
  opt["restarts"] = extras.restarts;
  opt["seed"] = extras.seed;
  opt["per_restart_f"] = result.opt.per_restart_f;
  doc["optimizer"] = opt;
  doc["warnings"] = extras.warnings;
  return doc.dump(2) + "\n";
}

std::string format_sweep_csv(const GammaSweepResult& sweep) {
  std::string out = "window_s,gamma,epsilon,is_opt\n";
  for (std::size_t k = 0; k < sweep.windows.size(); ++k) {
    for (std::size_t g = 0; g < sweep.gammas.size(); ++g) {
      const double e = sweep.error_surface(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(g));
      out += format_double(sweep.windows[k]) + ',' + format_double(sweep.gammas[g]) + ',' +
             (std::isfinite(e) ? format_double(e) : std::string("inf")) + ',' +
             (sweep.gamma_opt_index[k] == static_cast<int>(g) ? "1" : "0") + '\n';
    }
  }
  return out;
}

std::string format_sweep_json(const GammaSweepResult& sweep) {
  json doc;
  doc["windows"] = sweep.windows;
  doc["gammas"] = sweep.gammas;
  json surface = json::array();
  for (Eigen::Index k = 0; k < sweep.error_surface.rows(); ++k) {
    json row = json::array();
    for (Eigen::Index g = 0; g < sweep.error_surface.cols(); ++g) {
      const double e = sweep.error_surface(k, g);
      row.push_back(std::isfinite(e) ? json(e) : json(nullptr));
    }
    surface.push_back(row);
  }
  doc["error_surface"] = surface;
  doc["gamma_opt"] = sweep.gamma_opt;
  return doc.dump(2) + "\n";
}

std::string format_convergence_csv(const std::vector<ConvergencePoint>& points) {
  std::string out = "window_s,epsilon,infidelity\n";
  for (const auto& p : points) {
    out += format_double(p.window) + ',' + format_double(p.epsilon) + ',' +
           (p.infidelity ? format_double(*p.infidelity) : std::string()) + '\n';
  }
  return out;
}

}  // namespace qtomo
