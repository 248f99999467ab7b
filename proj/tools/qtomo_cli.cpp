// Command-line front end. Talks to the library only through the C API.

#include <qtomo/qtomo.h>

#include <CLI11.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <string>
#include <vector>

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

struct Failure {
  int exit_code;
  std::string message;
};

void check(qt_status status, const std::string& context) {
  if (status != QT_OK) {
    throw Failure{qt_status_exit_code(status), context + ": " + qt_status_name(status) + ": " + qt_last_error()};
  }
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using State = std::unique_ptr<qt_state, Deleter<qt_state, qt_state_free>>;
using Model = std::unique_ptr<qt_model, Deleter<qt_model, qt_model_free>>;
using Config = std::unique_ptr<qt_config, Deleter<qt_config, qt_config_free>>;
using Record = std::unique_ptr<qt_record, Deleter<qt_record, qt_record_free>>;
using Result = std::unique_ptr<qt_result, Deleter<qt_result, qt_result_free>>;
using Sweep = std::unique_ptr<qt_sweep, Deleter<qt_sweep, qt_sweep_free>>;
using Convergence = std::unique_ptr<qt_convergence, Deleter<qt_convergence, qt_convergence_free>>;

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (s.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw Failure{kExitValidation, "bad number '" + s + "' in " + what};
  }
  return v;
}

// "a:b:n" for n evenly spaced values from a to b, or a comma list.
std::vector<double> parse_grid(const std::string& spec, const std::string& what) {
  std::vector<std::string> parts;
  const char sep = spec.find(':') != std::string::npos ? ':' : ',';
  std::size_t start = 0;
  while (true) {
    const std::size_t at = spec.find(sep, start);
    parts.push_back(spec.substr(start, at == std::string::npos ? std::string::npos : at - start));
    if (at == std::string::npos) break;
    start = at + 1;
  }
  std::vector<double> out;
  if (sep == ':') {
    if (parts.size() != 3) throw Failure{kExitValidation, what + " must look like first:last:count"};
    const double a = parse_double(parts[0], what);
    const double b = parse_double(parts[1], what);
    int n = 0;
    const auto res = std::from_chars(parts[2].data(), parts[2].data() + parts[2].size(), n);
    if (res.ec != std::errc() || res.ptr != parts[2].data() + parts[2].size() || n < 1) {
      throw Failure{kExitValidation, what + " count must be a positive integer"};
    }
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    if (n > 1) out.back() = b;
  } else {
    for (const auto& p : parts) out.push_back(parse_double(p, what));
  }
  return out;
}

struct Common {
  std::uint64_t seed = 0;
  bool seed_set = false;
  int restarts = 0;
  int threads = 0;
  std::string delta_units;
  bool noiseless = false;
  bool unweighted = false;
  bool no_refine = false;

  qt_delta_units units() const {
    if (delta_units == "angular") return QT_DELTA_ANGULAR;
    if (delta_units == "ordinary") return QT_DELTA_ORDINARY;
    return QT_DELTA_DEFAULT;
  }

  qt_solver_options solver() const {
    qt_solver_options o;
    qt_solver_options_init(&o);
    if (seed_set) o.seed = seed;
    if (restarts > 0) o.restarts = restarts;
    o.threads = threads;
    o.unweighted = unweighted ? 1 : 0;
    o.refine = no_refine ? 0 : 1;
    return o;
  }
};

Record load_record(const std::string& path) {
  qt_record* r = nullptr;
  check(qt_record_load(path.c_str(), &r), "loading " + path);
  return Record(r);
}

Model load_model(const std::string& path, const Common& c) {
  qt_model* m = nullptr;
  check(qt_model_load(path.c_str(), c.units(), &m), "loading " + path);
  return Model(m);
}

State load_state(const std::string& path, const Common& c) {
  qt_state* s = nullptr;
  check(qt_state_load(path.c_str(), c.units(), &s), "loading " + path);
  return State(s);
}

void print_warnings(const qt_record* record) {
  for (int k = 0; k < qt_record_warning_count(record); ++k) {
    std::fprintf(stderr, "warning: %s\n", qt_record_warning(record, k));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum state tomography from time-resolved sublevel populations"};
  app.require_subcommand(1);
  app.fallthrough();

  Common common;
  app.add_option("--seed", common.seed, "RNG seed (simulation noise and optimizer starts)")
      ->each([&](const std::string&) { common.seed_set = true; });
  app.add_option("--restarts", common.restarts, "Multi-start count")->check(CLI::PositiveNumber);
  app.add_option("--threads", common.threads, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--delta-units", common.delta_units, "Units of ladder detunings in input files")
      ->check(CLI::IsMember({"angular", "ordinary"}));
  app.add_flag("--noiseless", common.noiseless, "Simulate exact populations with floor sigmas");
  app.add_flag("--unweighted", common.unweighted, "Use unit weights in the reconstruction error");
  app.add_flag("--no-refine", common.no_refine, "Skip the least-squares refinement stage");

  std::string config_path, state_path, out_path, record_path, model_path, reference_path;
  std::string windows_spec, gammas_spec, a_path, b_path;
  double gamma = -1.0;

  auto* simulate = app.add_subcommand("simulate", "Synthesize a measurement record");
  simulate->add_option("--config", config_path, "Experiment config JSON")->required();
  simulate->add_option("--state", state_path, "State, result or preparation schedule JSON")->required();
  simulate->add_option("--out", out_path, "Record CSV (sidecar written next to it)")->required();

  auto* recon = app.add_subcommand("reconstruct", "Reconstruct the initial state of a record");
  recon->add_option("--record", record_path, "Record CSV")->required();
  recon->add_option("--model", model_path, "Model JSON")->required();
  recon->add_option("--gamma", gamma, "Dephasing rate override (1/s)")->check(CLI::NonNegativeNumber);
  recon->add_option("--reference", reference_path, "Known state for the fidelity");
  recon->add_option("--out", out_path, "Result JSON")->required();

  auto* sweep = app.add_subcommand("sweep-gamma", "Reconstruction error over windows and dephasing rates");
  sweep->add_option("--record", record_path, "Record CSV")->required();
  sweep->add_option("--model", model_path, "Model JSON")->required();
  sweep->add_option("--windows", windows_spec, "first:last:count or a comma list (s)")->required();
  sweep->add_option("--gammas", gammas_spec, "first:last:count or a comma list (1/s)")->required();
  sweep->add_option("--out", out_path, "Sweep CSV (or .json)")->required();

  auto* fid = app.add_subcommand("fidelity", "Uhlmann fidelity of two states");
  fid->add_option("--a", a_path, "First state JSON")->required();
  fid->add_option("--b", b_path, "Second state JSON")->required();

  auto* conv = app.add_subcommand("converge", "Reconstruction quality against the window length");
  conv->add_option("--record", record_path, "Record CSV")->required();
  conv->add_option("--model", model_path, "Model JSON")->required();
  conv->add_option("--reference", reference_path, "Known state for 1 - F");
  conv->add_option("--windows", windows_spec, "first:last:count or a comma list (s); default every record time");
  conv->add_option("--out", out_path, "Convergence CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (simulate->parsed()) {
      qt_config* raw = nullptr;
      check(qt_config_load(config_path.c_str(), common.units(), &raw), "loading " + config_path);
      Config cfg(raw);
      if (common.seed_set) check(qt_config_set_seed(cfg.get(), common.seed), "seed");
      if (common.noiseless) check(qt_config_set_noiseless(cfg.get(), 1), "noiseless");
      State state = load_state(state_path, common);
      qt_record* rec = nullptr;
      check(qt_simulate(cfg.get(), state.get(), &rec), "simulate");
      Record record(rec);
      print_warnings(record.get());
      check(qt_record_save(record.get(), out_path.c_str()), "writing " + out_path);
      std::printf("wrote %d time points x %d sublevels to %s\n", qt_record_num_times(record.get()),
                  qt_record_dim(record.get()), out_path.c_str());
    } else if (recon->parsed()) {
      Record record = load_record(record_path);
      print_warnings(record.get());
      Model model = load_model(model_path, common);
      if (gamma >= 0.0) {
        qt_model* m = nullptr;
        check(qt_model_with_gamma(model.get(), gamma, &m), "gamma");
        model.reset(m);
      }
      State reference;
      if (!reference_path.empty()) reference = load_state(reference_path, common);
      const qt_solver_options opts = common.solver();
      qt_result* res = nullptr;
      check(qt_reconstruct(record.get(), model.get(), &opts, &res), "reconstruct");
      Result result(res);
      check(qt_result_save(result.get(), reference.get(), out_path.c_str()), "writing " + out_path);
      std::printf("epsilon %.6g\n", qt_result_epsilon(result.get()));
      if (reference) {
        qt_state* s = nullptr;
        check(qt_result_state(result.get(), &s), "result state");
        State rho0(s);
        double f = 0.0;
        check(qt_fidelity(rho0.get(), reference.get(), &f), "fidelity");
        std::printf("fidelity %.6f\n", f);
      }
    } else if (sweep->parsed()) {
      Record record = load_record(record_path);
      print_warnings(record.get());
      Model model = load_model(model_path, common);
      const auto windows = parse_grid(windows_spec, "--windows");
      const auto gammas = parse_grid(gammas_spec, "--gammas");
      const qt_solver_options opts = common.solver();
      qt_sweep* raw = nullptr;
      check(qt_sweep_gamma(record.get(), model.get(), windows.data(), static_cast<int>(windows.size()),
                           gammas.data(), static_cast<int>(gammas.size()), &opts, &raw),
            "sweep-gamma");
      Sweep result(raw);
      check(qt_sweep_save(result.get(), out_path.c_str()), "writing " + out_path);
      std::vector<double> opt(windows.size());
      check(qt_sweep_gamma_opt(result.get(), opt.data()), "gamma_opt");
      for (std::size_t k = 0; k < windows.size(); ++k) {
        std::printf("window %.6g s  gamma_opt %.6g\n", windows[k], opt[k]);
      }
    } else if (fid->parsed()) {
      State a = load_state(a_path, common);
      State b = load_state(b_path, common);
      double f = 0.0;
      check(qt_fidelity(a.get(), b.get(), &f), "fidelity");
      std::printf("%.12f\n", f);
    } else if (conv->parsed()) {
      Record record = load_record(record_path);
      print_warnings(record.get());
      Model model = load_model(model_path, common);
      State reference;
      if (!reference_path.empty()) reference = load_state(reference_path, common);
      std::vector<double> windows;
      if (windows_spec.empty()) {
        std::vector<double> times(static_cast<std::size_t>(qt_record_num_times(record.get())));
        check(qt_record_times(record.get(), times.data()), "times");
        windows.assign(times.begin() + 1, times.end());
      } else {
        windows = parse_grid(windows_spec, "--windows");
      }
      const qt_solver_options opts = common.solver();
      qt_convergence* raw = nullptr;
      check(qt_converge(record.get(), model.get(), windows.data(), static_cast<int>(windows.size()),
                        reference.get(), &opts, &raw),
            "converge");
      Convergence result(raw);
      check(qt_convergence_save(result.get(), out_path.c_str()), "writing " + out_path);
      for (int k = 0; k < qt_convergence_size(result.get()); ++k) {
        double w = 0.0, eps = 0.0, inf = 0.0;
        check(qt_convergence_point(result.get(), k, &w, &eps, &inf), "point");
        if (std::isnan(inf)) {
          std::printf("window %.6g s  epsilon %.6g\n", w, eps);
        } else {
          std::printf("window %.6g s  epsilon %.6g  1-F %.6g\n", w, eps, inf);
        }
      }
    }
  } catch (const Failure& f) {
    std::fprintf(stderr, "error: %s\n", f.message.c_str());
    return f.exit_code;
  }
  return 0;
}
