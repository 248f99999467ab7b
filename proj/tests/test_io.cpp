#include "error.hpp"
#include "experiment.hpp"
#include "json_io.hpp"
#include "oracles.hpp"
#include "record_io.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>

using namespace qtomo;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("qtomo_io_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig default_config(std::uint64_t seed = 1) {
  ExperimentConfig cfg;
  cfg.hamiltonian = Ladder5{oracle::kTwoPi * 60e3, oracle::kTwoPi * 3e3, oracle::kTwoPi * 11e3};
  cfg.rng_seed = seed;
  return cfg;
}

MeasurementRecord small_record() {
  MeasurementRecord r;
  r.dim = 2;
  r.times = {0.0, 1e-6, 2e-6};
  r.means.resize(2, 3);
  r.means << 0.1, 0.3333333333333333, 0.7, 0.9, 0.6666666666666667, 0.3;
  r.sigmas = RMatrix::Constant(2, 3, 0.01);
  r.sigmas(1, 2) = 2.3456789012345678e-3;
  return r;
}

}  // namespace

TEST(RecordCsv, RoundTripIsBitExact) {
  const MeasurementRecord r = synthesize_record(DensityMatrix::basis_state(5, 0), default_config());
  const MeasurementRecord back = parse_record_csv(format_record_csv(r), r);
  EXPECT_EQ(back.times, r.times);
  EXPECT_EQ(back.means, r.means);
  EXPECT_EQ(back.sigmas, r.sigmas);
}

TEST(RecordCsv, FileRoundTripWithSidecar) {
  const fs::path csv = scratch_dir() / "rec.csv";
  MeasurementRecord r = small_record();
  r.repeats = 7;
  r.atoms_per_shot = 12345.0;
  r.sigma_kind = SigmaKind::StandardError;
  save_record(r, csv);
  ASSERT_TRUE(fs::exists(sidecar_path(csv)));
  EXPECT_EQ(sidecar_path(csv).filename(), "rec.meta.json");
  const MeasurementRecord back = load_record(csv);
  EXPECT_EQ(back.dim, 2);
  EXPECT_EQ(back.repeats, 7);
  EXPECT_EQ(back.atoms_per_shot, 12345.0);
  EXPECT_EQ(back.sigma_kind, SigmaKind::StandardError);
  EXPECT_EQ(back.means, r.means);
  EXPECT_EQ(back.sigmas, r.sigmas);
}

TEST(RecordCsv, NonMonotoneTimesRejected) {
  const std::string text =
      "time_s,p_1,p_2,sigma_1,sigma_2\n"
      "0,0.5,0.5,0.01,0.01\n"
      "2e-6,0.5,0.5,0.01,0.01\n"
      "1e-6,0.5,0.5,0.01,0.01\n";
  try {
    parse_record_csv(text);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "times");
  }
}

TEST(RecordCsv, ZeroSigmaFlooredWithWarning) {
  const std::string text =
      "time_s,p_1,p_2,sigma_1,sigma_2\n"
      "0,0.5,0.5,0,0.01\n"
      "1e-6,0.5,0.5,0.01,0.01\n";
  MeasurementRecord defaults;
  defaults.repeats = 5;
  defaults.atoms_per_shot = 8e4;
  const MeasurementRecord r = parse_record_csv(text, defaults);
  EXPECT_DOUBLE_EQ(r.sigmas(0, 0), sigma_floor(5, 8e4));
  EXPECT_EQ(r.sigmas(1, 0), 0.01);
  EXPECT_FALSE(r.warnings.empty());
}

TEST(RecordCsv, NegativeSigmaIsSchemaError) {
  const std::string text =
      "time_s,p_1,p_2,sigma_1,sigma_2\n"
      "0,0.5,0.5,-0.01,0.01\n"
      "1e-6,0.5,0.5,0.01,0.01\n";
  try {
    parse_record_csv(text);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "sigmas");
  }
}

TEST(RecordCsv, ParseErrorsCarryLocation) {
  try {
    parse_record_csv("time_s,p_1,p_2,sigma_1,sigma_2\n0,0.5,abc,0.01,0.01\n1e-6,0.5,0.5,0.01,0.01\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 7);
  }
  try {
    parse_record_csv("time_s,p_1,p_2,sigma_1,sigma_2\n0,0.5,0.5,0.01\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  try {
    parse_record_csv("time,p_1,sigma_1\n0,1,0.01\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
  }
  EXPECT_THROW(parse_record_csv(""), ParseError);
}

TEST(RecordCsv, NormalizationOutsideSlackRejected) {
  const std::string text =
      "time_s,p_1,p_2,sigma_1,sigma_2\n"
      "0,0.5,0.55,0.01,0.01\n"
      "1e-6,0.5,0.5,0.01,0.01\n";
  try {
    parse_record_csv(text);
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "normalization");
  }
}

TEST(RecordCsv, SidecarDimensionMismatchRejected) {
  const fs::path csv = scratch_dir() / "mismatch.csv";
  save_record(small_record(), csv);
  std::ofstream(sidecar_path(csv)) << R"({"dim": 5, "repeats": 5, "atoms_per_shot": 80000})";
  EXPECT_THROW(load_record(csv), SchemaError);
  std::ofstream(sidecar_path(csv)) << "{ not json";
  EXPECT_THROW(load_record(csv), ParseError);
}

TEST(RecordCsv, MissingFileIsIoError) {
  try {
    load_record(scratch_dir() / "does_not_exist.csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(RecordCsv, ShortestDoubleFormat) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
  EXPECT_EQ(std::stod(format_double(1.16e-6)), 1.16e-6);
}

TEST(JsonModel, Ladder5Units) {
  const std::string doc =
      R"({"hamiltonian": {"type": "ladder5", "omega": 376991.11843077515, "delta1": 3000, "delta2": 11000},
          "gamma": 400})";
  const EvolutionModel ordinary = parse_model(doc);
  EXPECT_LT(oracle::max_abs(ordinary.hamiltonian() -
                            oracle::ladder(oracle::kTwoPi * 60e3, oracle::kTwoPi * 3e3, oracle::kTwoPi * 11e3)),
            1e-9);
  EXPECT_EQ(ordinary.gamma(), 400.0);
  const EvolutionModel angular = parse_model(doc, DeltaUnits::Angular);
  EXPECT_EQ(angular.hamiltonian()(1, 1).real(), -3000.0);
}

TEST(JsonModel, GenericAndErrors) {
  const EvolutionModel m = parse_model(
      R"({"hamiltonian": {"type": "generic", "real": [[1, 2], [2, -1]], "imag": [[0, 0.5], [-0.5, 0]]}, "gamma": 0})");
  EXPECT_EQ(m.dim(), 2);
  EXPECT_EQ(m.hamiltonian()(0, 1), Complex(2.0, 0.5));
  EXPECT_THROW(parse_model(R"({"hamiltonian": {"type": "generic", "real": [[1, 2], [0, -1]]}, "gamma": 0})"), Error);
  EXPECT_THROW(parse_model(R"({"hamiltonian": {"type": "ladder7"}, "gamma": 0})"), SchemaError);
  EXPECT_THROW(parse_model(R"({"gamma": 0})"), SchemaError);
  EXPECT_THROW(parse_model(R"({"hamiltonian": )"), ParseError);
}

TEST(JsonSchedule, InitialStates) {
  const DensityMatrix top = parse_schedule(R"({"initial_state": "mF=+2", "segments": []})").initial;
  EXPECT_EQ(top(0, 0), Complex(1.0, 0.0));
  const DensityMatrix bottom = parse_schedule(R"({"initial_state": "mF=-2", "segments": []})").initial;
  EXPECT_EQ(bottom(4, 4), Complex(1.0, 0.0));
  const DensityMatrix b = parse_schedule(R"({"initial_state": "basis:1", "dim": 3, "segments": []})").initial;
  EXPECT_EQ(b.dim(), 3);
  EXPECT_EQ(b(1, 1), Complex(1.0, 0.0));
  EXPECT_THROW(parse_schedule(R"({"initial_state": "basis:9", "segments": []})"), SchemaError);
  EXPECT_THROW(parse_schedule(R"({"initial_state": "mF=+3", "segments": []})"), SchemaError);
}

TEST(JsonSchedule, SegmentMatchesRk4) {
  const double omega = oracle::kTwoPi * 60e3;
  const auto sched = parse_schedule(
      R"({"initial_state": "mF=+2", "delta_units": "ordinary",
          "segments": [{"duration": 2e-6, "omega": 376991.11843077515, "delta1": 3000, "delta2": 11000, "gamma": 0}]})");
  const DensityMatrix rho = run_preparation(sched);
  oracle::M rho0 = oracle::M::Zero(5, 5);
  rho0(0, 0) = 1.0;
  const oracle::M expected =
      oracle::rk4(oracle::ladder(omega, oracle::kTwoPi * 3e3, oracle::kTwoPi * 11e3), 0.0, rho0, 2e-6, 1e-10);
  EXPECT_LT(oracle::max_abs(rho.matrix() - expected), 1e-8);
}

TEST(JsonState, RoundTripAndSources) {
  std::mt19937_64 rng(4);
  const DensityMatrix rho(oracle::random_density(5, rng));
  const DensityMatrix back = parse_state(format_state_json(rho));
  EXPECT_EQ(back.matrix(), rho.matrix());
  const DensityMatrix prepared = parse_state(R"({"initial_state": "basis:0", "dim": 2, "segments": []})");
  EXPECT_EQ(prepared(0, 0), Complex(1.0, 0.0));
}

TEST(JsonConfig, FieldsAndValidation) {
  const ExperimentConfig cfg = parse_config(
      R"({"hamiltonian": {"type": "ladder5", "omega": 1e5, "delta1": 10, "delta2": 20}, "gamma": 5,
          "sample_interval": 2e-6, "n_samples": 9, "repeats": 3, "atoms_per_shot": 1000, "rng_seed": 17,
          "detuning_noise": {"rms": 100, "correlation_time": 1e-5, "realizations": 4}})");
  EXPECT_EQ(cfg.sample_interval, 2e-6);
  EXPECT_EQ(cfg.n_samples, 9);
  EXPECT_EQ(cfg.repeats, 3);
  EXPECT_EQ(cfg.atoms_per_shot, 1000);
  EXPECT_EQ(cfg.rng_seed, 17u);
  ASSERT_TRUE(cfg.detuning_noise.has_value());
  EXPECT_NEAR(cfg.detuning_noise->rms, oracle::kTwoPi * 100.0, 1e-9);
  EXPECT_EQ(cfg.detuning_noise->realizations, 4);
  EXPECT_THROW(parse_config(R"({"hamiltonian": {"type": "ladder5", "omega": 1, "delta1": 0, "delta2": 0},
                                "gamma": 0, "n_samples": 1})"),
               SchemaError);
}

TEST(JsonResult, ContainsRequiredFields) {
  ReconstructionResult r{DensityMatrix::maximally_mixed(2), 0.01, {}, 0.0, 0.0, 3e-5};
  r.opt.best_f = 0.01;
  r.opt.evals = 123;
  r.opt.per_restart_f = {0.01, 0.02};
  const auto doc = nlohmann::json::parse(format_result_json(r, {0.99, {"w"}, 2, 7}));
  EXPECT_EQ(doc.at("epsilon").get<double>(), 0.01);
  EXPECT_EQ(doc.at("fidelity").get<double>(), 0.99);
  EXPECT_EQ(doc.at("optimizer").at("evaluations").get<long>(), 123);
  EXPECT_EQ(doc.at("optimizer").at("seed").get<int>(), 7);
  EXPECT_EQ(doc.at("warnings").size(), 1u);
  EXPECT_EQ(parse_state(format_result_json(r)).matrix(), r.rho0.matrix());
  EXPECT_TRUE(nlohmann::json::parse(format_result_json(r)).at("fidelity").is_null());
}

TEST(Synthesis, NoiselessMeansAreExact) {
  ExperimentConfig cfg = default_config();
  cfg.noiseless = true;
  const DensityMatrix rho = DensityMatrix::basis_state(5, 0);
  const MeasurementRecord r = synthesize_record(rho, cfg);
  const auto oracle_pops = oracle::rk4_populations(
      oracle::ladder(oracle::kTwoPi * 60e3, oracle::kTwoPi * 3e3, oracle::kTwoPi * 11e3), 0.0, rho.matrix(),
      cfg.sample_interval, cfg.n_samples, 1e-9);
  for (int j = 0; j < cfg.n_samples; ++j) {
    EXPECT_LT((r.means.col(j) - oracle_pops[static_cast<std::size_t>(j)]).cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_TRUE((r.sigmas.array() == sigma_floor(cfg.repeats, 8e4)).all());
}

TEST(Synthesis, ZeroDriveIsStationary) {
  ExperimentConfig cfg = default_config();
  cfg.hamiltonian = Ladder5{0.0, oracle::kTwoPi * 3e3, oracle::kTwoPi * 11e3};
  cfg.noiseless = true;
  const MeasurementRecord r = synthesize_record(DensityMatrix::basis_state(5, 2), cfg);
  for (int j = 0; j < cfg.n_samples; ++j) {
    EXPECT_NEAR(r.means(2, j), 1.0, 1e-12);
  }
}

TEST(Synthesis, NoiseStatistics) {
  ExperimentConfig cfg = default_config(11);
  cfg.n_samples = 40;
  std::mt19937_64 rng(5);
  const DensityMatrix rho(oracle::random_density(5, rng));
  const MeasurementRecord r = synthesize_record(rho, cfg);
  ExperimentConfig exact_cfg = cfg;
  exact_cfg.noiseless = true;
  const RMatrix p = synthesize_record(rho, exact_cfg).means;
  int within = 0;
  int total = 0;
  for (int j = 0; j < cfg.n_samples; ++j) {
    const double sum = r.means.col(j).sum();
    EXPECT_GE(sum, 0.98);
    EXPECT_LE(sum, 1.02);
    for (int i = 0; i < 5; ++i) {
      const double pij = p(i, j);
      if (pij < 0.05) continue;
      const double expected = std::sqrt(pij * (1.0 - pij) / 8e4);
      ++total;
      if (r.sigmas(i, j) > expected / 2.0 && r.sigmas(i, j) < expected * 2.0) ++within;
    }
  }
  // sample sd from 5 repeats: most entries land within a factor of two
  ASSERT_GT(total, 50);
  EXPECT_GT(static_cast<double>(within) / total, 0.8);
}

TEST(Synthesis, DeterministicForSeed) {
  std::mt19937_64 rng(6);
  const DensityMatrix rho(oracle::random_density(5, rng));
  const std::string a = format_record_csv(synthesize_record(rho, default_config(3)));
  const std::string b = format_record_csv(synthesize_record(rho, default_config(3)));
  const std::string c = format_record_csv(synthesize_record(rho, default_config(4)));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Synthesis, EmittedRecordsLoad) {
  const fs::path dir = scratch_dir();
  std::mt19937_64 rng(7);
  for (int k = 0; k < 5; ++k) {
    const DensityMatrix rho(oracle::random_density(5, rng));
    ExperimentConfig cfg = default_config(static_cast<std::uint64_t>(k));
    if (k == 4) cfg.detuning_noise = DetuningNoise{oracle::kTwoPi * 500.0, 50e-6, 8};
    const MeasurementRecord r = synthesize_record(rho, cfg);
    const fs::path csv = dir / ("emit" + std::to_string(k) + ".csv");
    save_record(r, csv);
    const MeasurementRecord back = load_record(csv);
    EXPECT_EQ(back.means, r.means);
    EXPECT_EQ(back.sigmas, r.sigmas);
  }
}

TEST(Synthesis, DetuningNoiseAveragesTowardsDephasing) {
  // Without noise the averaged populations reduce to the plain model.
  ExperimentConfig cfg = default_config();
  cfg.noiseless = true;
  const DensityMatrix rho = DensityMatrix::basis_state(5, 0);
  const RMatrix plain = expected_populations(rho, cfg);
  cfg.detuning_noise = DetuningNoise{0.0, 50e-6, 16};
  EXPECT_LT((expected_populations(rho, cfg) - plain).cwiseAbs().maxCoeff(), 1e-12);
  cfg.detuning_noise = DetuningNoise{oracle::kTwoPi * 2e3, 50e-6, 16};
  EXPECT_GT((expected_populations(rho, cfg) - plain).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(Multinomial, CountsSumAndMean) {
  std::mt19937_64 rng(8);
  RVector p(3);
  p << 0.2, 0.5, 0.3;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  for (int k = 0; k < 200; ++k) {
    const auto c = sample_multinomial(p, 10000, rng);
    ASSERT_EQ(c[0] + c[1] + c[2], 10000);
    for (int i = 0; i < 3; ++i) acc[i] += static_cast<double>(c[static_cast<std::size_t>(i)]);
  }
  acc /= 200.0 * 10000.0;
  EXPECT_NEAR(acc[0], 0.2, 2e-3);
  EXPECT_NEAR(acc[1], 0.5, 2e-3);
}
