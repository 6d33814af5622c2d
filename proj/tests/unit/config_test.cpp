#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "pmcmc/config.hpp"
#include "pmcmc/errors.hpp"
#include "pmcmc/io.hpp"

namespace pmcmc {
namespace {

namespace fs = std::filesystem;

std::string location_of(std::string_view json) {
  try {
    (void)parse_config(json);
  } catch (const ConfigError& e) {
    return e.location();
  }
  return "<accepted>";
}

constexpr std::string_view kMinimal = R"({
  "version": 1,
  "model": {"name": "linear-gaussian"},
  "prior": {"a": {"uniform": [-1, 1]}}
})";

TEST(Config, MinimalDefaults) {
  const auto c = parse_config(kMinimal);
  EXPECT_EQ(c.model.name, "linear-gaussian");
  EXPECT_EQ(c.initial, (Parameters{{"a", 0.9}}));
  EXPECT_EQ(c.synth_parameters, c.initial);
  EXPECT_EQ(c.samples, 1u);
  EXPECT_EQ(c.particles, 64u);
  EXPECT_EQ(c.resampling, ResamplingScheme::kMultinomial);
  EXPECT_EQ(c.synth_times.size(), 10u);
}

TEST(Config, SerializeRoundTrip) {
  for (const char* name : {"ibm_desk.json", "ibm_full.json", "linear_gaussian.json"}) {
    const auto c = load_config(fs::path(PMCMC_SOURCE_DIR) / "configs" / name);
    EXPECT_EQ(parse_config(serialize_config(c)), c) << name;
    EXPECT_EQ(serialize_config(parse_config(serialize_config(c))), serialize_config(c)) << name;
  }
}

TEST(Config, PriorKeyOrderIsParameterOrder) {
  const auto c = parse_config(R"({"version": 1, "model": {"name": "ibm", "preset": "desk"},
    "prior": {"K_pred": {"uniform": [1, 60]}, "K_prey": {"lognormal": [3, 0.5]}}})");
  ASSERT_EQ(c.prior.size(), 2u);
  EXPECT_EQ(c.prior.terms()[0].first, "K_pred");
  EXPECT_TRUE(std::ranges::equal(c.initial.names(), std::vector<std::string>{"K_pred", "K_prey"}));
}

TEST(Config, ErrorsCarryJsonPointers) {
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "sampels": 3})"), "/sampels");
  EXPECT_EQ(location_of(R"({"version": 2, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}})"), "/version");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"beta": [1, 1]}}})"), "/prior/a/beta");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [1, -1]}}})"), "/prior/a/uniform");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "particles": 0})"), "/particles");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "particles": -3})"), "/particles");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "initial": {"a": 5}})"), "/initial");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "proposal_scales": {"a": 1, "b": 1}})"), "/proposal_scales/b");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "linear-gaussian"},
    "prior": {"a": {"uniform": [-1, 1]}}, "synth": {"times": [1, 3, 2]}})"), "/synth/times/2");
  EXPECT_EQ(location_of(R"({"version": 1, "model": {"name": "nope"},
    "prior": {"a": {"uniform": [-1, 1]}}})"), "/model/name");
  EXPECT_EQ(location_of(R"({"version": 1, "prior": {"a": {"uniform": [-1, 1]}}})"), "/model");
  EXPECT_EQ(location_of("{not json"), "");
}

ObservationSeries read_csv(const std::string& text) {
  std::istringstream in(text);
  return read_observations(in, "obs.csv");
}

std::string csv_location(const std::string& text) {
  try {
    (void)read_csv(text);
  } catch (const ConfigError& e) {
    return e.location();
  }
  return "<accepted>";
}

TEST(ObservationCsv, RoundTrip) {
  const ObservationSeries s({"prey", "pred"}, {50, 55}, {{1.5, 0.1}, {2e-300, 3.0}});
  std::ostringstream out;
  write_observations(out, s);
  const auto back = read_csv(out.str());
  EXPECT_TRUE(std::ranges::equal(back.fields(), s.fields()));
  EXPECT_TRUE(std::ranges::equal(back.times(), s.times()));
  EXPECT_EQ(back.record(1)[0], 2e-300);
}

TEST(ObservationCsv, ErrorsCarryLineNumbers) {
  EXPECT_EQ(csv_location(""), "obs.csv");
  EXPECT_EQ(csv_location("t,y\n1,2\n"), "obs.csv:1");
  EXPECT_EQ(csv_location("time,y\n1,2\n2\n"), "obs.csv:3");
  EXPECT_EQ(csv_location("time,y\n1,2\nx,3\n"), "obs.csv:3:time");
  EXPECT_EQ(csv_location("time,y\n1,2\n1,3\n"), "obs.csv:3:time");
  EXPECT_EQ(csv_location("time,y\n1,2\n2,abc\n"), "obs.csv:3:y");
  EXPECT_EQ(csv_location("time,y\n1,inf\n"), "obs.csv:2:y");
  EXPECT_EQ(csv_location("time,y\n"), "obs.csv");
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("pmcmc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(std::string_view body) {
    const auto path = dir_ / "config.json";
    std::ofstream(path) << body;
    return path;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  static std::size_t lines(const fs::path& p) {
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) ++n;
    return n;
  }

  fs::path dir_;
};

constexpr std::string_view kSmallIbm = R"({
  "version": 1,
  "model": {"name": "ibm", "preset": "desk"},
  "prior": {"K_prey": {"uniform": [1, 100]}, "K_pred": {"uniform": [1, 60]}},
  "proposal_scales": {"K_prey": 2, "K_pred": 1},
  "samples": 3, "particles": 12, "workers": 3, "seed": 5,
  "synth": {"times": [50, 55, 60]}
})";

TEST_F(CliTest, SynthIsDeterministic) {
  std::ostringstream log;
  const auto loaded = cli::load(write_config(kSmallIbm), {});
  EXPECT_EQ(loaded.data_path, dir_ / "observations.csv");
  const auto first = slurp(cli::cmd_synth(loaded, log));
  const auto second = slurp(cli::cmd_synth(loaded, log));
  EXPECT_EQ(first, second);
  EXPECT_EQ(lines(loaded.data_path), 4u);
  EXPECT_EQ(first.substr(0, first.find('\n')), "time,prey,predator");
  const auto other = cli::load(write_config(kSmallIbm), {.seed = 6});
  EXPECT_NE(slurp(cli::cmd_synth(other, log)), first);
}

TEST_F(CliTest, RunWritesAllOutputs) {
  std::ostringstream log;
  const auto loaded = cli::load(write_config(kSmallIbm), {});
  (void)cli::cmd_synth(loaded, log);
  const auto summary = cli::cmd_run(loaded, log);
  EXPECT_EQ(summary.samples, 3u);
  const auto out = dir_ / "out";
  EXPECT_EQ(lines(out / "chain.csv"), 4u);
  EXPECT_EQ(lines(out / "summary.csv"), 4u);
  const auto chain = slurp(out / "chain.csv");
  EXPECT_EQ(chain.substr(0, chain.find('\n')),
            "sample,theta_K_prey,theta_K_pred,log_likelihood,log_std,log_prior,accepted");
  for (const char* f : {"diagnostics.csv", "stages.csv", "events.log", "config.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  // The effective config reloads to the same thing.
  EXPECT_EQ(load_config(out / "config.json").seed, 5u);
}

TEST_F(CliTest, SingleSampleRun) {
  std::ostringstream log;
  auto loaded = cli::load(write_config(kSmallIbm), {.output = dir_ / "one"});
  loaded.config.samples = 1;
  (void)cli::cmd_synth(loaded, log);
  EXPECT_TRUE(fs::exists(dir_ / "one" / "observations.csv"));
  loaded.data_path = dir_ / "one" / "observations.csv";
  const auto summary = cli::cmd_run(loaded, log);
  EXPECT_EQ(summary.samples, 1u);
  EXPECT_EQ(lines(dir_ / "one" / "chain.csv"), 2u);
}

TEST_F(CliTest, WorkerOverrideKeepsChainBytes) {
  std::ostringstream log;
  const auto base = cli::load(write_config(kSmallIbm), {});
  (void)cli::cmd_synth(base, log);
  std::string reference;
  for (std::size_t w : {1, 2, 5}) {
    auto loaded = cli::load(write_config(kSmallIbm), {.workers = w, .output = dir_ / std::to_string(w)});
    (void)cli::cmd_run(loaded, log);
    const auto bytes = slurp(dir_ / std::to_string(w) / "chain.csv");
    if (reference.empty()) reference = bytes;
    EXPECT_EQ(bytes, reference) << "W=" << w;
  }
}

TEST_F(CliTest, RunRejectsMismatchedData) {
  std::ostringstream log;
  const auto loaded = cli::load(write_config(kSmallIbm), {});
  std::ofstream(loaded.data_path) << "time,y\n50,1\n";
  EXPECT_THROW((void)cli::cmd_run(loaded, log), ConfigError);
}

TEST(CliCheck, PassesAndCatchesTheFault) {
  for (const auto& r : cli::cmd_check({})) EXPECT_TRUE(r.passed) << r.name << ": " << r.detail;
  bool invariance_failed = false;
  for (const auto& r : cli::cmd_check({.decouple_resample_seed = true})) {
    if (r.name == "worker-count-invariance") invariance_failed = !r.passed;
  }
  EXPECT_TRUE(invariance_failed);
}

}  // namespace
}  // namespace pmcmc
