#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mneme/error.hpp"
#include "mneme/scenario.hpp"

using namespace mneme;
using namespace mneme::scenario;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({
  "name": "tiny",
  "sim": {"population": 100, "duration": 30, "radio": "wifi_direct"},
  "seeds": [1, 2, 3],
  "outputs": "out/tiny",
  "experiment": {"kind": "spread"}
})";

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path fresh_dir(const std::string& name) {
  auto d = fs::temp_directory_path() / ("mneme_test_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Parse, Minimal) {
  auto s = parse_scenario(kMinimal);
  EXPECT_EQ(s.name, "tiny");
  EXPECT_EQ(s.sim.population, 100u);
  EXPECT_EQ(s.seeds, (std::vector<std::uint64_t>{1, 2, 3}));
  EXPECT_EQ(s.experiment.kind, Kind::spread);
  EXPECT_NO_THROW(validate(s));
}

TEST(Parse, RejectsMalformed) {
  EXPECT_THROW(parse_scenario("{"), ConfigError);
  EXPECT_THROW(parse_scenario("[]"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o", "colour": 1})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o", "sim": {"radios": "bluetooth"}})"),
               ConfigError);
  EXPECT_THROW(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o", "sim": {"population": "many"}})"),
               ConfigError);
  EXPECT_THROW(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o", "sim": {"radio": "zigbee"}})"),
               ConfigError);
}

TEST(Parse, NumericRadio) {
  auto s = parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o", "experiment": {"kind": "spread"}, "sim": {"radio": 35}})");
  EXPECT_DOUBLE_EQ(s.sim.radio.radius(), 35.0);
}

TEST(Validate, MissingFields) {
  EXPECT_THROW(validate(parse_scenario(R"({"name": "x", "outputs": "o"})")), ConfigError);
  EXPECT_THROW(validate(parse_scenario(R"({"name": "x", "seeds": [], "outputs": "o"})")), ConfigError);
  EXPECT_THROW(validate(parse_scenario(R"({"seeds": [1], "outputs": "o"})")), ConfigError);
  EXPECT_THROW(validate(parse_scenario(R"({"name": "x", "seeds": [1, 1], "outputs": "o"})")), ConfigError);
}

TEST(Validate, MrsAbovePopulation) {
  EXPECT_THROW(validate(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o",
    "experiment": {"kind": "spread"}, "sim": {"population": 5}, "poc": {"mRS": 6}})")),
               ConfigError);
}

TEST(Validate, DomainErrorsBecomeConfigErrors) {
  auto parse_and_validate = [](const char* text) { validate(parse_scenario(text)); };
  EXPECT_THROW(parse_and_validate(R"({"name": "x", "seeds": [1], "outputs": "o", "experiment": {"kind": "spread"}, "sim": {"width": -1}})"),
               ConfigError);
}

TEST(Validate, AttackNeedsForgingStrategy) {
  EXPECT_THROW(validate(parse_scenario(R"({"name": "x", "seeds": [1], "outputs": "o",
    "experiment": {"kind": "attack"}, "adversary": {"strategy": "none", "fraction": 0.1}})")),
               ConfigError);
}

TEST(Validate, BundledScenariosAllValid) {
  int n = 0;
  for (const auto& e : fs::directory_iterator(MNEME_SCENARIO_DIR)) {
    if (e.path().extension() != ".json") continue;
    EXPECT_NO_THROW(validate(load_scenario(e.path()))) << e.path();
    ++n;
  }
  EXPECT_GE(n, 14);
}

TEST(Run, SpreadOutputsAndDeterminism) {
  auto s = parse_scenario(kMinimal);
  auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  auto ra = run(s, a, 2);
  auto rb = run(s, b, 1);
  ASSERT_EQ(ra.files.size(), rb.files.size());
  ASSERT_FALSE(ra.files.empty());
  for (std::size_t i = 0; i < ra.files.size(); ++i) {
    EXPECT_EQ(ra.files[i].filename(), rb.files[i].filename());
    EXPECT_EQ(slurp(ra.files[i]), slurp(rb.files[i])) << ra.files[i];
  }
  EXPECT_TRUE(fs::exists(a / "spread.csv"));
  EXPECT_TRUE(fs::exists(a / "seeds" / "2"));
  for (const auto& e : fs::recursive_directory_iterator(a)) EXPECT_NE(e.path().extension(), ".tmp");
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Run, MergeUsesSeedOrder) {
  auto s = parse_scenario(kMinimal);
  std::vector<SeedOutput> runs;
  for (auto seed : s.seeds) runs.push_back(run_seed(s, seed));
  auto m1 = merge(s, runs);
  auto m2 = merge(s, runs);
  EXPECT_EQ(m1, m2);
  EXPECT_TRUE(m1.count("spread.csv"));
}

TEST(Run, SeedsAreIndependentOfParallelism) {
  auto s = parse_scenario(kMinimal);
  auto one = run_seed(s, 2);
  auto again = run_seed(s, 2);
  ASSERT_EQ(one.tables.size(), again.tables.size());
  for (const auto& [k, t] : one.tables) EXPECT_EQ(t.to_csv(), again.tables.at(k).to_csv());
}

TEST(WriteAtomic, ReplacesContents) {
  auto d = fresh_dir("atomic");
  fs::create_directories(d);
  write_atomic(d / "f.txt", "one");
  write_atomic(d / "f.txt", "two");
  EXPECT_EQ(slurp(d / "f.txt"), "two");
  EXPECT_FALSE(fs::exists(d / "f.txt.tmp"));
  fs::remove_all(d);
}
