// mneme: scenario runner and bound calculators.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "mneme/adversary.hpp"
#include "mneme/error.hpp"
#include "mneme/netsim.hpp"
#include "mneme/poe.hpp"
#include "mneme/scenario.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kViolation = 3;

void print_row(const char* name, double log2v, double value) {
  std::printf("%-24s %14.4f %16.6e\n", name, log2v, value);
}

int bounds_double_spend(double active) {
  double p = mneme::adversary::p_double_spend_bound(active);
  std::printf("%-24s %14s %16s\n", "quantity", "log2", "value");
  print_row("double_spend_bound", std::log2(p), p);
  return kOk;
}

int bounds_collusion(std::uint64_t N, std::uint64_t K, std::uint64_t M) {
  auto b = mneme::adversary::p_credit_stealing_bound(N, K, M);
  std::printf("%-24s %14s %16s\n", "quantity", "log2", "value");
  print_row("printed_bound", b.printed_log2, std::exp2(b.printed_log2));
  print_row("approx_bound", b.approx_log2, std::exp2(b.approx_log2));
  print_row("exact_tail", b.exact_log2, b.exact_tail);
  std::printf("exact_tail < 2^-28: %s\n", b.exact_log2 < -28.0 ? "yes" : "no");
  std::printf("exact_tail <= printed_bound: %s\n", b.exact_log2 <= b.printed_log2 ? "yes" : "no");
  return kOk;
}

int bounds_poe_termination(const std::vector<double>& args) {
  if (args.size() < 3)
    throw mneme::DomainError("poe-termination needs theta... K K_m");
  auto K = static_cast<std::size_t>(args[args.size() - 2]);
  auto K_m = static_cast<std::size_t>(args.back());
  if (static_cast<double>(K) != args[args.size() - 2] || static_cast<double>(K_m) != args.back())
    throw mneme::DomainError("K and K_m must be integers");
  std::vector<double> theta(args.begin(), args.end() - 2);
  double p = mneme::poe::poe_termination_probability(theta, K, K_m);
  std::printf("%-24s %14s %16s\n", "quantity", "log2", "value");
  print_row("termination_probability", std::log2(p), p);
  return kOk;
}

int bounds_neighbors(double active, double radius) {
  double n = mneme::netsim::expected_neighbors(active, radius);
  std::printf("%-24s %16s\n", "quantity", "value");
  std::printf("%-24s %16.4f\n", "expected_neighbors", n);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mneme ledger simulator"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run a scenario file");
  std::string run_file, out_dir;
  std::size_t parallel = 1;
  run->add_option("scenario", run_file, "Scenario file")->required();
  run->add_option("--out", out_dir, "Output directory (overrides the scenario's outputs)");
  run->add_option("--parallel", parallel, "Seeds run at once")->check(CLI::PositiveNumber);

  auto* validate = app.add_subcommand("validate", "Check a scenario file");
  std::string validate_file;
  validate->add_option("scenario", validate_file, "Scenario file")->required();

  auto* bounds = app.add_subcommand("bounds", "Analytic bounds");
  bounds->require_subcommand(1);
  auto* ds = bounds->add_subcommand("double-spend", "1 / N_a^2");
  double ds_active = 0;
  ds->add_option("N_a", ds_active)->required();
  auto* col = bounds->add_subcommand("collusion", "Committee capture: printed bound and exact tail");
  std::uint64_t col_n = 0, col_k = 0, col_m = 0;
  col->add_option("N", col_n)->required();
  col->add_option("K", col_k)->required();
  col->add_option("M", col_m)->required();
  auto* term = bounds->add_subcommand("poe-termination", "P[at least K_m of K sign]");
  std::vector<double> term_args;
  term->add_option("args", term_args, "theta... K K_m")->required()->expected(3, -1);
  auto* nb = bounds->add_subcommand("neighbors", "pi N_a R^2 on the unit area");
  double nb_active = 0, nb_radius = 0;
  nb->add_option("N_a", nb_active)->required();
  nb->add_option("R", nb_radius)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      auto s = mneme::scenario::load_scenario(validate_file);
      std::cout << s.name << ": ok (" << mneme::scenario::to_string(s.experiment.kind) << ", "
                << s.seeds.size() << " seeds)\n";
      return kOk;
    }
    if (*run) {
      auto s = mneme::scenario::load_scenario(run_file);
      std::filesystem::path out = out_dir.empty() ? s.outputs : out_dir;
      try {
        std::filesystem::create_directories(out);
      } catch (const std::filesystem::filesystem_error& e) {
        throw mneme::ConfigError("cannot create output directory " + out.string() + ": " + e.what());
      }
      auto result = mneme::scenario::run(s, out, parallel);
      for (const auto& f : result.files) std::cout << f.string() << '\n';
      return kOk;
    }
    if (*ds) return bounds_double_spend(ds_active);
    if (*col) return bounds_collusion(col_n, col_k, col_m);
    if (*term) return bounds_poe_termination(term_args);
    if (*nb) return bounds_neighbors(nb_active, nb_radius);
  } catch (const mneme::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const mneme::DomainError& e) {
    std::cerr << e.what() << '\n';
    return kConfig;
  } catch (const mneme::RuntimeViolation& e) {
    std::cerr << e.what() << '\n';
    return kViolation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kViolation;
  }
  return kOk;
}
