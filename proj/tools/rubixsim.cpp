// rubixsim: command-line front end.
//
//   rubixsim simulate --config run.json [--seed N] [--out DIR]
//   rubixsim illustration [--seed N]
//   rubixsim verify <bijection|rubixd-permutation|security|tracker> [--seed N] [--force-victim-refresh]
//   rubixsim sweep --config run.json --trh 128,256 --mappings coffeelake,rubix-s:gs4 [--seed N] [--out DIR]
//
// Exit codes: 0 ok, 1 usage, 2 config, 3 file (missing, unreadable or malformed trace),
// 4 verification failure, 5 internal.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "rubix/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfig = 2, kIo = 3, kVerify = 4, kInternal = 5 };

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw rubix::IoError("cannot write '" + p.string() + "'");
  return f;
}

std::filesystem::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw rubix::IoError("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

void write_single(const rubix::SimReport& rep, const std::string& dir) {
  const auto d = prepare_dir(dir);
  open_out(d / "report.json") << rubix::report_json_string(rep);
  auto csv = open_out(d / "report.csv");
  rubix::write_report_csv(csv, {rep});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DRAM line-to-row mapping and Rowhammer mitigation simulator"};
  app.require_subcommand(1);
  std::uint64_t seed = rubix::kDefaultSeed;

  auto* sim = app.add_subcommand("simulate", "run one scenario from a config file");
  std::string config_path, out_dir = ".";
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", config_path, "run config (JSON)")->required();
  sim->add_option("--seed", sim_seed, "overrides the config seed");
  sim->add_option("--out", out_dir, "output directory for report.json and report.csv");

  auto* ill = app.add_subcommand("illustration", "hot-row table for linear vs encrypted mapping");
  ill->add_option("--seed", seed, "seed")->check(CLI::NonNegativeNumber);

  auto* ver = app.add_subcommand("verify", "run a property suite");
  std::string suite;
  bool force_vr = false;
  ver->add_option("suite", suite, "bijection | rubixd-permutation | security | tracker")->required();
  ver->add_option("--seed", seed, "seed");
  ver->add_flag("--force-victim-refresh", force_vr, "security suite: evaluate victim refresh only");

  auto* sw = app.add_subcommand("sweep", "cross product of thresholds and mappings");
  std::string sw_config, trh_list = "128,256,512,1024",
                         map_list = "coffeelake,skylake,mop,rubix-s:gs4,rubix-s:gs1,rubix-d:gs4", sw_out = ".";
  std::optional<std::uint64_t> sw_seed;
  sw->add_option("--config", sw_config, "base run config (JSON)")->required();
  sw->add_option("--trh", trh_list, "comma-separated t_rh values");
  sw->add_option("--mappings", map_list, "comma-separated mapping names");
  sw->add_option("--seed", sw_seed, "overrides the config seed");
  sw->add_option("--out", sw_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*sim) {
      auto rc = rubix::load_run_config(config_path);
      if (sim_seed) rubix::set_seed(rc, *sim_seed);
      const auto rep = rubix::run_scenario(rc);
      write_single(rep, out_dir);
      std::cout << rep.workload << " " << rep.mapping << " " << rep.mitigation << ": " << rep.total_accesses
                << " accesses, " << rep.total_activations << " activations, hot_rows_64 " << rep.hot_rows_64
                << ", mitigation events " << rep.total_mitigation_events() << ", flips " << rep.flips.size() << "\n";
      return kOk;
    }
    if (*ill) {
      rubix::print_illustration(std::cout, rubix::run_illustration(seed));
      return kOk;
    }
    if (*ver) {
      const auto res = rubix::run_suite(suite, seed, force_vr);
      for (const auto& l : res.lines) std::cout << l << "\n";
      std::cout << res.suite << ": " << (res.passed ? "PASS" : "FAIL") << "\n";
      return res.passed ? kOk : kVerify;
    }
    if (*sw) {
      auto rc = rubix::load_run_config(sw_config);
      if (sw_seed) rubix::set_seed(rc, *sw_seed);
      const auto trh = rubix::parse_uint_list(trh_list);
      const auto maps = rubix::split_list(map_list);
      const auto res = rubix::run_sweep(rc, trh, maps, [](const rubix::SweepCell& c) {
        std::cerr << c.mapping << " t_rh=" << c.t_rh << ": mitigation events " << c.report.total_mitigation_events()
                  << "\n";
      });
      const auto d = prepare_dir(sw_out);
      std::vector<rubix::SimReport> reps;
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& c : res.cells) {
        reps.push_back(c.report);
        arr.push_back(rubix::to_json(c.report));
      }
      open_out(d / "report.json") << arr.dump(2) << "\n";
      auto csv = open_out(d / "report.csv");
      rubix::write_report_csv(csv, reps);
      auto cmp = open_out(d / "comparison.csv");
      rubix::write_comparison_csv(cmp, res.comparison);
      rubix::write_comparison_csv(std::cout, res.comparison);
      return kOk;
    }
  } catch (const rubix::IoError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kIo;
  } catch (const rubix::ParseError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kIo;
  } catch (const rubix::ValidationError& e) {
    std::cerr << "file error: " << e.what() << "\n";
    return kIo;
  } catch (const rubix::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const rubix::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const rubix::AddressRangeError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}
