#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "idmob/error.hpp"
#include "idmob/marketplace.hpp"
#include "idmob/sim/runner.hpp"

namespace fs = std::filesystem;
using namespace idmob;

namespace {
  int run_command(const std::string &path,
                  std::optional<std::uint64_t> seed,
                  std::optional<std::uint64_t> interval,
                  const fs::path &out_dir,
                  bool concurrent) {
    sim::RunOptions opts;
    opts.seed = seed;
    opts.block_interval_s = interval;
    opts.concurrent = concurrent;
    sim::Runner runner(sim::load_scenario(path), opts);
    const auto report = runner.run();

    fs::create_directories(out_dir);
    {
      std::ofstream log(out_dir / "events.log", std::ios::binary);
      write_event_log(log, runner.log().all());
    }
    {
      std::ofstream rep(out_dir / "report.txt", std::ios::binary);
      rep << report.to_text();
    }
    std::cout << "scenario " << runner.scenario().name << ": " << runner.log().size() << " events, "
              << runner.failures().size() << " step failures, final height "
              << runner.world().ledger.height() << "\n";
    for (const auto &f : runner.failures()) {
      std::cout << "  failed: " << f.actor << " " << f.op << ": " << f.message << "\n";
    }
    std::cout << "wrote " << (out_dir / "events.log").string() << " and " << (out_dir / "report.txt").string()
              << "\n";
    return 0;
  }

  int replay_command(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::ParseError, "cannot open " + path);
    const auto events = read_event_log(in);
    replay_contract(events);
    std::cout << sim::report_from_events(events).to_text();
    return 0;
  }

  int inspect_command(const std::string &path) {
    const auto sc = sim::load_scenario(path);
    std::cout << "name=" << sc.name << "\n"
              << "seed=" << sc.seed << "\n"
              << "block_interval_s=" << sc.block_interval_s << "\n"
              << "push_interval_s=" << sc.push_interval_s << "\n"
              << "dispute_window=" << sc.dispute_window << "\n"
              << "vendors=" << sc.count(sim::Role::Vendor) << "\n"
              << "devices=" << sc.count(sim::Role::Device) << "\n"
              << "customers=" << sc.count(sim::Role::Customer) << "\n";
    for (const auto &a : sc.actors) {
      std::cout << "actor " << a.name << " " << sim::role_name(a.role) << "\n";
    }
    const auto steps = sim::expand_steps(sc);
    std::cout << "steps=" << steps.size() << "\n";
    for (const auto &s : steps) {
      std::cout << "  at " << s.block << " " << s.actor << " " << s.verb;
      for (const auto &[k, v] : s.args) std::cout << " " << k << "=" << v;
      std::cout << "\n";
    }
    return 0;
  }
}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"IoT data marketplace simulator"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> interval;
  std::string out_dir = "out";
  bool concurrent = false;
  auto *run = app.add_subcommand("run", "run a scenario and write events.log and report.txt");
  run->add_option("scenario", scenario_path, "scenario file")->required();
  run->add_option("--seed", seed, "override the scenario seed");
  run->add_option("--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--block-interval", interval, "seconds per block");
  run->add_flag("--concurrent", concurrent, "prepare and verify payloads on worker threads");

  std::string log_path;
  auto *replay = app.add_subcommand("replay", "rebuild the report from an event log");
  replay->add_option("eventlog", log_path, "events.log file")->required();

  auto *inspect = app.add_subcommand("inspect", "validate a scenario and list its expanded steps");
  inspect->add_option("scenario", scenario_path, "scenario file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_command(scenario_path, seed, interval, out_dir, concurrent);
    if (*replay) return replay_command(log_path);
    if (*inspect) return inspect_command(scenario_path);
  } catch (const Error &e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::ParseError || e.code() == Errc::ValidationError ? 2 : 1;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
