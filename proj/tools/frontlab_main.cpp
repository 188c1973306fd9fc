#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "frontlab/error.hpp"
#include "frontlab/scenario.hpp"

namespace {

enum Exit { kPass = 0, kCheckFailure = 1, kConfigError = 2, kNumericError = 3 };

int report(const frontlab::RunResult& res, const std::string& out, double seconds) {
  for (const auto& c : res.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << "\n";
  std::cout << "output: " << out << "\n"
            << "elapsed: " << seconds << " s\n"
            << "verdict: " << (res.pass ? "pass" : "fail") << "\n";
  return res.pass ? kPass : kCheckFailure;
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const frontlab::StabilityError& e) {
    std::cerr << "stability error: " << e.what() << "\n";
    return kNumericError;
  } catch (const frontlab::FrontEscapeError& e) {
    std::cerr << "front escape: " << e.what() << "\n";
    return kNumericError;
  } catch (const frontlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Level-set front propagation with nonlocal couplings"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, traj_dir;

  auto* run = app.add_subcommand("run", "Run a scenario config");
  run->add_option("config", config_path, "Config file")->required();

  auto* pre = app.add_subcommand("preset", "Run a built-in scenario");
  pre->add_option("name", preset, "Preset name")->required();
  pre->add_option("--out", out_dir, "Output directory");
  bool print_only = false;
  pre->add_flag("--print", print_only, "Print the preset config and exit");

  auto* ver = app.add_subcommand("verify", "Re-run the verifiers on a stored trajectory");
  ver->add_option("trajectory_dir", traj_dir, "Trajectory directory")->required();
  ver->add_option("--out", out_dir, "Output directory (default: <trajectory_dir>/../verify)");

  auto* probe = app.add_subcommand("probe", "Run the uniqueness probe of a config");
  probe->add_option("config", config_path, "Config file")->required();

  app.add_subcommand("list", "List presets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kConfigError;
  }

  const auto t0 = std::chrono::steady_clock::now();
  if (app.got_subcommand("list")) {
    for (const auto& n : frontlab::preset_names()) std::cout << n << "\n";
    return kPass;
  }
  if (run->parsed()) {
    return guarded([&] {
      const auto cfg = frontlab::load_config(config_path);
      const auto res = frontlab::run_scenario(cfg);
      return report(res, cfg.output_dir, since(t0));
    });
  }
  if (pre->parsed()) {
    return guarded([&] {
      const std::string text = frontlab::preset_text(preset);
      if (print_only) {
        std::cout << text;
        return static_cast<int>(kPass);
      }
      auto cfg = frontlab::parse_config(text);
      cfg.output_dir = out_dir.empty() ? "out/" + preset : out_dir;
      const auto res = frontlab::run_scenario(cfg);
      return report(res, cfg.output_dir, since(t0));
    });
  }
  if (ver->parsed()) {
    return guarded([&] {
      namespace fs = std::filesystem;
      fs::path dir = fs::path(traj_dir).lexically_normal();
      if (dir.filename().empty()) dir = dir.parent_path();
      const std::string out = out_dir.empty() ? (dir.parent_path() / "verify").string() : out_dir;
      const auto res = frontlab::verify_trajectory(traj_dir, out);
      return report(res, out, since(t0));
    });
  }
  if (probe->parsed()) {
    return guarded([&] {
      const auto cfg = frontlab::load_config(config_path);
      const auto res = frontlab::run_probe(cfg);
      return report(res, cfg.output_dir, since(t0));
    });
  }
  return kConfigError;
}
