#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "runner.hpp"

int main(int argc, char** argv) {
  using namespace wolffkit::cli;
  CLI::App app{"Wolff potentials, sublinear equations and their criteria"};
  app.set_help_flag("-h,--help");
  std::string command, target, config_path;
  RunOptions opt;
  std::uint64_t seed = 0;
  app.add_option("command", command, "command to run")->required();
  app.add_option("target", target, "criterion or verifier name");
  app.add_option("--config", config_path, "JSON config file")->envname("WOLFFKIT_CONFIG")->required();
  app.add_option("--out", opt.out_dir, "output directory")->envname("WOLFFKIT_OUT");
  app.add_option("--threads", opt.threads, "worker threads")->envname("WOLFFKIT_THREADS");
  app.add_flag("--assert", opt.assert_verdicts, "exit 4 when a verdict is Fails")->envname("WOLFFKIT_ASSERT");
  auto* seed_opt = app.add_option("--seed", seed, "seed override")->envname("WOLFFKIT_SEED");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help() << usage();
    return 0;
  } catch (const CLI::ParseError& e) {
    const auto& cmds = commands();
    if (!command.empty() && std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
      std::cerr << "unknown command '" << command << "'\n" << usage();
      return kUsage;
    }
    std::cerr << e.what() << '\n' << usage();
    return kValidation;
  }
  if (*seed_opt) opt.seed = seed;

  const auto& cmds = commands();
  if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
    std::cerr << "unknown command '" << command << "'\n" << usage();
    return kUsage;
  }
  nlohmann::json cfg;
  {
    std::ifstream f(config_path);
    if (!f) {
      std::cerr << "cannot open config '" << config_path << "'\n";
      return kValidation;
    }
    try {
      cfg = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "config: " << e.what() << '\n';
      return kValidation;
    }
  }
  RunResult r = run(command, target, cfg, opt);
  for (const auto& a : r.artifacts) std::cout << a << '\n';
  if (!r.message.empty()) (r.exit_code == 0 ? std::cout : std::cerr) << r.message << (r.message.back() == '\n' ? "" : "\n");
  return r.exit_code;
}
