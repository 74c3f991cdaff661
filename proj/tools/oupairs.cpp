// oupairs: OU pair-trading research CLI.
//
//   oupairs <fit|sweep|simulate|backtest|study> --config <path> [--key value ...]

#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "oupairs/oupairs.hpp"

namespace {

oupairs::KeyValues parse_overrides(const std::vector<std::string>& args) {
  oupairs::KeyValues out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& arg = args[i];
    if (arg.rfind("--", 0) != 0)
      throw oupairs::Error(oupairs::ErrorKind::ConfigError, "unexpected argument: " + arg);
    const auto eq = arg.find('=');
    if (eq != std::string::npos) {
      out.emplace_back(arg.substr(2, eq - 2), arg.substr(eq + 1));
    } else {
      if (i + 1 >= args.size())
        throw oupairs::Error(oupairs::ErrorKind::ConfigError, "missing value for " + arg);
      out.emplace_back(arg.substr(2), args[++i]);
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using Command = std::function<oupairs::CommandOutput(const oupairs::RunConfig&)>;
  const std::map<std::string, std::pair<std::string, Command>> commands{
      {"fit", {"Form the pair and print the fitted OU parameters", oupairs::cmd_fit}},
      {"sweep", {"Threshold grid heatmaps and best-cell summary", oupairs::cmd_sweep}},
      {"simulate", {"Simulate the fitted process and compare refit parameters", oupairs::cmd_simulate}},
      {"backtest", {"Per-day ledgers for in- and out-of-sample periods", oupairs::cmd_backtest}},
      {"study", {"Compare in-sample lengths by out-of-sample Sharpe", oupairs::cmd_study}},
  };

  CLI::App app{"Ornstein-Uhlenbeck pair trading research engine", "oupairs"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, entry] : commands) {
    auto* sub = app.add_subcommand(name, entry.first);
    sub->add_option("--config", config_path, "key=value configuration file");
    sub->allow_extras();
    subs[name] = sub;
  }
  CLI11_PARSE(app, argc, argv);

  for (const auto& [name, sub] : subs) {
    if (!sub->parsed()) continue;
    try {
      const auto overrides = parse_overrides(sub->remaining());
      std::optional<std::filesystem::path> file;
      if (!config_path.empty()) file = config_path;
      const auto cfg = oupairs::load_run_config(file, overrides, std::getenv("OUPAIRS_SEED"));
      const auto out = commands.at(name).second(cfg);
      oupairs::commit_outputs(cfg.output_dir, out.files);
      std::cout << out.text;
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "oupairs " << name << ": " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}
