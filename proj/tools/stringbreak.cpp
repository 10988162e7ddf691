#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "stringbreak/commands.hpp"
#include "stringbreak/config.hpp"
#include "stringbreak/errors.hpp"

using namespace stringbreak;

int main(int argc, char** argv) {
  CLI::App app{"String breaking in quantum Ising chains: exact diagonalization and ramps"};
  // -h would clash with the --h field option
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_version_flag("--version", version_string());
  app.require_subcommand(1);
  app.footer("Exit status: 0 success, 1 invalid input, 2 numerical failure.\n"
             "STRINGBREAK_THREADS caps the number of worker threads.");

  struct Sub {
    CLI::App* app = nullptr;
    std::string config_file;
    std::map<std::string, std::string> raw;
    std::map<std::string, CLI::Option*> opts;
  };
  std::map<std::string, Sub> subs;

  for (const auto& name : command_names()) {
    auto& s = subs[name];
    s.app = app.add_subcommand(name, command_summary(name));
    s.app->add_option("--config", s.config_file, "key=value config file")->check(CLI::ExistingFile);
    for (const auto& key : config_schema()) {
      if (key.name == "command") continue;
      std::string help = key.help;
      if (!key.default_text.empty()) help += " [" + key.default_text + "]";
      s.opts[key.name] = s.app->add_option("--" + key.name, s.raw[key.name], help);
    }
    s.app->footer("Output files (CSV, 17 significant digits, LF):\n" + schema_help(name));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  for (auto& [name, s] : subs) {
    if (!s.app->parsed()) continue;
    try {
      Overrides overrides;
      for (const auto& key : config_schema()) {
        const auto it = s.opts.find(key.name);
        if (it != s.opts.end() && it->second->count() > 0) {
          overrides.emplace_back(key.name, s.raw[key.name]);
        }
      }
      const RunConfig config = s.config_file.empty() ? parse_config("", overrides, name)
                                                     : load_config(s.config_file, overrides, name);
      const auto report = run_command(config);
      for (const auto& f : report.files) std::cout << config.text("output_dir") << '/' << f << '\n';
      return 0;
    } catch (const ValidationError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return 1;
    } catch (const NumericalError& e) {
      std::cerr << "numerical failure: " << e.what() << '\n';
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "failure: " << e.what() << '\n';
      return 2;
    }
  }
  return 1;
}
