// Command-line front end. Subcommands and their options come from the
// library's command schema, so this file only handles argv and exit codes:
// 0 success, 1 invalid usage or input, 2 runtime failure.
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stablestyle/stablestyle.h"

namespace {

struct Subcommand {
  std::string name;
  CLI::App* app = nullptr;
  std::string out, config;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
};

int fail(sst_status status) {
  std::fprintf(stderr, "error (%s): %s\n", sst_status_name(status), sst_last_error());
  return sst_status_is_validation(status) ? 1 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Temporally stable style transfer experiments"};
  app.require_subcommand(1);

  std::vector<Subcommand> subs(sst_command_count());
  for (std::size_t i = 0; i < subs.size(); ++i) {
    auto& s = subs[i];
    s.name = sst_command_name(i);
    s.app = app.add_subcommand(s.name, sst_command_help(i));
    s.app->add_option("--out", s.out, "output directory")->required();
    s.app->add_option("--config", s.config, "key=value settings file; flags override it");
    for (std::size_t j = 0; j < sst_command_option_count(i); ++j) {
      const char *name = nullptr, *def = nullptr, *help = nullptr;
      int required = 0;
      sst_command_option(i, j, &name, &def, &help, &required);
      std::string text = help;
      if (*def) text += " [default: " + std::string(def) + "]";
      if (required) text += " (required unless set in --config)";
      s.options[name] = s.app->add_option("--" + std::string(name), s.values[name], text);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::printf("%s", app.help().c_str());
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::printf("%s", app.help("", CLI::AppFormatMode::All).c_str());
    return 0;
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n\n", e.what());
    const CLI::App* sub = nullptr;
    for (const auto& s : subs)
      if (s.app->parsed()) sub = s.app;
    std::fprintf(stderr, "%s", sub ? sub->help().c_str() : app.help().c_str());
    return 1;
  }

  for (auto& s : subs) {
    if (!s.app->parsed()) continue;
    sst_config* cfg = nullptr;
    sst_status st = sst_config_create(s.name.c_str(), &cfg);
    if (st == SST_OK && !s.config.empty()) st = sst_config_load_file(cfg, s.config.c_str());
    for (const auto& [name, opt] : s.options) {
      if (st != SST_OK) break;
      if (opt->count() > 0) st = sst_config_set(cfg, name.c_str(), s.values[name].c_str());
    }
    if (st == SST_OK) st = sst_run(cfg, s.out.c_str());
    sst_config_free(cfg);
    if (st != SST_OK) return fail(st);
    return 0;
  }
  return 1;
}
