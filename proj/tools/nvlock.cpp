// nvlock: command-line front end.
//
//   nvlock <command> [--config file.ini] [--out table.csv] [--set section.key=value ...]
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nvlock/cli/commands.hpp"
#include "nvlock/errors.hpp"

namespace {

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Options {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

nvlock::cli::ConfigSource load_source(const Options& opt) {
  nvlock::cli::ConfigSource src;
  if (!opt.config.empty()) src.load_file(opt.config);
  for (const auto& s : opt.overrides) src.set(s);
  return src;
}

void emit(const Options& opt, const std::string& text) {
  if (opt.out.empty() || opt.out == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  std::ofstream f(opt.out, std::ios::binary);
  if (!f) throw nvlock::ValidationError("cannot open output file '" + opt.out + "'");
  f << text;
  if (!f) throw nvlock::NumericalError("failed writing '" + opt.out + "'");
}

int run(const std::string& command, const Options& opt) {
  const nvlock::cli::ConfigSource src = load_source(opt);
  if (command == "config") {
    src.resolve();
    std::ostringstream os;
    src.write(os);
    emit(opt, os.str());
    return 0;
  }
  const nvlock::cli::RunConfig config = src.resolve();
  auto tables = nvlock::cli::run_command(command, config);
  const std::string stamp = utc_timestamp();
  for (auto& t : tables) t.set_meta("generated", stamp);
  std::ostringstream os;
  nvlock::cli::write_tables(os, tables);
  emit(opt, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NV spin-locking simulator: susceptibilities, torques, equilibria, MDMR"};
  app.require_subcommand(1);
  Options opt;
  std::string chosen;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config,-c", opt.config, "configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out,-o", opt.out, "output file (default: standard output)");
    sub->add_option("--set,-s", opt.overrides, "override a key, section.key=value")
        ->allow_extra_args(false);
    sub->callback([&chosen, sub] { chosen = sub->get_name(); });
  };
  for (const auto& info : nvlock::cli::commands()) add_common(app.add_subcommand(info.name, info.summary));
  add_common(app.add_subcommand("config", "print the resolved configuration"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    return run(chosen, opt);
  } catch (const nvlock::ValidationError& e) {
    std::cerr << "nvlock: error: " << e.what() << '\n';
    return 1;
  } catch (const nvlock::NumericalError& e) {
    std::cerr << "nvlock: numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "nvlock: numerical failure: " << e.what() << '\n';
    return 2;
  }
}
