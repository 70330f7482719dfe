// glmphase <task> --config <path> [--out <path>] [--format csv|json] [--workers N]
//          [--override section.key=value ...]
// Exit codes: 0 success, 1 validation failure or computation error, 2 configuration error.

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "config.hpp"
#include "table.hpp"
#include "tasks.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitConfig = 2;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string hex32(std::uint32_t x) {
  std::ostringstream out;
  out << std::hex << std::setw(8) << std::setfill('0') << x;
  return out.str();
}

}  // namespace

int main(int argc, char** argv) {
  using namespace glmphase::cli;

  CLI::App app{"Bayes-optimal errors and phase transitions of generalized linear models"};
  std::string task, config_path, out_path, format = "csv";
  int workers = 1;
  std::vector<std::string> overrides;
  app.add_option("task", task, "Task to run")->required()->check(CLI::IsMember(kTasks));
  app.add_option("--config", config_path, "INI configuration file")->required();
  app.add_option("--out", out_path, "Output file (default: stdout)");
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--workers", workers, "Worker threads for grid rows")->check(CLI::PositiveNumber);
  app.add_option("--override", overrides, "section.key=value applied after the config file");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  TaskOutcome outcome{ResultTable({})};
  Config cfg;
  try {
    cfg = Config::load(config_path);
    for (const auto& o : overrides) cfg.apply_override(o);
    outcome = run_task(task, cfg, workers);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  ResultTable& table = outcome.table;
  table.add_provenance("task", task);
  table.add_provenance("config_hash", hex32(cfg.hash()));
  table.add_provenance("version", GLMPHASE_VERSION);
  table.add_provenance("timestamp", utc_timestamp());

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) {
      std::cerr << "error: cannot open output file '" << out_path << "'\n";
      return kExitValidation;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;
  if (format == "json")
    write_json(out, table);
  else
    write_csv(out, table);
  out.flush();
  if (!out) {
    std::cerr << "error: failed writing " << (out_path.empty() ? "stdout" : out_path) << '\n';
    return kExitValidation;
  }
  if (outcome.validation_failed) {
    std::cerr << "validation failed\n";
    return kExitValidation;
  }
  return 0;
}
