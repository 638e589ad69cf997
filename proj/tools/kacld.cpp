// kacld: run one experiment described by a JSON configuration.
//
//   kacld --config run.json [--output out.csv] [--workers 8] [--override N=200000]...
//
// Exit status: 0 ok, 2 configuration error, 3 finished with warnings,
// 4 I/O error.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kacld/cli.hpp"

namespace {

int fail(int code, const std::string& message) {
  std::cerr << "kacld: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace kacld::cli;

  CLI::App app{"Tail experiments for the Kac-type kinetic model"};
  std::string config_path;
  std::string output;
  std::size_t workers = 0;
  std::vector<std::string> overrides;
  bool print_csv = false;
  app.add_option("-c,--config", config_path, "JSON configuration file")->required();
  app.add_option("-o,--output", output, "CSV output path (overrides output.path)");
  app.add_option("-w,--workers", workers, "worker threads (does not change results)");
  app.add_option("--override", overrides, "KEY=VALUE, dotted keys, value parsed as JSON");
  app.add_flag("--stdout", print_csv, "also print the table to standard output");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), kConfigError);
  }

  std::ifstream in(config_path);
  if (!in) return fail(kIoError, "cannot read " + config_path);
  std::stringstream buf;
  buf << in.rdbuf();

  ExperimentConfig config;
  try {
    json doc = json::parse(buf.str(), nullptr, false, true);
    if (doc.is_discarded()) throw ConfigError({"document is not valid JSON"});
    for (const auto& o : overrides) apply_override(doc, o);
    if (workers > 0) doc["workers"] = workers;
    if (!output.empty()) {
      if (doc.contains("output") && doc["output"].is_object()) doc["output"]["path"] = output;
      else doc["output"] = output;
    }
    config = parse_config(doc);
  } catch (const ConfigError& e) {
    for (const auto& m : e.errors()) std::cerr << "config error: " << m << '\n';
    return kConfigError;
  }

  RunResult result;
  try {
    result = run(config);
  } catch (const kacld::Error& e) {
    return fail(kConfigError, e.what());
  }

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  if (print_csv || config.output_path.empty()) std::cout << to_csv(result.table);
  if (!config.output_path.empty()) {
    const int io = write_outputs(config, result, config.output_path);
    if (io != kOk) return fail(io, "cannot write " + config.output_path);
  }
  return result.exit_code();
}
