#include "kinver/driver.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

bool read_file(const std::string& path, std::string& text) {
  std::ifstream in(path);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  text = ss.str();
  return true;
}

int default_jobs() {
  if (const char* e = std::getenv("VERIFY_JOBS")) {
    try {
      return std::max(1, std::stoi(e));
    } catch (...) {
      std::cerr << "ignoring malformed VERIFY_JOBS='" << e << "'\n";
    }
  }
  return 1;
}

// Loads and validates; prints diagnostics and returns false on any.
bool load(const std::string& path, nlohmann::json& cfg) {
  std::string text;
  if (!read_file(path, text)) {
    std::cerr << path << ": cannot read file\n";
    return false;
  }
  std::vector<kinver::Diagnostic> diags;
  cfg = kinver::parse_config_text(text, diags);
  if (diags.empty()) diags = kinver::validate_config(cfg);
  for (auto& d : diags) std::cerr << path << ": " << kinver::to_string(d) << "\n";
  return diags.empty();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks for Boltzmann and Landau kernel conditions"};
  app.require_subcommand(1);

  std::string config, out_dir;
  int jobs = default_jobs();
  auto* run = app.add_subcommand("run", "run the tasks of a config and write report.json and CSV tables");
  run->add_option("config", config, "config JSON")->required();
  run->add_option("--out", out_dir, "output directory (default: config 'output' or ./verify_out)");
  run->add_option("--jobs", jobs, "worker threads (default: VERIFY_JOBS or 1)")->check(CLI::PositiveNumber);

  std::string vconfig;
  auto* val = app.add_subcommand("validate", "check a config without running it");
  val->add_option("config", vconfig, "config JSON")->required();

  auto* list = app.add_subcommand("list-tasks", "list the task types");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (list->parsed()) {
    for (auto& k : kinver::task_kinds()) std::cout << k.name << "\t" << k.summary << "\n";
    return 0;
  }
  if (val->parsed()) {
    nlohmann::json cfg;
    if (!load(vconfig, cfg)) return 1;
    std::cout << vconfig << ": ok\n";
    return 0;
  }
  nlohmann::json cfg;
  if (!load(config, cfg)) return 1;
  if (out_dir.empty()) out_dir = cfg.value("output", std::string("verify_out"));
  try {
    auto R = kinver::run_config(cfg, jobs);
    kinver::write_outputs(R, out_dir);
    for (auto& o : R.outcomes) {
      std::cout << o.status << "\t" << o.name;
      if (o.metrics.contains("error")) std::cout << "\t" << o.metrics.at("error").get<std::string>();
      if (o.metrics.contains("failures") && !o.metrics.at("failures").empty())
        std::cout << "\tfailed: " << o.metrics.at("failures").dump();
      std::cout << "\n";
    }
    return R.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
