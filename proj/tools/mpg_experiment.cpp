// mpg_experiment: run, sweep, certify and bound tables for PMD on Markov potential games.
#include <atomic>
#include <chrono>
#include <ctime>
#include <exception>
#include <filesystem>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mpg/experiment.hpp"

namespace fs = std::filesystem;
using namespace mpg;

namespace {

struct Options {
  fs::path config_path;
  std::optional<fs::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  bool trust_mpg = false;
  std::string format = "csv";
  int jobs = 1;
};

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string cell_dir_name(const CellSpec& c) {
  std::string id = c.id();
  for (char& ch : id)
    if (ch == '/') ch = '_';
  return id;
}

// Cells are independent; results land in their own slots.
std::vector<CellResult> run_cells(const std::vector<CellSpec>& cells, int jobs) {
  std::vector<CellResult> results(cells.size());
  std::vector<std::exception_ptr> errors(cells.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < cells.size();) {
      try {
        results[k] = run_cell(cells[k]);
        std::cerr << "cell " << cells[k].id() << ": T=" << results[k].trace.length()
                  << " regret=" << format_number(results[k].trace.final_regret())
                  << (results[k].all_pass() ? " pass" : " FAIL") << "\n";
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

void write_metadata(const fs::path& out, const std::string& verb, const Options& opt, const std::string& config_text,
                    const std::vector<CellResult>& cells, double seconds) {
  nlohmann::ordered_json meta;
  meta["program"] = "mpg_experiment";
  meta["verb"] = verb;
  meta["config_path"] = opt.config_path.string();
  meta["config_hash"] = sha256_hex(config_text);
  meta["started_utc"] = utc_now();
  meta["wall_seconds"] = seconds;
  meta["jobs"] = opt.jobs;
  meta["trust_mpg"] = opt.trust_mpg;
  auto list = nlohmann::ordered_json::array();
  for (const auto& c : cells)
    list.push_back({{"cell", c.spec.id()}, {"content_hash", c.hash}, {"wall_seconds", c.wall_seconds}});
  meta["cells"] = list;
  write_text(out / "run_metadata.json", meta.dump(2) + "\n");
}

int execute(const std::string& verb, const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentConfig config = load_config(opt.config_path);
  if (opt.seed) config.seeds = {*opt.seed};
  if (opt.epsilon) {
    if (!(*opt.epsilon > 0.0)) throw ConfigError("--epsilon must be positive");
    config.epsilons = {*opt.epsilon};
  }
  const OutputFormat format = parse_format(opt.format);
  if (verb == "run" && !config.sweep_num_players.empty())
    throw ConfigError("config defines a sweep axis; use the sweep verb");
  if (verb == "sweep" && config.sweep_num_players.empty())
    throw ConfigError("sweep needs a sweep.num_players axis in the config");

  const fs::path out = opt.out ? *opt.out : config.output_dir ? *config.output_dir : fs::path("out") / config.name;
  fs::create_directories(out);
  const std::string echo = canonical_config(config);
  write_text(out / "config_echo.json", echo);

  if (verb == "bounds") {
    write_table(out / "bounds", bounds_table(config), format);
    std::cerr << "wrote " << (out / "bounds").string() << extension(format) << "\n";
    return 0;
  }
  if (verb == "certify") {
    const auto certs = certify_instances(config, opt.trust_mpg);
    CellResult holder;
    holder.spec.algorithm.label = "certify";
    holder.certifications = certs;
    const std::vector<CellResult> one{holder};
    write_table(out / "certification", certification_table(one), format);
    int failed = 0;
    for (const auto& c : certs)
      if (!c.ok()) {
        ++failed;
        std::cerr << "FAIL " << c.report.oracle << " " << c.report.instance << " error "
                  << format_number(c.report.abs_error) << " > " << format_number(c.report.tolerance) << "\n";
      }
    std::cerr << certs.size() << " certifications, " << failed << " failed\n";
    return failed ? 1 : 0;
  }

  const auto cells = run_cells(expand_cells(config, opt.trust_mpg), opt.jobs);
  bool all_pass = true;
  for (const auto& c : cells) {
    const fs::path dir = out / "cells" / cell_dir_name(c.spec);
    fs::create_directories(dir);
    write_table(dir / "trace", c.trace_table, format);
    write_table(dir / "summary", summary_table(std::span(&c, 1)), format);
    write_table(dir / "certification", certification_table(std::span(&c, 1)), format);
    all_pass = all_pass && c.all_pass();
  }
  write_table(out / "summary", summary_table(cells), format);
  write_table(out / "certification", certification_table(cells), format);
  if (verb == "sweep") write_table(out / "scaling_summary", scaling_summary(cells), format);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_metadata(out, verb, opt, echo, cells, seconds);
  std::cerr << cells.size() << " cells in " << seconds << " s, certifications " << (all_pass ? "pass" : "FAIL")
            << ", output " << out.string() << "\n";
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Policy mirror descent on Markov potential games: runs, sweeps, oracle certification, bounds"};
  app.require_subcommand(1, 1);
  Options opt;
  app.add_option("--out", opt.out, "Output directory (default: config output_dir or out/<name>)");
  app.add_option("--seed", opt.seed, "Replace the config's seed list with this seed");
  app.add_option("--epsilon", opt.epsilon, "Replace the config's epsilon targets with this value");
  app.add_flag("--trust-mpg", opt.trust_mpg, "Skip enumeration-based MPG verification");
  app.add_option("--format", opt.format, "Table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--jobs", opt.jobs, "Cells run in parallel")->check(CLI::PositiveNumber);
  app.fallthrough();

  const char* verbs[][2] = {{"run", "Run every (algorithm, seed) cell of a config"},
                            {"sweep", "Run the N sweep and write the scaling summary"},
                            {"certify", "Oracle suite only"},
                            {"bounds", "Closed-form step sizes and bounds only"}};
  for (auto& [name, help] : verbs) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("config", opt.config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  }
  CLI11_PARSE(app, argc, argv);
  const std::string verb = app.get_subcommands().front()->get_name();

  try {
    return execute(verb, opt);
  } catch (const MpgVerificationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EnumerationCapExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
