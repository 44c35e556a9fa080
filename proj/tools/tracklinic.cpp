// Command-line front end: annotate, extract, evaluate, report, simulate.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tracklinic/commands.hpp"

namespace fs = std::filesystem;
using namespace tracklinic;

namespace {

constexpr const char* kOutEnv = "TRACKLINIC_OUT";

struct CommonFlags {
  std::string config;
  std::string out;
  int jobs = 1;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config, "JSON file with threshold overrides");
  sub->add_option("--out", f.out, std::string("output directory (default: $") + kOutEnv + " or ./tracklinic_out)");
  sub->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
}

cmd::Options make_options(const CommonFlags& f) {
  cmd::Options o;
  if (!f.config.empty()) o.config = io::load_config(f.config);
  if (!f.out.empty()) {
    o.out = f.out;
  } else if (const char* env = std::getenv(kOutEnv); env && *env) {
    o.out = env;
  }
  o.jobs = f.jobs;
  o.log = &std::cerr;
  return o;
}

std::vector<std::string> split_names(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Per-factor diagnosis toolkit for single-object trackers"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);

  CommonFlags common;
  std::string manifest, clips_dir, results_dir, trackers, layout, profile;
  std::vector<std::string> outcome_dirs;
  std::uint64_t seed = 42;

  auto* annotate = app.add_subcommand("annotate", "label shape variation and derive compound factors");
  annotate->add_option("manifest", manifest, "corpus manifest CSV")->required();
  add_common(annotate, common);

  auto* extract = app.add_subcommand("extract", "extract single-factor clips");
  extract->add_option("manifest", manifest, "manifest of annotated sequences")->required();
  add_common(extract, common);

  auto* evaluate = app.add_subcommand("evaluate", "score tracker results on extracted clips");
  evaluate->add_option("clips", clips_dir, "directory of extracted clips")->required();
  evaluate->add_option("results", results_dir, "directory with one subdirectory of result files per tracker")
      ->required();
  evaluate->add_option("--trackers", trackers, "comma-separated tracker names (default: all)");
  add_common(evaluate, common);

  auto* report = app.add_subcommand("report", "build the diagnosis report");
  report->add_option("outcomes", outcome_dirs, "directories written by evaluate")->required();
  report->add_option("--trackers", trackers, "comma-separated tracker names (default: all)");
  add_common(report, common);

  auto* simulate = app.add_subcommand("simulate", "generate a synthetic corpus and tracker results");
  simulate->add_option("--layout", layout, "layout CSV (default: generated demo layouts)");
  simulate->add_option("--profile", profile, "tracker profile JSON (default: two demo trackers)");
  simulate->add_option("--seed", seed, "random seed");
  add_common(simulate, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    cmd::Options o = make_options(common);
    o.trackers = split_names(trackers);
    o.seed = seed;
    if (*annotate) {
      cmd::cmd_annotate(manifest, o);
    } else if (*extract) {
      cmd::cmd_extract(manifest, o);
    } else if (*evaluate) {
      cmd::cmd_evaluate(clips_dir, results_dir, o);
    } else if (*report) {
      std::vector<fs::path> dirs(outcome_dirs.begin(), outcome_dirs.end());
      cmd::cmd_report(dirs, o);
    } else if (*simulate) {
      cmd::cmd_simulate(layout.empty() ? std::nullopt : std::optional<fs::path>(layout),
                        profile.empty() ? std::nullopt : std::optional<fs::path>(profile), o);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
