#include "stress/error.hpp"
#include "stress/pipeline.hpp"
#include "stress/selftest.hpp"
#include "stress/synthetic.hpp"
#include "stress/util.hpp"
#include "stress/version.hpp"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace {

struct Flags {
  std::string manifest;
  std::string out;
  std::string config;
  std::string n;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> jobs;
  std::string filter_pass;
  std::optional<double> sample_rate;
  std::optional<int> table2_n;
  std::vector<std::string> settings;
  bool skip_bad = false;
  bool no_models = false;
};

void add_run_flags(CLI::App* cmd, Flags& f, bool needs_manifest) {
  auto* m = cmd->add_option("--manifest", f.manifest, "drive manifest: <drive_id>,<record_csv>,<annotation> per line");
  if (needs_manifest) m->required();
  cmd->add_option("--out", f.out, "output directory (default: out)");
  cmd->add_option("--config", f.config, "key = value config file");
  cmd->add_option("--set", f.settings, "override one config key (key=value), repeatable");
  cmd->add_option("--n", f.n, "comma-separated windows-per-section values (default 2,3,4,5)");
  cmd->add_option("--seed", f.seed, "forest seed");
  cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  cmd->add_option("--filter-pass", f.filter_pass, "zero-phase or single")->check(CLI::IsMember({"zero-phase", "single"}));
  cmd->add_option("--sample-rate", f.sample_rate, "record sample rate in Hz (default: inferred from time_s)");
  cmd->add_option("--table2-n", f.table2_n, "n reported in table2.csv (default: largest)");
  cmd->add_flag("--skip-bad", f.skip_bad, "skip drives that fail validation or extraction");
  cmd->add_flag("--no-models", f.no_models, "do not write trained models");
}

stress::RunConfig build_config(const Flags& f) {
  stress::RunConfig c;
  c.eval.jobs = stress::default_jobs();
  if (!f.config.empty()) stress::apply_config_text(c, stress::read_file(f.config));
  for (const auto& s : f.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw stress::Error(stress::ErrorCode::Usage, "--set expects key=value, got '" + s + "'");
    stress::apply_setting(c, std::string_view(s).substr(0, eq), std::string_view(s).substr(eq + 1));
  }
  if (!f.manifest.empty()) c.manifest = f.manifest;
  if (!f.out.empty()) c.out = f.out;
  if (!f.n.empty()) stress::apply_setting(c, "n", f.n);
  if (f.seed) c.eval.forest.rng_seed = *f.seed;
  if (f.jobs) c.eval.jobs = *f.jobs;
  if (!f.filter_pass.empty()) stress::apply_setting(c, "filter.pass", f.filter_pass);
  if (f.sample_rate) c.sample_rate_hz = *f.sample_rate;
  if (f.table2_n) c.table2_n = *f.table2_n;
  if (f.skip_bad) c.skip_bad = true;
  if (f.no_models) c.save_models = false;
  c.validate();
  return c;
}

void report(const stress::CommandResult& r) {
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "wrote " << r.written.size() << " files\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Future-stress prediction from driving physiology"};
  app.set_version_flag("--version", std::string(stress::kVersion));
  app.require_subcommand(1);

  Flags flags;
  auto* extract = app.add_subcommand("extract", "preprocess records and write per-window feature tables");
  add_run_flags(extract, flags, true);
  auto* evaluate = app.add_subcommand("evaluate", "leave-one-drive-out evaluation over extracted features");
  add_run_flags(evaluate, flags, false);
  auto* sweep = app.add_subcommand("sweep", "extract, then evaluate");
  add_run_flags(sweep, flags, true);

  unsigned selftest_jobs = stress::default_jobs();
  auto* selftest = app.add_subcommand("selftest", "check numerical kernels against reference implementations");
  selftest->add_option("--jobs", selftest_jobs, "worker threads")->check(CLI::PositiveNumber);

  std::string synth_out;
  stress::synthetic::CohortOptions synth_opts;
  auto* synth = app.add_subcommand("synth", "write a synthetic cohort (records, annotations, manifest)");
  synth->add_option("--out", synth_out, "target directory")->required();
  synth->add_option("--drives", synth_opts.drives, "number of drives")->check(CLI::Range(2, 99));
  synth->add_option("--seed", synth_opts.seed, "generator seed");
  synth->add_option("--sample-rate", synth_opts.sample_rate_hz, "Hz")->check(CLI::Range(16.0, 2048.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (extract->parsed()) report(stress::cmd_extract(build_config(flags)));
    else if (evaluate->parsed()) report(stress::cmd_evaluate(build_config(flags)));
    else if (sweep->parsed()) report(stress::cmd_sweep(build_config(flags)));
    else if (selftest->parsed()) return stress::run_selftest(std::cout, selftest_jobs) ? 0 : 3;
    else if (synth->parsed()) std::cout << stress::synthetic::write_cohort(synth_out, synth_opts).string() << "\n";
    return 0;
  } catch (const stress::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return stress::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: Internal: " << e.what() << "\n";
    return 3;
  }
}
