#include "conscope/cli.hpp"

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "conscope/conscore.hpp"
#include "conscope/dataio.hpp"
#include "conscope/errors.hpp"
#include "conscope/httpapi.hpp"
#include "conscope/simgen.hpp"

namespace conscope::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<HttpServer*> g_server{nullptr};

extern "C" void stop_server(int) {
  if (auto* server = g_server.load()) server->stop();
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> parts;
  if (text.empty() || text == "all") return parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) parts.push_back(item);
  return parts;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError(path.string() + ": cannot open for writing");
  f << text;
  if (!f.flush()) throw IoError(path.string() + ": write failed");
}

std::string describe(const ConScoreEntry& e) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << "r2=" << e.r2 << " |cos|=" << e.cos_abs << " score=" << e.score
    << " n_used=" << e.n_used;
  return s.str();
}

struct SimulateArgs {
  int instance = 0;
  bool all = false;
  std::size_t n = 2000;
  std::uint64_t seed = 0;
  std::string out;
};

struct ConscoreArgs {
  std::string run, checkpoint, covariates = "all", out;
  std::optional<double> ridge_ols;
  double ridge_logistic = kDefaultLogisticRidge;
  std::size_t permutations = 0;
  std::uint64_t seed = 0;
};

struct DeconfoundArgs {
  std::string run, covariate, out;
  std::uint64_t seed = 0;
};

struct ServeArgs {
  std::vector<std::string> runs;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::string static_dir;
};

int do_simulate(const SimulateArgs& a, std::ostream& out) {
  const fs::path root(a.out);
  if (a.all) {
    for (int id = 1; id <= kSimInstances; ++id) {
      const fs::path dir = root / ("instance_" + std::to_string(id));
      write_run(generate_instance(id, a.n, a.seed).run, dir);
      out << dir.string() << '\n';
    }
  } else {
    write_run(generate_instance(a.instance, a.n, a.seed).run, root);
    out << root.string() << '\n';
  }
  return kExitOk;
}

int do_conscore(const ConscoreArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedRun run = load_run(a.run);
  ConScoreOptions options;
  options.ridge_ols = a.ridge_ols;
  options.ridge_logistic = a.ridge_logistic;
  options.permutations = a.permutations;
  options.seed = a.seed;
  const auto report = compute_report(run, a.checkpoint, split_list(a.covariates), options);
  for (const auto& e : report.entries)
    for (const auto& w : e.warnings) err << "warning: " << w << '\n';
  write_file(a.out, report_to_json(report));
  out << report_to_table(report) << a.out << '\n';
  return kExitOk;
}

int do_deconfound(const DeconfoundArgs& a, std::ostream& out) {
  const LoadedRun run = load_run(a.run);
  const auto& ckpt = run.last_checkpoint();
  const auto& desc = run.descriptor(a.covariate);
  const auto before = compute_con_score(ckpt.representation.values, desc, run.covariate(a.covariate), ckpt.final_layer);
  const LoadedRun balanced = resample_deconfound(run, a.covariate, a.seed);
  const auto& bck = balanced.last_checkpoint();
  const auto after =
      compute_con_score(bck.representation.values, desc, balanced.covariate(a.covariate), bck.final_layer);
  write_run(balanced, a.out);
  out << "covariate " << desc.name << " (checkpoint " << ckpt.representation.checkpoint << ")\n"
      << "  before: " << describe(before) << '\n'
      << "  after:  " << describe(after) << '\n'
      << a.out << '\n';
  return kExitOk;
}

int do_validate(const std::string& dir, std::ostream& out) {
  const LoadedRun run = parse_run(dir);
  const auto report = validate_run(run);
  if (report.ok()) {
    out << "OK\n";
    return kExitOk;
  }
  out << report.to_text();
  return kExitFailure;
}

int do_serve(const ServeArgs& a, std::ostream& out) {
  std::vector<LoadedRun> runs;
  for (const auto& dir : a.runs) runs.push_back(load_run(dir));
  const ApiService service(std::move(runs));
  std::optional<fs::path> static_dir;
  if (!a.static_dir.empty()) static_dir = a.static_dir;
  HttpServer server(service, static_dir);
  const int port = server.bind(a.host, a.port);
  out << "serving " << a.runs.size() << " run(s) on http://" << a.host << ":" << port << '\n' << std::flush;
  g_server = &server;
  auto old_int = std::signal(SIGINT, stop_server);
  auto old_term = std::signal(SIGTERM, stop_server);
  server.listen();
  g_server = nullptr;
  std::signal(SIGINT, old_int);
  std::signal(SIGTERM, old_term);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"conscope: confounder scores on penultimate-layer representations"};
  app.name("conscope");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Write simulated run directories (instances 1-8)");
  auto* inst_opt = simulate->add_option("--instance", sim.instance, "Instance id")->check(CLI::Range(1, kSimInstances));
  auto* all_opt = simulate->add_flag("--all", sim.all, "Write all eight instances to OUT/instance_<id>");
  inst_opt->excludes(all_opt);
  simulate->add_option("--n", sim.n, "Samples per instance")->check(CLI::Range(std::size_t{100}, std::size_t{100000000}));
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--out", sim.out, "Output directory")->required();

  ConscoreArgs cs;
  auto* conscore = app.add_subcommand("conscore", "Con-score report for a run");
  conscore->add_option("--run", cs.run, "Run directory")->required();
  conscore->add_option("--checkpoint", cs.checkpoint, "Checkpoint label (default: last)");
  conscore->add_option("--covariates", cs.covariates, "Comma-separated names or 'all'");
  conscore->add_option("--ridge-ols", cs.ridge_ols, "OLS ridge (default: 1e-8 trace(HcT Hc)/d)")->check(CLI::NonNegativeNumber);
  conscore->add_option("--ridge-logistic", cs.ridge_logistic, "Logistic ridge")->check(CLI::PositiveNumber);
  conscore->add_option("--permutations", cs.permutations, "Permutation replicates (0 = off)");
  conscore->add_option("--seed", cs.seed, "Permutation seed");
  conscore->add_option("--out", cs.out, "Report JSON file")->required();

  DeconfoundArgs dc;
  auto* deconfound = app.add_subcommand("deconfound", "Balance a binary covariate against y by resampling");
  deconfound->add_option("--run", dc.run, "Run directory")->required();
  deconfound->add_option("--covariate", dc.covariate, "Binary covariate")->required();
  deconfound->add_option("--seed", dc.seed, "Resampling seed");
  deconfound->add_option("--out", dc.out, "Output run directory")->required();

  std::string validate_dir;
  auto* validate = app.add_subcommand("validate", "Check every run invariant");
  validate->add_option("--run", validate_dir, "Run directory")->required();

  ServeArgs sv;
  auto* serve = app.add_subcommand("serve", "Serve the read-only HTTP API");
  serve->add_option("--run", sv.runs, "Run directory (repeatable)")->required();
  serve->add_option("--port", sv.port, "Port")->check(CLI::Range(0, 65535));
  serve->add_option("--host", sv.host, "Listen address");
  serve->add_option("--static", sv.static_dir, "Directory of web UI assets to serve at /");

  std::vector<const char*> argv{"conscope"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (simulate->parsed() && !sim.all && sim.instance == 0)
      throw CLI::RequiredError("one of --instance or --all");
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (simulate->parsed()) return do_simulate(sim, out);
    if (conscore->parsed()) return do_conscore(cs, out, err);
    if (deconfound->parsed()) return do_deconfound(dc, out);
    if (validate->parsed()) return do_validate(validate_dir, out);
    if (serve->parsed()) return do_serve(sv, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace conscope::cli
