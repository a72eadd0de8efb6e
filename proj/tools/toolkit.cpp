// toolkit: command-line front end for the rbv library.
//
//   toolkit <subcommand> --config <path> [--out <path>] [--format csv|json] [--seed N] [--threads N]
//
// Exit status: 0 on success, 1 if the report has a fail row or a module error
// aborts a single-module subcommand, 2 on configuration errors.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "rbv/harness/commands.hpp"
#include "rbv/parallel.hpp"

namespace {

using namespace rbv;
using namespace rbv::harness;

struct Options {
  std::string config;
  std::string out;
  std::string format;
  std::optional<std::uint64_t> seed;
  int threads = 0;
};

void write_output(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(path, text);
  }
}

int thread_setting(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("TOOLKIT_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::config_error, std::string("TOOLKIT_THREADS must be a positive integer, got '") + env + "'");
  }
  return 1;
}

std::uint64_t effective_seed(const Options& o, const json& cfg) {
  if (o.seed) return *o.seed;
  return config_seed(Node(cfg, ""));
}

int run(const std::string& cmd, const Options& o) {
  parallel::set_thread_count(thread_setting(o.threads));
  if (cmd == "catalog") {
    write_output(catalog_text(parse_report_format(o.format.empty() ? "csv" : o.format)), o.out);
    return 0;
  }
  if (o.config.empty()) throw Error(ErrorCode::config_error, "--config is required");
  const json cfg = load_json_file(o.config);

  if (cmd == "verify") {
    const auto fmt = parse_report_format(o.format.empty() ? "csv" : o.format);
    const Report report = run_config(cfg, {o.seed});
    write_output(render_report(report, fmt), o.out);
    return report.has_failure() ? 1 : 0;
  }

  const Node e = single_experiment(cfg);
  if (cmd == "weights") {
    const auto fmt = parse_report_format(o.format.empty() ? "csv" : o.format);
    write_output(render_weights(weights_command(e), fmt), o.out);
    return 0;
  }
  const auto fmt = parse_report_format(o.format.empty() ? "json" : o.format);
  json result;
  if (cmd == "riesz-var") result = riesz_var_command(e);
  else if (cmd == "sobolev") result = sobolev_command(e);
  else result = varexp_command(e, effective_seed(o, cfg));
  write_output(render_object(result, fmt), o.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Weighted Riesz variation, weight constants and variable-exponent norms on sampled grids"};
  app.require_subcommand(1);
  Options opts;
  std::uint64_t seed = 0;

  const std::pair<const char*, const char*> commands[] = {
      {"weights", "A_p, A_1, RH_s, doubling constants and r_w of a weight"},
      {"riesz-var", "weighted Riesz p-variation with the optimal packing"},
      {"sobolev", "weighted Sobolev norm"},
      {"varexp", "variable-exponent diagnostics and norms"},
      {"verify", "run every experiment in the config and emit the report"},
      {"catalog", "list function and weight families"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (std::string(name) != "catalog") sub->add_option("--config", opts.config, "JSON config path")->required();
    sub->add_option("--out", opts.out, "output path (default: stdout)");
    sub->add_option("--format", opts.format, "csv or json");
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", opts.threads, "worker threads (default: TOOLKIT_THREADS or 1)")
        ->check(CLI::PositiveNumber);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--seed") > 0) opts.seed = seed;
  try {
    return run(sub->get_name(), opts);
  } catch (const Error& e) {
    std::cerr << "toolkit: " << e.what() << "\n";
    return e.code() == ErrorCode::config_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "toolkit: " << e.what() << "\n";
    return 1;
  }
}
