#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "microflow/deployer.hpp"
#include "microflow/errors.hpp"
#include "microflow/http_server.hpp"
#include "microflow/service.hpp"
#include "microflow/simulator.hpp"

using namespace microflow;

namespace {

HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::NotFound, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int serve(const std::string& config_path) {
  ServiceConfig config = load_service_config(config_path);
  Service service(config);
  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on " << config.listen_address << "\n";
  if (!server.listen(config.host(), config.port())) {
    std::cerr << "cannot listen on " << config.listen_address << "\n";
    return 1;
  }
  return 0;
}

int sim_run(const std::string& scenario_name, std::optional<std::uint64_t> seed,
            std::optional<double> accuracy, const std::string& out) {
  sim::Scenario scenario = sim::load_scenario(scenario_name);
  sim::RunOptions options;
  options.seed = seed;
  options.accuracy_p = accuracy;
  options.out_dir = out;
  sim::RunResult result = sim::run_scenario(scenario, options);
  std::cout << canonicalize(result.report) << "\n";
  return result.outcome == sim::Outcome::Completed ? 0 : 1;
}

int sim_compare(const std::string& a, const std::string& b) {
  sim::Comparison c = sim::compare_runs(a, b);
  if (c.identical) {
    std::cout << "identical\n";
    return 0;
  }
  std::cout << "diverge at seq " << c.divergent_seq << "\n";
  return 1;
}

int bundle_verify(const std::string& path) {
  Value bundle = deployer::load_bundle(read_file(path));
  std::cout << "ok " << bundle.at("manifest").at("contentHash").as_string() << "\n";
  return 0;
}

int bundle_call(const std::string& path, const std::string& method,
                const std::string& route, const std::string& args) {
  Value bundle = deployer::load_bundle(read_file(path));
  Value parsed = parse_json(args);
  std::vector<Value> list(parsed.as_list().begin(), parsed.as_list().end());
  std::cout << canonicalize(deployer::serve_local(bundle, method, route, list)) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavior-driven microtask orchestration service"};
  app.require_subcommand(1);

  std::string config_path;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", config_path, "Service config file")->required();

  auto* sim_cmd = app.add_subcommand("sim", "Crowd simulator");
  sim_cmd->require_subcommand(1);
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<double> accuracy;
  std::string out = "sim-out";
  auto* run_cmd = sim_cmd->add_subcommand("run", "Run a scenario");
  run_cmd->add_option("scenario", scenario, "Scenario file or shipped name")->required();
  run_cmd->add_option("--seed", seed, "RNG seed (defaults to the scenario's)");
  run_cmd->add_option("--accuracy", accuracy, "Override every worker's accuracyP")
      ->check(CLI::Range(0.0, 1.0));
  run_cmd->add_option("--out", out, "Output directory");
  std::string log_a, log_b;
  auto* compare_cmd = sim_cmd->add_subcommand("compare", "Compare two event logs");
  compare_cmd->add_option("logA", log_a)->required();
  compare_cmd->add_option("logB", log_b)->required();

  auto* bundle_cmd = app.add_subcommand("bundle", "Bundle tools");
  bundle_cmd->require_subcommand(1);
  std::string bundle_path, method, route, args = "[]";
  auto* verify_cmd = bundle_cmd->add_subcommand("verify", "Recompute the content hash");
  verify_cmd->add_option("file", bundle_path)->required();
  auto* call_cmd = bundle_cmd->add_subcommand("call", "Serve one request locally");
  call_cmd->add_option("file", bundle_path)->required();
  call_cmd->add_option("method", method)->required();
  call_cmd->add_option("path", route)->required();
  call_cmd->add_option("args", args, "JSON list of arguments");

  CLI11_PARSE(app, argc, argv);

  try {
    if (serve_cmd->parsed()) return serve(config_path);
    if (run_cmd->parsed()) return sim_run(scenario, seed, accuracy, out);
    if (compare_cmd->parsed()) return sim_compare(log_a, log_b);
    if (verify_cmd->parsed()) return bundle_verify(bundle_path);
    if (call_cmd->parsed()) return bundle_call(bundle_path, method, route, args);
  } catch (const DomainError& e) {
    std::cerr << error_name(e.code()) << ": " << e.what() << "\n";
    return 2;
  }
  return 1;
}
