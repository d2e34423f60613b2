#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "netcontest/netcontest.hpp"

namespace netcontest::cli {

struct CommandRequest {
  std::string subcommand;
  std::string instance_path;
  std::string graph_path;
  std::optional<std::string> out_path;
  std::optional<std::string> format;  // json | csv; default depends on the subcommand
  std::optional<Player> from;
  std::optional<Player> to;
  int steps = 200;
  std::optional<double> tau_max;  // default 0.9 B_from
  ThreeNodeParams three{};
  double tau = 0.0;
  std::vector<Player> donors;
  std::optional<double> beta;
  int max_iters = 2000;
  std::optional<double> flat_tol;
  std::uint64_t seed = 0;
  double eta1 = 1.0 - 1.0 / 64.0;
  double eta2 = 0.5;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumerical = 3;

namespace detail {

inline std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

/// Writes next to the target and renames, so readers never see a partial file.
inline void write_atomic(const std::string& path, const std::string& content) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IOError("cannot open " + tmp.string() + " for writing");
    f << content;
    f.flush();
    if (!f) throw IOError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IOError("cannot move output into place at " + path);
  }
}

inline std::string resolve_format(const CommandRequest& req, const char* fallback,
                                  bool csv_allowed) {
  const std::string f = req.format.value_or(fallback);
  if (f != "json" && f != "csv") throw ValidationError("--format", "expected json or csv");
  if (f == "csv" && !csv_allowed)
    throw ValidationError("--format", req.subcommand + " only writes json");
  return f;
}

inline Player require_player(const std::optional<Player>& p, const char* flag,
                             const ContestInstance& inst) {
  if (!p) throw ValidationError(flag, "required");
  if (*p >= inst.size())
    throw ValidationError(flag, "player " + std::to_string(*p) + " out of range (n = " +
                                    std::to_string(inst.size()) + ")");
  return *p;
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

inline std::string run_solve(const CommandRequest& req) {
  const auto doc = load_instance_file(req.instance_path);
  const auto sol = solve_equilibrium(doc.instance);
  if (resolve_format(req, "json", true) == "json")
    return dump(solution_to_json(doc.instance, sol));
  std::ostringstream out;
  out << "player,budget,lambda,payoff\n";
  for (Player i = 0; i < doc.instance.size(); ++i)
    out << i << ',' << format_double(doc.instance.budget(i)) << ','
        << format_double(sol.costs[i]) << ',' << format_double(sol.payoffs[i]) << '\n';
  return out.str();
}

inline std::string run_derivative(const CommandRequest& req) {
  resolve_format(req, "json", false);
  const auto doc = load_instance_file(req.instance_path);
  const Player a = require_player(req.from, "--from", doc.instance);
  const Player b = require_player(req.to, "--to", doc.instance);
  return dump(sensitivity_to_json(transfer_derivative(doc.instance, a, b)));
}

inline std::string run_sweep(const CommandRequest& req) {
  const std::string format = resolve_format(req, "csv", true);
  const auto doc = load_instance_file(req.instance_path);
  const Player a = require_player(req.from, "--from", doc.instance);
  const Player b = require_player(req.to, "--to", doc.instance);
  const double tau_max = req.tau_max.value_or(0.9 * doc.instance.budget(a));
  const auto curve = sweep_transfer(doc.instance, a, b, req.steps, tau_max);
  if (format == "json") return dump(curve_to_json(curve));
  std::ostringstream out;
  write_sweep_csv(out, curve);
  return out.str();
}

inline std::string run_check3(const CommandRequest& req, std::ostream& err) {
  resolve_format(req, "json", false);
  const auto feas = three_node_feasible(req.three);
  Json out = feasibility_to_json(feas);
  out["tau"] = req.tau;
  try {
    out["closed_form"] = closed_form_to_json(three_node_closed_form(req.three, req.tau));
  } catch (const BoundaryError& e) {
    out["closed_form"] = nullptr;
    err << "warn: " << one_line(e.what()) << '\n';
  }
  return dump(out);
}

inline std::string run_construct(const CommandRequest& req) {
  resolve_format(req, "json", false);
  const Topology graph = load_topology_file(req.graph_path);
  if (!req.from) throw ValidationError("--from", "required");
  if (!req.to) throw ValidationError("--to", "required");
  ConstructOptions opts;
  opts.seed = req.seed;
  if (req.eta1 != ExtensionControls{}.eta1 || req.eta2 != ExtensionControls{}.eta2)
    opts.controls = ExtensionControls{req.eta1, req.eta2, 1.0, 0.0, 0.0};
  const auto ci = construct_for_graph(graph, *req.from, *req.to, opts);
  return dump(instance_to_json(ci.instance, ci.certificate));
}

/// Donation options come from the instance's arcs; without any, each donor
/// may give to every other player.
inline DonationGraph donation_graph_for(const ContestInstance& inst,
                                        const std::vector<Player>& donors) {
  if (!inst.donations().empty()) return inst.donations();
  std::vector<std::pair<Player, Player>> arcs;
  for (Player d : donors)
    for (Player j = 0; j < inst.size(); ++j)
      if (j != d) arcs.emplace_back(d, j);
  return DonationGraph(arcs);
}

inline std::string run_optimize(const CommandRequest& req) {
  const std::string format = resolve_format(req, "csv", true);
  const auto doc = load_instance_file(req.instance_path);
  if (req.donors.empty()) throw ValidationError("--donors", "at least one donor is required");
  for (Player d : req.donors) require_player(d, "--donors", doc.instance);
  OptimizerOptions opts;
  opts.beta = req.beta;
  opts.max_iters = req.max_iters;
  opts.flat_tol = req.flat_tol;
  const auto trace = optimize_donations(doc.instance, donation_graph_for(doc.instance, req.donors),
                                        req.donors, opts);
  if (format == "csv") {
    std::ostringstream out;
    write_trace_csv(out, trace);
    return out.str();
  }
  Json j = trace_to_json(doc.instance, trace);
  j["no_donation_payoffs"] = solve_equilibrium(doc.instance).payoffs;
  return dump(j);
}

}  // namespace detail

/// Dispatches one request. Results go to `out` (or --out, written
/// atomically); failures print one `error:` line to `err`.
inline int run(const CommandRequest& req, std::ostream& out, std::ostream& err) {
  try {
    std::string text;
    if (req.subcommand == "solve")
      text = detail::run_solve(req);
    else if (req.subcommand == "derivative")
      text = detail::run_derivative(req);
    else if (req.subcommand == "sweep")
      text = detail::run_sweep(req);
    else if (req.subcommand == "check3")
      text = detail::run_check3(req, err);
    else if (req.subcommand == "construct")
      text = detail::run_construct(req);
    else if (req.subcommand == "optimize")
      text = detail::run_optimize(req);
    else
      throw ValidationError("subcommand", "unknown subcommand '" + req.subcommand + "'");
    if (req.out_path)
      detail::write_atomic(*req.out_path, text);
    else
      out << text << std::flush;
    return kExitOk;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << detail::one_line(e.what()) << '\n';
    switch (e.error_class()) {
      case ErrorClass::kInput: return kExitValidation;
      case ErrorClass::kNumerical: return kExitNumerical;
      case ErrorClass::kIO: return kExitFailure;
    }
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: internal: " << detail::one_line(e.what()) << '\n';
    return kExitFailure;
  }
}

/// Parses argv into a request. Returns nullopt when the process should exit
/// with `exit_code` (help output or a usage error).
inline std::optional<CommandRequest> parse_command_line(int argc, const char* const* argv,
                                                        std::ostream& out, std::ostream& err,
                                                        int& exit_code) {
  CommandRequest req;
  CLI::App app{"Equilibria and budget transfers in networked contest games", "netcontest"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", req.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", req.out_path, "output file (written atomically); stdout if absent");
  };
  auto add_pair = [&](CLI::App* sub) {
    sub->add_option("--from", req.from, "donor index")->required();
    sub->add_option("--to", req.to, "recipient index")->required();
  };

  auto* solve = app.add_subcommand("solve", "solve the equilibrium of an instance");
  solve->add_option("instance", req.instance_path, "instance JSON")->required();
  add_common(solve);

  auto* derivative = app.add_subcommand("derivative", "payoff derivatives of a transfer at zero");
  derivative->add_option("instance", req.instance_path, "instance JSON")->required();
  add_pair(derivative);
  add_common(derivative);

  auto* sweep = app.add_subcommand("sweep", "payoffs over a grid of transfer sizes");
  sweep->add_option("instance", req.instance_path, "instance JSON")->required();
  add_pair(sweep);
  sweep->add_option("--steps", req.steps, "grid points including both ends")
      ->capture_default_str();
  sweep->add_option("--tau-max", req.tau_max, "largest transfer (default 0.9 B_from)");
  add_common(sweep);

  auto* check3 = app.add_subcommand("check3", "mutual-benefit conditions on the 3-node line");
  check3->add_option("--b1", req.three.B1)->required();
  check3->add_option("--b2", req.three.B2)->required();
  check3->add_option("--b3", req.three.B3)->required();
  check3->add_option("--v1", req.three.v1, "value of item (1,2)")->required();
  check3->add_option("--v2", req.three.v2, "value of item (2,3)")->required();
  check3->add_option("--tau", req.tau, "transfer at which to evaluate the closed form")
      ->capture_default_str();
  add_common(check3);

  auto* construct = app.add_subcommand("construct", "certified instance on a given graph");
  construct->add_option("--graph", req.graph_path, "topology JSON")->required();
  add_pair(construct);
  construct->add_option("--seed", req.seed, "seed for the randomized searches")
      ->capture_default_str();
  construct->add_option("--eta1", req.eta1)->capture_default_str();
  construct->add_option("--eta2", req.eta2)->capture_default_str();
  add_common(construct);

  auto* optimize = app.add_subcommand("optimize", "replicator ascent on donation fractions");
  optimize->add_option("instance", req.instance_path, "instance JSON")->required();
  optimize->add_option("--donors", req.donors, "donor indices")->required()->delimiter(',');
  optimize->add_option("--beta", req.beta, "smoothing parameter (default 1 + max |f|)");
  optimize->add_option("--max-iters", req.max_iters)->capture_default_str();
  optimize->add_option("--flat-tol", req.flat_tol, "default 1e-8 (1 + sum v)");
  add_common(optimize);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    exit_code = kExitOk;
    return std::nullopt;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    exit_code = kExitOk;
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    err << "error: usage: " << detail::one_line(e.what()) << '\n';
    exit_code = kExitValidation;
    return std::nullopt;
  }
  req.subcommand = app.get_subcommands().front()->get_name();
  return req;
}

}  // namespace netcontest::cli
