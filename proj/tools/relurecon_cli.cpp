// relurecon: file-based workbench (gen -> probe -> fit -> eval -> report).
//
// Any subcommand accepts `--config file.json`, an object whose keys are long
// flag names without the leading dashes. Config entries are spliced in ahead
// of the command line, and every option keeps its last value, so explicit
// flags win.

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "relurecon/analysis.hpp"
#include "relurecon/errors.hpp"
#include "relurecon/fit.hpp"
#include "relurecon/oracle.hpp"
#include "relurecon/patches.hpp"
#include "relurecon/relunet.hpp"

using namespace relurecon;
using nlohmann::json;

namespace {

std::string num(double x) {
  std::ostringstream out;
  out << std::setprecision(9) << x;
  return out.str();
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const std::string& path) {
  try {
    return json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out.flush()) throw Error("write failed: " + path);
}

void write_json(const std::string& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw std::invalid_argument("bad lambda grid entry '" + item + "'");
    grid.push_back(value);
  }
  if (grid.empty()) throw std::invalid_argument("empty lambda grid");
  return grid;
}

// ---------------------------------------------------------------------------
// Config splicing

std::string scalar_to_arg(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_number_unsigned()) return std::to_string(value.get<unsigned long long>());
  if (value.is_number_float()) {
    std::ostringstream out;
    out << std::setprecision(17) << value.get<double>();
    return out.str();
  }
  throw SchemaError("config values must be strings, numbers, booleans or arrays");
}

std::vector<std::string> config_args(const std::string& path) {
  const json doc = read_json(path);
  if (!doc.is_object()) throw SchemaError(path + ": config must be a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : doc.items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + key);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (const auto& item : value) text += (text.empty() ? "" : ",") + scalar_to_arg(item);
    } else {
      text = scalar_to_arg(value);
    }
    args.push_back("--" + key);
    args.push_back(text);
  }
  return args;
}

// Removes `--config X` / `--config=X` and splices its contents right after the
// subcommand name.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> rest;
  std::optional<std::string> config;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config") {
      if (i + 1 >= argc) throw CLI::ArgumentMismatch("--config requires a file");
      config = argv[++i];
    } else if (arg.rfind("--config=", 0) == 0) {
      config = arg.substr(9);
    } else {
      rest.push_back(arg);
    }
  }
  if (!config) return rest;
  auto extra = config_args(*config);
  auto sub = rest.begin();
  while (sub != rest.end() && sub->rfind("-", 0) == 0) ++sub;
  if (sub != rest.end()) ++sub;
  rest.insert(sub, extra.begin(), extra.end());
  return rest;
}

// ---------------------------------------------------------------------------
// Commands

struct GenArgs {
  std::string arch;
  std::uint64_t seed = 0;
  double scale = 1.0;
  bool final_activation = false;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  const Architecture arch = parse_architecture(a.arch);
  const auto net = random_network(arch, a.seed, a.scale, a.final_activation);
  write_text(a.out, save_network(net));
  std::cout << "arch=" << format_architecture(arch) << "\n";
  std::cout << "D=" << param_count(arch) << "\n";
  return 0;
}

struct ProbeArgs {
  std::string net;
  double radius = 1.0;
  std::size_t samples = 20;
  std::uint64_t seed = 0;
  std::string out;
  double h = 1e-5;
  double tol = 1e-3;
  int ndirs = 0;
};

int cmd_probe(const ProbeArgs& a) {
  const auto net = load_network(read_text(a.net));
  const Oracle oracle(net, a.radius);
  ProbeParams params;
  params.fd_step = a.h;
  params.smooth_step = a.h;
  params.tol = a.tol;
  params.ndirs = a.ndirs;
  const auto probes = sample_points(oracle, a.samples, a.seed, params);
  write_json(a.out, probes_to_json(probes));
  std::cout << "accepted=" << probes.points.size() << "\n";
  std::cout << "rejected=" << probes.rejected << "\n";
  std::cout << "queries=" << oracle.query_count() << "\n";
  return 0;
}

struct FitArgs {
  std::string net;
  std::string probes;
  std::string radii_mode = "disjoint";
  double shrink = 0.8;
  std::string reg = "none";
  double lambda = 0.0;
  std::optional<double> lr;
  std::size_t iters = 100000;
  double grad_tol = 1e-9;
  std::string pairs = "none";
  std::uint64_t seed = 0;
  std::size_t mc = kDefaultMcSamples;
  double scale = 1.0;
  std::string out;
  std::string report;
  bool check_normal = false;
};

struct FitRun {
  FitConfig config;
  double domain_radius = 1.0;
  std::string pairs = "none";
  std::vector<LocalPatch> patches;
};

FitReport run_fit(const FitRun& run, const Oracle& oracle) {
  if (run.pairs == "none") return fit_weights(run.patches, oracle, run.config);
  const auto pairs = overlapping_pairs(run.patches);
  return fit_second_order(run.patches, oracle, run.config, pairs);
}

json run_to_json(const FitRun& run, const FitReport& report) {
  json patches = json::array();
  for (const auto& p : run.patches) patches.push_back(patch_to_json(p));
  return {{"T", run.domain_radius},
          {"pairs", run.pairs},
          {"config", config_to_json(run.config)},
          {"patches", patches},
          {"report", report_to_json(report)}};
}

FitRun run_from_json(const json& doc) {
  FitRun run;
  try {
    run.domain_radius = doc.at("T").get<double>();
    run.pairs = doc.at("pairs").get<std::string>();
    run.config = config_from_json(doc.at("config"));
    for (const auto& p : doc.at("patches")) run.patches.push_back(patch_from_json(p));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("fit report: ") + e.what());
  }
  if (run.pairs != "none" && run.pairs != "all_overlapping") {
    throw SchemaError("fit report: unknown pair policy '" + run.pairs + "'");
  }
  return run;
}

int cmd_fit(const FitArgs& a) {
  const auto net = load_network(read_text(a.net));
  const auto probes = probes_from_json(read_json(a.probes));
  if (static_cast<int>(probes.points.front().size()) != net.input_dim()) {
    throw DimensionError("probe dimension does not match the network input");
  }

  FitRun run;
  run.domain_radius = probes.domain_radius;
  run.pairs = a.pairs;
  run.config.learning_rate = a.lr;
  run.config.max_iters = a.iters;
  run.config.grad_tol = a.grad_tol;
  run.config.reg = {parse_reg_kind(a.reg), a.lambda};
  run.config.mc_samples = a.mc;
  run.config.seed = a.seed;
  run.config.validate();

  const std::vector<double> scales(probes.points.size(), a.scale);
  const RadiiMode mode = a.radii_mode == "gershgorin"
                             ? RadiiMode::gershgorin(a.shrink, a.mc, a.seed)
                             : RadiiMode::disjoint();
  const auto radii = select_radii(probes, scales, probes.domain_radius, mode);
  run.patches = build_patches(probes, scales, radii);

  const Oracle oracle(net, probes.domain_radius);
  const FitReport report = run_fit(run, oracle);

  write_json(a.out, model_to_json(make_model(run.patches, report)));
  write_json(a.report.empty() ? a.out + ".report.json" : a.report, run_to_json(run, report));

  const double thr = report.nonzero_threshold;
  std::cout << "objective=" << num(report.final_objective) << "\n";
  std::cout << "penalty=" << num(report.penalty) << "\n";
  std::cout << "iterations=" << report.iterations << "\n";
  std::cout << "converged=" << (report.converged ? "true" : "false") << "\n";
  std::cout << "learning_rate=" << num(report.learning_rate) << "\n";
  if (report.gershgorin_margins.size() > 0) {
    std::cout << "gershgorin_ok=" << (report.gershgorin_ok ? "true" : "false")
              << " min_margin=" << num(report.gershgorin_margins.minCoeff())
              << " max_margin=" << num(report.gershgorin_margins.maxCoeff()) << "\n";
  }
  std::cout << "hessian_min_eigenvalue=" << num(report.hessian_min_eigenvalue) << "\n";
  std::cout << "nonzero=" << report.nonzero_count(thr) << "/" << report.weights.size() << "\n";
  if (run.pairs != "none") {
    std::cout << "nonzero_pairs=" << report.nonzero_pair_count(thr) << "/"
              << report.pair_weights.size() << "\n";
  }
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";

  if (a.check_normal) {
    if (run.config.reg.kind == RegKind::l1) {
      throw std::invalid_argument("--check-normal has no closed form under l1");
    }
    const double volume = ball_volume(net.input_dim(), probes.domain_radius);
    const double ridge = run.config.reg.kind == RegKind::l2
                             ? run.config.reg.lambda * static_cast<double>(a.mc) / volume
                             : 0.0;
    std::vector<PatchPair> pairs;
    if (run.pairs != "none") {
      for (const auto& pw : report.pair_weights) pairs.emplace_back(pw.i, pw.j);
    }
    const Eigen::VectorXd exact =
        solve_normal_equations(run.patches, oracle, a.mc, a.seed, ridge, pairs);
    Eigen::VectorXd fitted(exact.size());
    fitted.head(report.weights.size()) = report.weights;
    for (std::size_t k = 0; k < report.pair_weights.size(); ++k) {
      fitted[report.weights.size() + static_cast<Eigen::Index>(k)] = report.pair_weights[k].value;
    }
    std::cout << "normal_equations_max_diff=" << num((fitted - exact).cwiseAbs().maxCoeff())
              << "\n";
  }
  return 0;
}

struct EvalArgs {
  std::string net;
  std::string model;
  double p = 2.0;
  std::size_t mc = kDefaultMcSamples;
  std::uint64_t seed = 0;
  double radius = 1.0;
};

int cmd_eval(const EvalArgs& a) {
  const auto net = load_network(read_text(a.net));
  const auto model = model_from_json(read_json(a.model));
  for (const auto& patch : model.patches) {
    if (patch.center.size() != net.input_dim()) {
      throw DimensionError("model dimension does not match the network input");
    }
  }
  const ScalarField f = [&](const Eigen::VectorXd& x) { return net(x); };
  const ScalarField h = [&](const Eigen::VectorXd& x) { return model_eval(model, x); };
  const ScalarField zero = [](const Eigen::VectorXd&) { return 0.0; };
  const auto d = dp_distance(h, f, net.input_dim(), a.radius, a.p, a.mc, a.seed);
  const auto ref = dp_distance(zero, f, net.input_dim(), a.radius, a.p, a.mc, a.seed);
  std::cout << "d_p(h,f)=" << num(d.value) << " +- " << num(d.std_error) << "\n";
  std::cout << "d_p(0,f)=" << num(ref.value) << " +- " << num(ref.std_error) << "\n";
  std::cout << "ratio=" << num(ref.value > 0 ? d.value / ref.value : 0.0) << "\n";
  return 0;
}

struct ReportArgs {
  std::string net;
  std::string fit;
  std::string lambda_grid = "0,1e-4,1e-3,1e-2,1e-1";
  std::string out;
  std::size_t regions = 100000;
};

int cmd_report(const ReportArgs& a) {
  const auto net = load_network(read_text(a.net));
  const json doc = read_json(a.fit);
  const FitRun run = run_from_json(doc);
  FitReport base;
  try {
    base = report_from_json(doc.at("report"));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("fit report: ") + e.what());
  }
  const auto grid = parse_grid(a.lambda_grid);

  const Oracle oracle(net, run.domain_radius);
  const Refit rerun = [&](double lambda) {
    FitRun r = run;
    r.config.reg = {RegKind::l1, lambda};
    return run_fit(r, oracle);
  };
  const auto report =
      conjecture_report(base, net, grid, rerun, run.domain_radius, a.regions, run.config.seed);
  if (!a.out.empty()) write_json(a.out, conjecture_to_json(report));

  std::cout << "lambda nonzero nonzero_pairs objective converged\n";
  for (const auto& row : report.lambda_grid) {
    std::cout << num(row.lambda) << " " << row.nonzero << " " << row.nonzero_pairs << " "
              << num(row.objective) << " " << (row.converged ? "true" : "false") << "\n";
  }
  std::cout << "patches=" << report.patch_count << "\n";
  std::cout << "n1=" << report.first_layer_width << "\n";
  std::cout << "regions=" << report.empirical_region_count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reconstruct a black-box ReLU network from local tangent patches."};
  app.footer("All subcommands accept --config FILE (JSON object of flag values; flags win).");
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a random target network");
  g->add_option("--arch", gen.arch, "Widths n0,n1,...,1")->required();
  g->add_option("--seed", gen.seed);
  g->add_option("--scale", gen.scale, "Parameters drawn from U[-scale, scale]");
  g->add_flag("--final-activation", gen.final_activation);
  g->add_option("--out", gen.out)->required();

  ProbeArgs probe;
  auto* p = app.add_subcommand("probe", "Sample smooth probe points with gradients");
  p->set_help_flag("--help", "Print this help message and exit");
  p->add_option("--net", probe.net)->required();
  p->add_option("--radius", probe.radius, "Domain radius T");
  p->add_option("--samples", probe.samples, "Accepted probes N");
  p->add_option("--seed", probe.seed);
  p->add_option("--out", probe.out)->required();
  p->add_option("--h", probe.h, "Finite-difference and smoothness step");
  p->add_option("--tol", probe.tol, "Smoothness tolerance");
  p->add_option("--ndirs", probe.ndirs, "Smoothness directions (0: max(n0,4))");

  FitArgs fit;
  auto* f = app.add_subcommand("fit", "Select radii and fit patch weights");
  f->add_option("--net", fit.net)->required();
  f->add_option("--probes", fit.probes)->required();
  f->add_option("--radii-mode", fit.radii_mode)
      ->check(CLI::IsMember({"disjoint", "gershgorin"}));
  f->add_option("--shrink", fit.shrink);
  f->add_option("--reg", fit.reg)->check(CLI::IsMember({"none", "l1", "l2"}));
  f->add_option("--lambda", fit.lambda);
  f->add_option("--lr", fit.lr, "Learning rate (default 1/lambda_max)");
  f->add_option("--iters", fit.iters);
  f->add_option("--grad-tol", fit.grad_tol);
  f->add_option("--pairs", fit.pairs)->check(CLI::IsMember({"none", "all_overlapping"}));
  f->add_option("--seed", fit.seed);
  f->add_option("--mc", fit.mc, "Fixed sample count");
  f->add_option("--scale", fit.scale, "Patch scale c for every probe");
  f->add_option("--out", fit.out, "Model file")->required();
  f->add_option("--report", fit.report, "Fit report file (default <out>.report.json)");
  f->add_flag("--check-normal", fit.check_normal, "Compare against the normal equations");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Estimate d_p between model and network");
  e->add_option("--net", eval.net)->required();
  e->add_option("--model", eval.model)->required();
  e->add_option("--p", eval.p);
  e->add_option("--mc", eval.mc);
  e->add_option("--seed", eval.seed);
  e->add_option("--radius", eval.radius, "Domain radius T");

  ReportArgs rep;
  auto* r = app.add_subcommand("report", "Sparsity versus lambda, next to n1 and region count");
  r->add_option("--net", rep.net)->required();
  r->add_option("--fit", rep.fit, "Fit report written by `fit`")->required();
  r->add_option("--lambda-grid", rep.lambda_grid);
  r->add_option("--out", rep.out);
  r->add_option("--regions", rep.regions, "Samples for the region count");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }

  try {
    if (*g) return cmd_gen(gen);
    if (*p) return cmd_probe(probe);
    if (*f) return cmd_fit(fit);
    if (*e) return cmd_eval(eval);
    if (*r) return cmd_report(rep);
  } catch (const std::invalid_argument& err) {
    std::cerr << "usage error: " << err.what() << "\n";
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 1;
}
