#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>
#include <unistd.h>

#include "polyinit/construct.hpp"
#include "polyinit/error.hpp"
#include "polyinit/experiments.hpp"
#include "polyinit/net.hpp"
#include "text_io.hpp"

namespace polyinit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Usage : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rows of numbers separated by commas or whitespace. A first line that does
// not parse is treated as a header.
std::vector<std::vector<double>> read_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_number = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_number;
    const auto tokens = detail::split(line, ", \t\r");
    if (tokens.empty() || tokens.front().front() == '#') continue;
    std::vector<double> row;
    try {
      for (auto t : tokens) row.push_back(detail::parse_double(t));
    } catch (const InvalidArgument&) {
      if (first) {
        first = false;
        continue;
      }
      throw InvalidArgument(path + ":" + std::to_string(line_number) + ": not a number");
    }
    first = false;
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd rows_to_matrix(const std::vector<std::vector<double>>& rows, std::size_t cols,
                               const std::string& what) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() < cols) {
      throw InvalidArgument(what + ": row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                            " columns, expected " + std::to_string(cols));
    }
    for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

std::string shape_line(const DenseNet& net) {
  std::ostringstream s;
  s << net.input_dim();
  for (int w : net.hidden_widths()) s << " " << w;
  s << " " << net.output_dim();
  return s.str();
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path);
  body(out);
  if (!out) throw InvalidArgument("write failed: " + path);
}

// --- build --------------------------------------------------------------------

struct BuildOptions {
  std::string kind;
  std::vector<double> interval;
  int depth = 4;
  int dim = 4;
  std::string index;
  std::string expansion;
  std::string out;
  std::string layout;
};

MultiIndex parse_index(const std::string& text) {
  std::vector<int> entries;
  for (auto t : detail::split(text, ", ")) entries.push_back(static_cast<int>(detail::parse_long(t)));
  if (entries.empty()) throw InvalidArgument("--index needs at least one entry");
  return MultiIndex(entries);
}

int cmd_build(const BuildOptions& o, std::ostream& out) {
  Interval interval = o.kind == "stilde" ? Interval{0.0, 1.0} : Interval{-1.0, 1.0};
  if (!o.interval.empty()) interval = {o.interval[0], o.interval[1]};
  check_interval(interval);

  std::optional<DenseNet> net;
  BlockLayout layout;
  double bound = 0.0;
  if (o.kind == "squaring") {
    SquaringNet s = build_squaring_net(interval, o.depth);
    net = s.net;
    layout = s.layout;
    bound = squaring_error_bound(interval, o.depth);
  } else {
    std::optional<ConstructedNet> c;
    if (o.kind == "product") {
      c = build_product_net(interval, o.depth);
    } else if (o.kind == "monomial") {
      if (o.index.empty()) throw Usage("build monomial needs --index");
      const MultiIndex index = parse_index(o.index);
      const Box domain = Box::cube(index.dim(), interval);
      c = build_monomial_net(index, legendre_factors(index, domain), domain, o.depth);
    } else if (o.kind == "expansion") {
      if (o.expansion.empty()) throw Usage("build expansion needs --expansion");
      c = build_expansion_net(load_expansion(o.expansion), o.depth);
    } else if (o.kind == "stilde") {
      c = build_stilde_net(o.dim, interval, o.depth);
    } else {
      throw Usage("unknown construction '" + o.kind + "'");
    }
    net = c->net;
    layout = c->layout;
    bound = c->error_bound;
  }

  save_net(o.out, *net);
  const std::string layout_path = o.layout.empty() ? o.out + ".layout.json" : o.layout;
  write_file(layout_path, [&](std::ostream& s) { write_layout_json(s, layout, bound); });
  out << "net " << o.out << "\n";
  out << "layout " << layout_path << "\n";
  out << "shape " << shape_line(*net) << "\n";
  out << "error_bound " << detail::format_double(bound) << "\n";
  return kSuccess;
}

// --- eval ---------------------------------------------------------------------

int cmd_eval(const std::string& net_path, const std::string& points_path, const std::string& out_path,
             std::ostream& out) {
  const DenseNet net = load_net(net_path);
  const auto rows = read_rows(points_path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(net.input_dim())) {
      throw InvalidArgument(points_path + ": point " + std::to_string(i + 1) + " has dimension " +
                            std::to_string(rows[i].size()) + ", network expects " + std::to_string(net.input_dim()));
    }
  }
  const Eigen::VectorXd y = forward(net, rows_to_matrix(rows, static_cast<std::size_t>(net.input_dim()), points_path));
  auto emit = [&](std::ostream& s) {
    s << "output\n";
    for (Eigen::Index i = 0; i < y.size(); ++i) s << detail::format_double(y[i]) << "\n";
  };
  if (out_path.empty()) {
    emit(out);
  } else {
    write_file(out_path, emit);
  }
  return kSuccess;
}

// --- train --------------------------------------------------------------------

struct TrainOptions {
  std::string net;
  std::string data;
  std::string validation;
  std::string out;
  std::string loss;
  std::string freeze = "none";
  std::string layout;
  long epochs = 1000;
  double lr = 1e-3;
  std::optional<long> batch;
  std::uint64_t seed = 0;
};

Samples load_samples(const std::string& path, int dim) {
  const auto rows = read_rows(path);
  const Eigen::MatrixXd m = rows_to_matrix(rows, static_cast<std::size_t>(dim) + 1, path);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != static_cast<std::size_t>(dim) + 1) {
      throw InvalidArgument(path + ": row " + std::to_string(i + 1) + " must hold " + std::to_string(dim) +
                            " coordinates and a value");
    }
  }
  if (rows.empty()) throw InvalidArgument(path + ": no samples");
  return Samples{m.leftCols(dim), m.col(dim)};
}

BlockLayout read_layout(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  const json j = json::parse(in);
  if (j.value("format", "") != "polyinit-layout") throw InvalidArgument(path + ": not a layout file");
  BlockLayout layout;
  layout.kind = j.at("kind").get<std::string>();
  for (const auto& row : j.at("layers")) {
    std::vector<Block> blocks;
    for (const auto& b : row) {
      blocks.push_back(Block{b.at("label").get<std::string>(), b.at("group").get<int>(), b.at("begin").get<int>(),
                             b.at("end").get<int>()});
    }
    layout.layers.push_back(std::move(blocks));
  }
  return layout;
}

int cmd_train(const TrainOptions& o, std::ostream& out) {
  const DenseNet net = load_net(o.net);
  const Samples samples = load_samples(o.data, net.input_dim());
  std::optional<Samples> validation;
  if (!o.validation.empty()) validation = load_samples(o.validation, net.input_dim());

  TrainConfig config;
  config.learning_rate = o.lr;
  config.epochs = o.epochs;
  config.batch_size = o.batch;
  config.seed = o.seed;
  if (o.freeze == "output-only") {
    config.freeze = FreezeMask::all_but_output(net);
  } else if (o.freeze == "structural") {
    if (o.layout.empty()) throw Usage("--freeze structural needs --layout");
    const BlockLayout layout = read_layout(o.layout);
    if (static_cast<int>(layout.layers.size()) != net.depth()) throw InvalidArgument("layout does not match network");
    config.freeze = layout.freeze_structural_zeros(net);
  } else if (o.freeze != "none") {
    throw Usage("--freeze must be none, output-only or structural");
  }

  const TrainResult result = train(net, samples, validation ? &*validation : nullptr, config);
  save_net(o.out, result.net);
  if (!o.loss.empty()) {
    write_file(o.loss, [&](std::ostream& s) {
      const bool with_val = !result.trace.validation.empty();
      s << (with_val ? "epoch,train_loss,val_loss\n" : "epoch,train_loss\n");
      for (std::size_t e = 0; e < result.trace.train.size(); ++e) {
        s << e << "," << detail::format_double(result.trace.train[e]);
        if (with_val) s << "," << detail::format_double(result.trace.validation[e]);
        s << "\n";
      }
    });
  }
  out << "initial_loss " << detail::format_double(result.trace.train.front()) << "\n";
  out << "final_loss " << detail::format_double(result.trace.train.back()) << "\n";
  return kSuccess;
}

// --- experiment -----------------------------------------------------------------

struct ExperimentOptions {
  std::string name;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> epochs;
  std::optional<double> lr;
  std::optional<int> dim;
  std::string out;
  bool timing = false;
  bool force = false;
};

// {"format": "polyinit-config", "version": 1, "experiment": name, "config": {...}}
json read_config_file(const std::string& path, const std::string& experiment) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
  if (!j.is_object() || j.value("format", "") != "polyinit-config") {
    throw InvalidArgument(path + ": missing header \"format\": \"polyinit-config\"");
  }
  if (j.value("version", 0) != 1) throw InvalidArgument(path + ": unsupported config version");
  if (j.contains("experiment") && j["experiment"] != experiment) {
    throw InvalidArgument(path + ": config is for experiment " + j["experiment"].dump());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() != "format" && it.key() != "version" && it.key() != "experiment" && it.key() != "config") {
      throw InvalidArgument(path + ": unknown key '" + it.key() + "'");
    }
  }
  return j.value("config", json::object());
}

void apply_optimizer_flags(OptimizerSettings& s, const ExperimentOptions& o) {
  if (o.epochs) s.epochs = *o.epochs;
  if (o.lr) s.learning_rate = *o.lr;
}

ExperimentResult run_named(const ExperimentOptions& o) {
  const json file = o.config.empty() ? json::object() : read_config_file(o.config, o.name);
  if (o.dim && o.name != "genz") throw Usage("--dim only applies to the genz experiment");
  if (o.name == "runge") {
    RungeConfig c = runge_config_from_json(file);
    if (o.seed) c.seed = *o.seed;
    apply_optimizer_flags(c.optimizer, o);
    return run_runge(c);
  }
  if (o.name == "two-phase") {
    TwoPhaseConfig c = two_phase_config_from_json(file);
    if (o.seed) c.seed = *o.seed;
    apply_optimizer_flags(c.phase2, o);
    return run_two_phase(c);
  }
  if (o.name == "cos4pi") {
    Cos4piConfig c = cos4pi_config_from_json(file);
    if (o.seed) c.seed = *o.seed;
    apply_optimizer_flags(c.optimizer, o);
    return run_cos4pi_comparison(c);
  }
  if (o.name == "genz") {
    GenzConfig base = (o.dim && *o.dim == 20) ? genz_d20_config() : GenzConfig{};
    GenzConfig c = genz_config_from_json(file, base);
    if (o.dim) {
      c.dim = *o.dim;
      c.width = 0;
    }
    if (o.seed) c.seed = *o.seed;
    apply_optimizer_flags(c.optimizer, o);
    return run_genz(c);
  }
  throw Usage("unknown experiment '" + o.name + "'");
}

int cmd_experiment(const ExperimentOptions& o, std::ostream& out) {
  if (!o.out.empty() && fs::exists(o.out) && !o.force) {
    throw InvalidArgument(o.out + " exists (use --force to replace it)");
  }
  const ExperimentResult result = run_named(o);
  const fs::path target = o.out.empty() ? fs::path(o.name + "-seed" + std::to_string(result.seed)) : fs::path(o.out);
  if (fs::exists(target) && !o.force) {
    throw InvalidArgument(target.string() + " exists (use --force to replace it)");
  }
  // Write next to the target and rename, so the directory appears complete
  // or not at all.
  const fs::path parent = target.has_parent_path() ? target.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const fs::path staging = parent / ("." + target.filename().string() + ".tmp" + std::to_string(::getpid()));
  fs::remove_all(staging);
  try {
    write_result(result, staging, o.timing);
    if (fs::exists(target)) fs::remove_all(target);
    fs::rename(staging, target);
  } catch (...) {
    std::error_code ignored;
    fs::remove_all(staging, ignored);
    throw;
  }
  out << "experiment " << result.name << " seed " << result.seed << "\n";
  for (const auto& [key, value] : result.metrics) out << key << " " << detail::format_double(value) << "\n";
  out << "output " << target.string() << "\n";
  return kSuccess;
}

// --- verify -------------------------------------------------------------------

struct Check {
  std::string name;
  double measured;
  double limit;
};

double grid_sup(const DenseNet& net, const Interval& interval, int n, const std::function<double(double)>& exact) {
  double sup = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = interval.lo + interval.width() * k / (n - 1);
    sup = std::max(sup, std::abs(forward(net, std::span<const double>(&x, 1)) - exact(x)));
  }
  return sup;
}

std::vector<Check> construction_checks() {
  std::vector<Check> checks;
  const auto square = [](double x) { return x * x; };
  for (Interval interval : {Interval{-1.0, 1.0}, Interval{0.0, 3.0}}) {
    for (int m = 1; m <= 8; ++m) {
      const SquaringNet s = build_squaring_net(interval, m);
      double at_breakpoints = 0.0;
      for (double xi : s.plan.breakpoints) {
        at_breakpoints = std::max(at_breakpoints, std::abs(forward(s.net, std::span<const double>(&xi, 1)) - xi * xi));
      }
      const std::string tag = "[" + detail::format_double(interval.lo) + "," + detail::format_double(interval.hi) +
                              "] m=" + std::to_string(m);
      checks.push_back({"squaring breakpoints " + tag, at_breakpoints, 1e-12});
      checks.push_back({"squaring sup " + tag, grid_sup(s.net, interval, 10000, square),
                        squaring_error_bound(interval, m) * (1 + 1e-12)});
    }
  }

  const Interval unit{-1.0, 1.0};
  const ConstructedNet product = build_product_net(unit, 6);
  double product_err = 0.0;
  for (int i = 0; i < 200; ++i) {
    for (int j = 0; j < 200; ++j) {
      const double p[2] = {-1.0 + 2.0 * i / 199, -1.0 + 2.0 * j / 199};
      product_err = std::max(product_err, std::abs(forward(product.net, p) - p[0] * p[1]));
    }
  }
  checks.push_back({"product m=6", product_err, product.error_bound});

  for (int d : {1, 4, 20}) {
    const ConstructedNet stilde = build_stilde_net(d, {0.0, 1.0}, 8);
    const std::vector<double> u(static_cast<std::size_t>(d), 0.5);
    const double expected = 0.25 * d + 0.25 * (d - 1);
    checks.push_back({"stilde d=" + std::to_string(d) + " at u", std::abs(forward(stilde.net, u) - expected), 1e-12});
  }

  const Box square_box = Box::cube(2, unit);
  for (const auto& entries : std::vector<std::vector<int>>{{1, 0}, {2, 1}, {3, 3}, {0, 5}}) {
    const MultiIndex index(entries);
    const ConstructedNet mono = build_monomial_net(index, legendre_factors(index, square_box), square_box, 8);
    double err = 0.0;
    for (int i = 0; i <= 40; ++i) {
      for (int j = 0; j <= 40; ++j) {
        const double p[2] = {-1.0 + i / 20.0, -1.0 + j / 20.0};
        err = std::max(err, std::abs(forward(mono.net, p) - eval_basis(index, p, square_box)));
      }
    }
    checks.push_back({"monomial " + index.to_string() + " m=8", err, mono.error_bound + 1e-12});
  }
  return checks;
}

int cmd_verify(std::ostream& out) {
  bool all = true;
  for (const Check& c : construction_checks()) {
    const bool ok = c.measured <= c.limit;
    all = all && ok;
    out << (ok ? "PASS " : "FAIL ") << c.name << ": " << detail::format_double(c.measured)
        << " <= " << detail::format_double(c.limit) << "\n";
  }
  return all ? kSuccess : kNumerical;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polynomial-initialized ReLU networks: construction, training and experiments", "polyinit-cli"};
  app.require_subcommand(1);

  BuildOptions build;
  auto* build_cmd = app.add_subcommand("build", "Construct a network and write it with its block layout");
  build_cmd->add_option("kind", build.kind, "squaring | product | monomial | expansion | stilde")
      ->required()
      ->check(CLI::IsMember({"squaring", "product", "monomial", "expansion", "stilde"}));
  build_cmd->add_option("--interval", build.interval, "Interval a b (default -1 1; stilde 0 1)")->expected(2);
  build_cmd->add_option("--depth", build.depth, "Squaring depth m")->capture_default_str();
  build_cmd->add_option("--dim", build.dim, "Input dimension for stilde")->capture_default_str();
  build_cmd->add_option("--index", build.index, "Multi-index for monomial, e.g. 2,1");
  build_cmd->add_option("--expansion", build.expansion, "Expansion file for expansion");
  build_cmd->add_option("--out", build.out, "Network file")->required();
  build_cmd->add_option("--layout", build.layout, "Layout JSON (default <out>.layout.json)");

  std::string eval_net, eval_points, eval_out;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a network at points from a CSV file");
  eval_cmd->add_option("--net", eval_net, "Network file")->required();
  eval_cmd->add_option("--points", eval_points, "CSV, one point per row")->required();
  eval_cmd->add_option("--out", eval_out, "Output CSV (default stdout)");

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network with ADAM on CSV samples (x..., y)");
  train_cmd->add_option("--net", tr.net, "Initial network")->required();
  train_cmd->add_option("--data", tr.data, "Training CSV")->required();
  train_cmd->add_option("--validation", tr.validation, "Validation CSV");
  train_cmd->add_option("--out", tr.out, "Trained network file")->required();
  train_cmd->add_option("--loss", tr.loss, "Loss curve CSV");
  train_cmd->add_option("--epochs", tr.epochs)->capture_default_str();
  train_cmd->add_option("--lr", tr.lr)->capture_default_str();
  train_cmd->add_option("--batch", tr.batch, "Minibatch size (default full batch)");
  train_cmd->add_option("--seed", tr.seed)->capture_default_str();
  train_cmd->add_option("--freeze", tr.freeze, "none | output-only | structural")->capture_default_str();
  train_cmd->add_option("--layout", tr.layout, "Layout JSON for --freeze structural");

  ExperimentOptions ex;
  auto* exp_cmd = app.add_subcommand("experiment", "Run a canned experiment and write its result directory");
  exp_cmd->add_option("name", ex.name, "runge | two-phase | cos4pi | genz")->required();
  exp_cmd->add_option("--config", ex.config, "JSON config with header {\"format\": \"polyinit-config\", \"version\": 1}");
  exp_cmd->add_option("--seed", ex.seed);
  exp_cmd->add_option("--epochs", ex.epochs, "Training epochs (two-phase: phase 2)");
  exp_cmd->add_option("--lr", ex.lr, "Learning rate (two-phase: phase 2)");
  exp_cmd->add_option("--dim", ex.dim, "Genz dimension; 20 selects the published d = 20 setup");
  exp_cmd->add_option("--out", ex.out, "Result directory (default <name>-seed<seed>)");
  exp_cmd->add_flag("--timing", ex.timing, "Record wall-clock durations in the manifest");
  exp_cmd->add_flag("--force", ex.force, "Replace an existing result directory");

  auto* verify_cmd = app.add_subcommand("verify", "Check the constructions against their exactness guarantees");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (*build_cmd) return cmd_build(build, out);
    if (*eval_cmd) return cmd_eval(eval_net, eval_points, eval_out, out);
    if (*train_cmd) return cmd_train(tr, out);
    if (*exp_cmd) return cmd_experiment(ex, out);
    if (*verify_cmd) return cmd_verify(out);
  } catch (const Usage& e) {
    err << "error: " << e.what() << "\n\n";
    err << app.get_subcommands().front()->help();
    return kUsage;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace polyinit::cli
