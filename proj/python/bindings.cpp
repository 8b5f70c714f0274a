#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "polyinit/construct.hpp"
#include "polyinit/error.hpp"
#include "polyinit/experiments.hpp"
#include "polyinit/net.hpp"
#include "polyinit/poly.hpp"
#include "polyinit/tensor_basis.hpp"

namespace py = pybind11;
using namespace polyinit;

namespace {

Samples make_samples(const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
  if (points.rows() != values.size()) throw InvalidArgument("points and values have different lengths");
  return {points, values};
}

Box to_box(const std::vector<std::pair<double, double>>& sides) {
  Box box;
  for (const auto& [lo, hi] : sides) box.sides.push_back({lo, hi});
  return box;
}

py::dict result_dict(const ExperimentResult& r) {
  py::dict d;
  d["name"] = r.name;
  d["seed"] = r.seed;
  d["metrics"] = r.metrics;
  py::dict arms;
  for (const ArmResult& a : r.arms) {
    py::dict arm;
    arm["train_loss"] = a.trace.train;
    arm["validation_loss"] = a.trace.validation;
    arm["grid_values"] = a.grid_values;
    if (a.trained) arm["net"] = *a.trained;
    arms[py::str(a.name)] = arm;
  }
  d["arms"] = arms;
  d["grid"] = r.grid;
  d["grid_target"] = r.grid_target;
  return d;
}

nlohmann::json parse_config(const py::dict& cfg) {
  const std::string text = py::module_::import("json").attr("dumps")(cfg).cast<std::string>();
  return nlohmann::json::parse(text);
}

template <typename Config>
py::dict run_with(ExperimentResult (*run)(const Config&), const Config& config) {
  std::optional<ExperimentResult> r;
  {
    py::gil_scoped_release release;
    r = run(config);
  }
  return result_dict(*r);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ReLU networks initialized from Legendre polynomial expansions";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  // polynomials
  m.def("legendre", &legendre_eval, py::arg("n"), py::arg("x"));
  m.def("legendre_roots", &legendre_roots, py::arg("n"));
  m.def("legendre_leading_coefficient", &legendre_leading_coefficient, py::arg("n"));

  // expansions
  py::class_<Expansion>(m, "Expansion")
      .def_property_readonly("dim", &Expansion::dim)
      .def_property_readonly("indices",
                             [](const Expansion& e) {
                               std::vector<std::vector<int>> out;
                               for (const MultiIndex& i : e.index_set) out.push_back(i.entries());
                               return out;
                             })
      .def_readonly("coefficients", &Expansion::coefficients)
      .def("__call__", [](const Expansion& e, const Eigen::MatrixXd& points) { return eval_expansion(e, points); })
      .def("save", [](const Expansion& e, const std::string& path) { save_expansion(path, e); });
  m.def(
      "total_degree_indices",
      [](int dim, int degree) {
        std::vector<std::vector<int>> out;
        for (const MultiIndex& i : total_degree_set(dim, degree)) out.push_back(i.entries());
        return out;
      },
      py::arg("dim"), py::arg("degree"));
  m.def(
      "fit_least_squares",
      [](const Eigen::MatrixXd& points, const Eigen::VectorXd& values, int degree,
         const std::vector<std::pair<double, double>>& domain) {
        const FitResult fit = fit_least_squares(points, values, total_degree_set(static_cast<int>(points.cols()), degree),
                                                to_box(domain));
        return py::make_tuple(fit.expansion, fit.residual_norm);
      },
      py::arg("points"), py::arg("values"), py::arg("degree"), py::arg("domain"),
      "Total-degree Legendre fit. Returns (expansion, residual norm).");
  m.def("load_expansion", &load_expansion, py::arg("path"));

  // networks
  py::class_<DenseNet>(m, "Net")
      .def_property_readonly("input_dim", &DenseNet::input_dim)
      .def_property_readonly("depth", &DenseNet::depth)
      .def_property_readonly("hidden_widths", &DenseNet::hidden_widths)
      .def_property_readonly("parameter_count", &DenseNet::parameter_count)
      .def("weights", [](const DenseNet& n, int l) -> Eigen::MatrixXd { return n.layer(l).weights; }, py::arg("layer"))
      .def("bias", [](const DenseNet& n, int l) -> Eigen::VectorXd { return n.layer(l).bias; }, py::arg("layer"))
      .def("__call__", [](const DenseNet& n, const Eigen::MatrixXd& points) { return forward(n, points); })
      .def("hidden_features", [](const DenseNet& n, const Eigen::MatrixXd& points) { return hidden_features(n, points); })
      .def("save", [](const DenseNet& n, const std::string& path) { save_net(path, n); });
  m.def("load_net", &load_net, py::arg("path"));
  m.def(
      "xavier_net",
      [](int input_dim, const std::vector<int>& hidden, std::uint64_t seed) {
        return xavier_init(NetShape{input_dim, hidden, 1}, seed);
      },
      py::arg("input_dim"), py::arg("hidden"), py::arg("seed") = 0);
  m.def(
      "mse",
      [](const DenseNet& n, const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
        return mse_loss(n, make_samples(points, values));
      },
      py::arg("net"), py::arg("points"), py::arg("values"));
  m.def(
      "gradient",
      [](const DenseNet& n, const Eigen::MatrixXd& points, const Eigen::VectorXd& values) {
        py::list out;
        for (const auto& g : backward(n, make_samples(points, values))) out.append(py::make_tuple(g.weights, g.bias));
        return out;
      },
      py::arg("net"), py::arg("points"), py::arg("values"), "List of (weight gradient, bias gradient) per layer.");
  m.def(
      "train",
      [](const DenseNet& n, const Eigen::MatrixXd& points, const Eigen::VectorXd& values, long epochs,
         double learning_rate, std::optional<long> batch_size, std::uint64_t seed, bool output_only) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.batch_size = batch_size;
        cfg.seed = seed;
        if (output_only) cfg.freeze = FreezeMask::all_but_output(n);
        std::optional<TrainResult> r;
        {
          py::gil_scoped_release release;
          r = train(n, make_samples(points, values), nullptr, cfg);
        }
        return py::make_tuple(r->net, r->trace.train);
      },
      py::arg("net"), py::arg("points"), py::arg("values"), py::arg("epochs"), py::arg("learning_rate") = 1e-3,
      py::arg("batch_size") = std::nullopt, py::arg("seed") = 0, py::arg("output_only") = false,
      "ADAM on the mean squared error. Returns (trained net, loss per epoch).");

  // constructions: each returns (net, error bound)
  m.def("squaring_net", [](double lo, double hi, int depth) {
        const SquaringNet s = build_squaring_net({lo, hi}, depth);
        return py::make_tuple(s.net, squaring_error_bound({lo, hi}, depth));
      }, py::arg("lo"), py::arg("hi"), py::arg("depth"));
  m.def("product_net", [](double lo, double hi, int depth) {
        const ConstructedNet c = build_product_net({lo, hi}, depth);
        return py::make_tuple(c.net, c.error_bound);
      }, py::arg("lo"), py::arg("hi"), py::arg("depth"));
  m.def("monomial_net", [](const std::vector<int>& index, const std::vector<std::pair<double, double>>& domain, int depth) {
        const MultiIndex mi(index);
        const Box box = to_box(domain);
        const ConstructedNet c = build_monomial_net(mi, legendre_factors(mi, box), box, depth);
        return py::make_tuple(c.net, c.error_bound);
      }, py::arg("index"), py::arg("domain"), py::arg("depth"));
  m.def("expansion_net", [](const Expansion& e, int depth) {
        const ConstructedNet c = build_expansion_net(e, depth);
        return py::make_tuple(c.net, c.error_bound);
      }, py::arg("expansion"), py::arg("depth"));
  m.def("stilde_net", [](int dim, int depth) {
        const ConstructedNet c = build_stilde_net(dim, {0.0, 1.0}, depth);
        return py::make_tuple(c.net, c.error_bound);
      }, py::arg("dim"), py::arg("depth"));

  // experiments take an optional dict of overrides in the config-file format
  m.def("run_runge", [](const py::dict& cfg) { return run_with(run_runge, runge_config_from_json(parse_config(cfg))); },
        py::arg("config") = py::dict());
  m.def("run_two_phase", [](const py::dict& cfg) {
        return run_with(run_two_phase, two_phase_config_from_json(parse_config(cfg)));
      }, py::arg("config") = py::dict());
  m.def("run_cos4pi", [](const py::dict& cfg) {
        return run_with(run_cos4pi_comparison, cos4pi_config_from_json(parse_config(cfg)));
      }, py::arg("config") = py::dict());
  m.def("run_genz", [](const py::dict& cfg) { return run_with(run_genz, genz_config_from_json(parse_config(cfg))); },
        py::arg("config") = py::dict());
}
