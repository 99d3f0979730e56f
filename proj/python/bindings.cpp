#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "probfem/bfem.hpp"
#include "probfem/errors.hpp"
#include "probfem/experiments.hpp"
#include "probfem/geometry.hpp"
#include "probfem/problems.hpp"

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

py::dict chain_dict(const probfem::Chain& chain) {
  return py::dict("names"_a = chain.names, "samples"_a = chain.samples, "log_prior"_a = chain.log_prior,
                  "log_likelihood"_a = chain.log_likelihood, "acceptance_rate"_a = chain.acceptance_rate,
                  "failed_evaluations"_a = chain.failed_evaluations,
                  "proposal_covariance"_a = chain.proposal_covariance, "seed"_a = chain.seed);
}

py::dict run_experiment(const std::string& config_json, bool paper_scale) {
  const auto config = probfem::parse_config(config_json, paper_scale);
  probfem::ExperimentResult result;
  {
    py::gil_scoped_release release;
    result = probfem::run_experiment(config);
  }
  py::dict out = chain_dict(result.chain);
  out["observations"] = result.observations;
  out["data_hash"] = result.data_hash;
  out["config_hash"] = result.config_hash;
  out["config"] = probfem::config_to_json(result.config);
  out["seconds"] = result.seconds;
  return out;
}

py::dict fem_pullout(double EA, double k, double F, int n_elements) {
  const probfem::Mesh mesh = probfem::generate_interval_mesh(1.0, n_elements);
  const auto system = probfem::assemble_bar(mesh, {EA, k, F});
  Eigen::VectorXd x(mesh.num_nodes());
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) x[static_cast<Eigen::Index>(i)] = mesh.node(i).x;
  return py::dict("x"_a = x, "u"_a = probfem::solve(system));
}

py::dict bfem_pullout(double EA, double k, double F, int n_elements, double sigma_e) {
  const probfem::PulloutProblem problem(n_elements, F);
  const auto like = probfem::bfem_likelihood(problem, Eigen::Vector2d(EA, k), sigma_e);
  return py::dict("mean"_a = like.mean, "cov"_a = like.cov, "sigma_u"_a = like.sigma_u,
                  "min_eigenvalue"_a = like.min_eigenvalue, "trace"_a = like.trace);
}

py::dict triangulate_beam(const std::vector<double>& hole, double h) {
  if (hole.size() != 5) throw probfem::InvalidArgument("hole takes (x, y, d, alpha, r)");
  const probfem::Mesh mesh =
      probfem::triangulate_beam(probfem::BeamGeometry{}, {hole[0], hole[1], hole[2], hole[3], hole[4]}, h);
  Eigen::MatrixXd nodes(mesh.num_nodes(), 2);
  for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
    nodes(static_cast<Eigen::Index>(i), 0) = mesh.node(i).x;
    nodes(static_cast<Eigen::Index>(i), 1) = mesh.node(i).y;
  }
  Eigen::MatrixXi elements(mesh.num_elements(), 3);
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    for (int j = 0; j < 3; ++j) elements(static_cast<Eigen::Index>(e), j) = mesh.element(e)[j];
  }
  return py::dict("nodes"_a = nodes, "elements"_a = elements, "tags"_a = mesh.element_tags());
}

std::string compare(const std::vector<std::string>& dirs) {
  std::vector<probfem::Bundle> bundles;
  for (const auto& d : dirs) bundles.push_back(probfem::read_bundle(d));
  return probfem::comparison_to_json(probfem::compare_posteriors(bundles));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "probfem C++ core";

  auto error = py::register_exception<probfem::Error>(m, "Error");
  py::register_exception<probfem::ConfigError>(m, "ConfigError", error.ptr());

  m.def("pullout_exact_solution", &probfem::pullout_exact_solution, "EA"_a, "k"_a, "F"_a, "x"_a);
  m.def("fem_pullout", &fem_pullout, "EA"_a, "k"_a, "F"_a = 10.0, "n_elements"_a = 1,
        "Nodal FEM solution of the bar on an elastic foundation.");
  m.def("bfem_pullout", &bfem_pullout, "EA"_a, "k"_a, "F"_a = 10.0, "n_elements"_a = 1, "sigma_e"_a = 1e-3,
        "BFEM likelihood mean and covariance of the end displacement.");
  m.def("triangulate_beam", &triangulate_beam, "hole"_a, "h"_a = 0.2);
  m.def("parse_config", [](const std::string& text, bool paper_scale) {
    return probfem::config_to_json(probfem::parse_config(text, paper_scale));
  }, "config_json"_a, "paper_scale"_a = false, "Validated configuration with defaults filled in, as JSON.");
  m.def("run_experiment", &run_experiment, "config_json"_a, "paper_scale"_a = false);
  m.def("compare", &compare, "bundles"_a, "Comparison metrics of result bundles, as JSON.");
}
