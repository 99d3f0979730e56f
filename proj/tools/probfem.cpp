#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "probfem/errors.hpp"
#include "probfem/experiments.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw probfem::ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run(const std::string& config_path, bool paper_scale, const std::optional<std::uint64_t>& seed,
        const std::string& out) {
  auto config = probfem::parse_config(read_file(config_path), paper_scale);
  if (seed) config.chain.seed = *seed;
  if (!out.empty()) config.output_dir = out;
  const auto result = probfem::run_experiment(config);
  std::cout << probfem::to_string(config.problem) << " / " << probfem::to_string(config.method) << ", h = " << config.h
            << ", seed " << config.chain.seed << ", " << result.seconds << " s\n";
  std::cout << "acceptance " << result.chain.acceptance_rate << ", failed evaluations "
            << result.chain.failed_evaluations << "\n";
  for (const auto& s : probfem::summarize(result.chain)) {
    std::cout << "  " << s.name << ": mean " << s.mean << ", std " << s.std << ", 95% [" << s.q025 << ", " << s.q975
              << "]\n";
  }
  if (!config.output_dir.empty()) std::cout << "bundle written to " << config.output_dir << "\n";
  return 0;
}

int compare(const std::vector<std::string>& dirs, const std::string& json_out) {
  std::vector<probfem::Bundle> bundles;
  for (const auto& d : dirs) bundles.push_back(probfem::read_bundle(d));
  const auto cmp = probfem::compare_posteriors(bundles);
  std::cout << probfem::format_comparison(cmp);
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    out << probfem::comparison_to_json(cmp) << "\n";
  }
  return 0;
}

int mesh(const std::string& problem, double h, const std::vector<double>& hole, const std::string& out_path) {
  probfem::ExperimentConfig config = probfem::default_config(probfem::parse_problem(problem));
  config.h = h;
  if (!hole.empty()) config.ground_truth = hole;
  probfem::validate_config(config);
  const auto fp = probfem::make_problem(config);
  const Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(config.ground_truth.data(), static_cast<Eigen::Index>(config.ground_truth.size()));
  const probfem::Mesh m = fp->mesh(theta);
  std::ofstream out(out_path);
  if (!out) throw probfem::ConfigError("cannot write " + out_path);
  probfem::write_mesh_text(m, out);
  std::cout << m.num_nodes() << " nodes, " << m.num_elements() << " elements written to " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inverse problems with probabilistic finite element likelihoods"};
  app.require_subcommand(1);

  auto* run_cmd = app.add_subcommand("run", "Sample a posterior and write a result bundle");
  std::string config_path, out_dir;
  bool paper_scale = false;
  std::optional<std::uint64_t> seed;
  run_cmd->add_option("--config", config_path, "JSON experiment configuration")->required()->check(CLI::ExistingFile);
  run_cmd->add_flag("--paper-scale", paper_scale, "Full-size chains, meshes and data resolution");
  run_cmd->add_option("--seed", seed, "Chain seed");
  run_cmd->add_option("--out", out_dir, "Output directory");

  auto* cmp_cmd = app.add_subcommand("compare", "Compare result bundles computed on the same data");
  std::vector<std::string> bundles;
  std::string json_out;
  cmp_cmd->add_option("bundles", bundles, "Bundle directories")->required()->expected(2, -1);
  cmp_cmd->add_option("--json", json_out, "Also write the metrics as JSON");

  auto* mesh_cmd = app.add_subcommand("mesh", "Write the model mesh of a problem");
  mesh_cmd->set_help_flag("--help", "Print this help message and exit");
  std::string problem = "three_point", mesh_out;
  double h = 0.2;
  std::vector<double> hole;
  mesh_cmd->add_option("--problem", problem, "pullout or three_point")->check(CLI::IsMember({"pullout", "three_point"}));
  mesh_cmd->add_option("--h", h, "Mesh size")->check(CLI::PositiveNumber);
  mesh_cmd->add_option("--hole", hole, "Hole parameters x y d alpha r")->expected(5);
  mesh_cmd->add_option("--out", mesh_out, "Output file")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config_path, paper_scale, seed, out_dir);
    if (*cmp_cmd) return compare(bundles, json_out);
    if (*mesh_cmd) return mesh(problem, h, hole, mesh_out);
  } catch (const probfem::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
