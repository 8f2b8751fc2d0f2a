// Command-line front end: parameter-sweep iteration tables and spectral
// diagnostics for the patch-smoothed multigrid solvers.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "patchmg/bench.hpp"

namespace {

using namespace patchmg;

struct CliOptions {
  std::string problem;
  std::vector<int> base;
  std::string cell;
  std::vector<int> refine;
  std::vector<double> param;
  int degree = 1;
  std::string construct_type;
  int construct_dim = 0;
  std::string local_type;
  double damping = 1.0;
  bool pou = false;
  std::vector<int> exclude;
  std::string ksp;
  double rtol = 0.0;
  int maxit = 0;
  std::string format = "md";
  std::string out;
};

Problem parse_problem(const std::string& s) {
  if (s == "riesz_hdiv") return Problem::riesz_hdiv;
  if (s == "riesz_hcurl") return Problem::riesz_hcurl;
  if (s == "elasticity") return Problem::elasticity;
  if (s == "stokes") return Problem::stokes;
  if (s == "allen_cahn") return Problem::allen_cahn;
  if (s == "poisson") return Problem::poisson;
  throw CLI::ValidationError("unknown problem '" + s + "'");
}

void add_common_flags(CLI::App* cmd, CliOptions& o) {
  cmd->add_option("problem", o.problem,
                  "riesz_hdiv|riesz_hcurl|elasticity|stokes|allen_cahn|poisson")
      ->required();
  cmd->add_option("--base", o.base, "base mesh NX NY")->expected(2);
  cmd->add_option("--cell", o.cell, "tri|quad");
  cmd->add_option("--refine", o.refine, "refinement levels")->delimiter(',');
  cmd->add_option("--param", o.param, "parameter sweep values")->delimiter(',');
  cmd->add_option("--degree", o.degree, "polynomial degree");
  cmd->add_option("--construct-type", o.construct_type, "star|vanka|pardecomp");
  cmd->add_option("--construct-dim", o.construct_dim, "seed entity dimension");
  cmd->add_option("--local-type", o.local_type, "additive|multiplicative");
  cmd->add_option("--damping", o.damping, "constant update weight");
  cmd->add_flag("--pou", o.pou, "partition-of-unity update weighting");
  cmd->add_option("--exclude-subspaces", o.exclude, "subspace indices")->delimiter(',');
  cmd->add_option("--ksp", o.ksp, "cg|gmres|richardson");
  cmd->add_option("--rtol", o.rtol, "relative solver tolerance");
  cmd->add_option("--maxit", o.maxit, "iteration cap");
  cmd->add_option("--format", o.format, "csv|md")->check(CLI::IsMember({"csv", "md"}));
  cmd->add_option("--out", o.out, "write the table to FILE instead of stdout");
}

BenchSpec to_spec(const CLI::App* cmd, const CliOptions& o) {
  BenchSpec spec = BenchSpec::defaults(parse_problem(o.problem));
  auto given = [&](const std::string& name) { return cmd->count(name) > 0; };

  if (given("--base")) {
    spec.base_nx = o.base[0];
    spec.base_ny = o.base[1];
  }
  if (given("--cell")) {
    if (o.cell == "tri")
      spec.cell = CellShape::triangle;
    else if (o.cell == "quad")
      spec.cell = CellShape::quadrilateral;
    else
      throw CLI::ValidationError("unknown cell '" + o.cell + "'");
  }
  if (given("--refine")) spec.refinements = o.refine;
  if (given("--param")) {
    for (double v : o.param)
      if (!(v > 0)) throw CLI::ValidationError("sweep values must be positive");
    spec.params = o.param;
  }
  if (given("--degree")) spec.degree = o.degree;
  if (given("--construct-type")) {
    if (o.construct_type == "star")
      spec.smoother.construct_type = ConstructType::star;
    else if (o.construct_type == "vanka")
      spec.smoother.construct_type = ConstructType::vanka;
    else if (o.construct_type == "pardecomp")
      spec.smoother.construct_type = ConstructType::pardecomp;
    else
      throw CLI::ValidationError("unknown construct type '" + o.construct_type + "'");
  }
  if (given("--construct-dim")) spec.smoother.construct_dim = o.construct_dim;
  if (given("--local-type")) {
    if (o.local_type == "additive")
      spec.smoother.local_type = LocalSolveType::additive;
    else if (o.local_type == "multiplicative")
      spec.smoother.local_type = LocalSolveType::multiplicative;
    else
      throw CLI::ValidationError("unknown local type '" + o.local_type + "'");
  }
  if (given("--damping")) {
    spec.smoother.weighting = WeightingKind::constant;
    spec.smoother.constant_scale = o.damping;
  }
  if (o.pou) spec.smoother.weighting = WeightingKind::partition_of_unity;
  if (given("--exclude-subspaces"))
    spec.smoother.exclude_subspaces = {o.exclude.begin(), o.exclude.end()};
  if (given("--ksp")) {
    if (o.ksp == "cg")
      spec.ksp = KspType::cg;
    else if (o.ksp == "gmres")
      spec.ksp = KspType::gmres;
    else if (o.ksp == "richardson")
      spec.ksp = KspType::richardson;
    else
      throw CLI::ValidationError("unknown ksp '" + o.ksp + "'");
  }
  if (given("--rtol")) spec.rtol = o.rtol;
  if (given("--maxit")) spec.maxit = o.maxit;
  return spec;
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out);
  if (!f) throw std::runtime_error("cannot open output file '" + out + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"patch-smoothed multigrid benchmarks"};
  app.require_subcommand(1);

  CliOptions bench_opts, diag_opts;
  CLI::App* bench_cmd = app.add_subcommand("bench", "run an iteration-count sweep");
  add_common_flags(bench_cmd, bench_opts);
  CLI::App* diag_cmd = app.add_subcommand("diagnose", "spectral smoother diagnostics");
  add_common_flags(diag_cmd, diag_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (bench_cmd->parsed()) {
      BenchSpec spec = to_spec(bench_cmd, bench_opts);
      if (spec.params.empty() || spec.refinements.empty()) {
        emit("", bench_opts.out);
        return 0;
      }
      ResultTable table = run(spec);
      emit(bench_opts.format == "csv" ? table.to_csv() : table.to_markdown(),
           bench_opts.out);
    } else {
      BenchSpec spec = to_spec(diag_cmd, diag_opts);
      DiagnoseReport rep = diagnose(spec);
      emit(rep.to_string(), diag_opts.out);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
