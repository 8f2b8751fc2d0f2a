#include <sstream>

#include "doctest.h"
#include "patchmg/bench.hpp"

using namespace patchmg;

namespace {

BenchSpec small_poisson() {
  BenchSpec spec = BenchSpec::defaults(Problem::poisson);
  spec.base_nx = spec.base_ny = 4;
  spec.refinements = {1, 2};
  spec.params = {1.0};
  return spec;
}

}  // namespace

TEST_CASE("result tables are bit-reproducible") {
  BenchSpec spec = small_poisson();
  ResultTable t1 = run(spec);
  ResultTable t2 = run(spec);
  CHECK(t1.to_csv() == t2.to_csv());
  CHECK(t1.to_markdown() == t2.to_markdown());
}

TEST_CASE("table shape and solve quality") {
  BenchSpec spec = small_poisson();
  ResultTable t = run(spec);
  REQUIRE(t.row_labels.size() == 2);
  REQUIRE(t.col_labels.size() == 1);
  REQUIRE(t.cells.size() == 2);
  REQUIRE(t.dofs.size() == 2);
  CHECK(t.dofs[0] == 9 * 9);    // 4x4 refined once
  CHECK(t.dofs[1] == 17 * 17);  // refined twice
  for (size_t r = 0; r < t.cells.size(); ++r) {
    REQUIRE(t.cells[r].size() == 1);
    CHECK(t.cells[r][0].find('>') == std::string::npos);
    CHECK(t.true_residuals[r][0] <= 1e-8);
  }

  std::string csv = t.to_csv();
  CHECK(csv.find("dofs") != std::string::npos);
  std::string md = t.to_markdown();
  CHECK(md.find('|') != std::string::npos);

  // Every row of the CSV has the same number of fields.
  std::istringstream in(csv);
  std::string line;
  int fields = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int n = 1;
    for (char c : line)
      if (c == ',') ++n;
    if (fields < 0) fields = n;
    CHECK(n == fields);
  }
}

TEST_CASE("spectral diagnostics respect the overlap bound") {
  BenchSpec spec = BenchSpec::defaults(Problem::poisson);
  spec.base_nx = spec.base_ny = 8;
  spec.refinements = {0};
  spec.smoother.weighting = WeightingKind::none;
  DiagnoseReport rep = diagnose(spec);
  CHECK(rep.overlap == 7);
  CHECK(rep.lambda_min > 0.0);
  CHECK(rep.lambda_max <= rep.overlap + 0.05);
  CHECK(rep.bound_satisfied);
  CHECK(rep.to_string().find("overlap") != std::string::npos);
}

TEST_CASE("a direct whole-domain patch makes the preconditioned operator the identity") {
  BenchSpec spec = BenchSpec::defaults(Problem::poisson);
  spec.base_nx = spec.base_ny = 4;
  spec.refinements = {0};
  spec.smoother.construct_type = ConstructType::pardecomp;
  spec.smoother.weighting = WeightingKind::none;
  DiagnoseReport rep = diagnose(spec);
  CHECK(rep.overlap == 1);
  CHECK(rep.lambda_min == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.lambda_max == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("non-convergent cells are reported, not hidden") {
  // Single-edge patches cannot capture the gradient kernel of the stiff
  // curl-curl operator; the bench must record the failure and still return.
  BenchSpec spec = BenchSpec::defaults(Problem::riesz_hcurl);
  spec.base_nx = spec.base_ny = 8;
  spec.refinements = {2};
  spec.params = {1e4};
  spec.smoother.construct_dim = 1;
  ResultTable t = run(spec);
  REQUIRE(t.cells.size() == 1);
  REQUIRE(t.cells[0].size() == 1);
  CHECK(t.cells[0][0].find('>') != std::string::npos);
}
