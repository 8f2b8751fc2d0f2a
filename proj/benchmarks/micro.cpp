// Microbenchmarks for the hot paths: sparse matvec, one additive patch sweep,
// and a full V-cycle on a P1 problem.

#include <benchmark/benchmark.h>

#include <memory>

#include "patchmg/bench.hpp"

namespace {

using namespace patchmg;

struct Fixture {
  std::vector<std::unique_ptr<PlexTopology>> topos;
  std::vector<std::unique_ptr<MeshGeometry>> geoms;
  std::vector<RefinementMap> maps;
  std::vector<std::unique_ptr<FunctionSpace>> spaces;
  FormDescriptor form;
  std::vector<DirichletBC> bcs;
  AssembledSystem fine;
  PatchSmoother smoother;

  static Fixture make(int base, int levels) {
    Fixture f;
    Mesh m = build_structured(base, base, CellShape::triangle);
    f.topos.push_back(std::make_unique<PlexTopology>(std::move(m.topology)));
    f.geoms.push_back(std::make_unique<MeshGeometry>(std::move(m.geometry)));
    for (int l = 0; l < levels; ++l) {
      RefinedMesh rm = uniform_refine(*f.topos.back(), *f.geoms.back());
      f.topos.push_back(std::make_unique<PlexTopology>(std::move(rm.topology)));
      f.geoms.push_back(std::make_unique<MeshGeometry>(std::move(rm.geometry)));
      f.maps.push_back(std::move(rm.map));
    }
    for (size_t l = 0; l < f.topos.size(); ++l)
      f.spaces.push_back(std::make_unique<FunctionSpace>(
          build_space(*f.topos[l], *f.geoms[l], lagrange(CellShape::triangle, 1))));
    f.form.kind = FormKind::stiffness;
    f.form.rhs = [](double, double, double* out) { out[0] = 1.0; };
    f.bcs.push_back({0, BoundarySelector::all(), nullptr});
    f.fine = assemble_global(f.form, f.spaces.back().get(), f.bcs);
    SmootherConfig cfg;
    cfg.weighting = WeightingKind::constant;
    cfg.constant_scale = 2.0 / 3.0;
    f.smoother = PatchSmoother::build(f.spaces.back().get(), f.fine.constraints, cfg);
    f.smoother.assemble(f.form);
    return f;
  }
};

void BM_Spmv(benchmark::State& state) {
  Fixture f = Fixture::make(8, 3);
  Vector x(f.fine.matrix.cols(), 1.0), y(f.fine.matrix.rows());
  for (auto _ : state) {
    f.fine.matrix.apply(x, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_Spmv);

void BM_AdditivePatchSweep(benchmark::State& state) {
  Fixture f = Fixture::make(8, 3);
  Vector r(f.fine.matrix.rows(), 1.0);
  for (auto _ : state) {
    Vector d = f.smoother.apply_additive(r);
    benchmark::DoNotOptimize(d.data());
  }
}
BENCHMARK(BM_AdditivePatchSweep);

void BM_VCycle(benchmark::State& state) {
  Fixture f = Fixture::make(8, 3);
  std::vector<SpaceRef> spaces;
  std::vector<const RefinementMap*> maps;
  for (const auto& s : f.spaces) spaces.emplace_back(s.get());
  for (const auto& m : f.maps) maps.push_back(&m);
  SmootherConfig cfg;
  cfg.weighting = WeightingKind::constant;
  cfg.constant_scale = 2.0 / 3.0;
  MgHierarchy h = MgHierarchy::build(f.form, spaces, maps, f.bcs, cfg, {});
  Vector b = h.fine_system().rhs;
  for (auto _ : state) {
    Vector x = h.apply(b);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_VCycle);

}  // namespace

BENCHMARK_MAIN();
