// End-to-end acceptance gate: one pass/fail line per criterion, exit code is
// the number of failures. Each criterion pins the tolerances it asserts.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "patchmg/bench.hpp"

using namespace patchmg;

namespace {

int g_failures = 0;

void run_criterion(int number, const std::string& name,
                   const std::function<bool(std::string&)>& body) {
  std::string detail;
  auto t0 = std::chrono::steady_clock::now();
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("[%s] %2d. %s%s%s [%.1f s]\n", ok ? "PASS" : "FAIL", number, name.c_str(),
              detail.empty() ? "" : " — ", detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

// ---------------------------------------------------------------- utilities

std::vector<PointId> oracle_closure(const PlexTopology& t, std::vector<PointId> pts) {
  std::set<PointId> out(pts.begin(), pts.end());
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<PointId> cur(out.begin(), out.end());
    for (PointId p : cur)
      for (PointId q : t.cone(p))
        if (out.insert(q).second) grew = true;
  }
  return {out.begin(), out.end()};
}

std::vector<PointId> oracle_star(const PlexTopology& t, std::vector<PointId> pts) {
  std::set<PointId> out(pts.begin(), pts.end());
  bool grew = true;
  while (grew) {
    grew = false;
    std::vector<PointId> cur(out.begin(), out.end());
    for (PointId p : cur)
      for (PointId q : t.support(p))
        if (out.insert(q).second) grew = true;
  }
  return {out.begin(), out.end()};
}

int parse_iters(const std::string& cell) {
  if (!cell.empty() && cell[0] == '>') return -1;  // recorded non-convergence
  return std::stoi(cell);
}

struct Spread {
  int max_cell = 0;
  int row_spread = 0;  // max over rows of (max - min) across columns
  int col_spread = 0;  // max over columns of (max - min) across rows
  bool all_converged = true;
};

Spread spreads(const ResultTable& t) {
  Spread s;
  size_t rows = t.cells.size(), cols = t.cells[0].size();
  for (size_t r = 0; r < rows; ++r) {
    int lo = 1 << 30, hi = 0;
    for (size_t c = 0; c < cols; ++c) {
      int it = parse_iters(t.cells[r][c]);
      if (it < 0) {
        s.all_converged = false;
        continue;
      }
      lo = std::min(lo, it);
      hi = std::max(hi, it);
      s.max_cell = std::max(s.max_cell, it);
    }
    s.row_spread = std::max(s.row_spread, hi - lo);
  }
  for (size_t c = 0; c < cols; ++c) {
    int lo = 1 << 30, hi = 0;
    for (size_t r = 0; r < rows; ++r) {
      int it = parse_iters(t.cells[r][c]);
      if (it < 0) continue;
      lo = std::min(lo, it);
      hi = std::max(hi, it);
    }
    s.col_spread = std::max(s.col_spread, hi - lo);
  }
  return s;
}

// Manufactured semilinear problem: -lap(u) + u^3 - u = f with exact solution
// u = sin(pi x) sin(pi y).
FormDescriptor semilinear_form() {
  FormDescriptor f;
  f.kind = FormKind::allen_cahn;
  f.rhs = [](double x, double y, double* out) {
    double u = std::sin(M_PI * x) * std::sin(M_PI * y);
    out[0] = 2.0 * M_PI * M_PI * u + u * u * u - u;
  };
  return f;
}

std::vector<ResultTable> g_audit_tables;
std::vector<std::string> g_audit_names;

void record_for_audit(std::string name, const ResultTable& t) {
  g_audit_tables.push_back(t);
  g_audit_names.push_back(std::move(name));
}

// ---------------------------------------------------------------- criteria

bool c1_topology_oracle(std::string& detail) {
  std::mt19937 rng(2024);
  for (int n : {2, 4}) {
    Mesh m = build_structured(n, n, CellShape::triangle);
    const PlexTopology& t = m.topology;
    // Every single point.
    for (PointId p = 0; p < t.num_points(); ++p) {
      if (t.closure({p}) != oracle_closure(t, {p})) {
        detail = "closure mismatch at point " + std::to_string(p);
        return false;
      }
      if (t.star({p}) != oracle_star(t, {p})) {
        detail = "star mismatch at point " + std::to_string(p);
        return false;
      }
    }
    // Random multi-point sets.
    std::uniform_int_distribution<int> pick(0, t.num_points() - 1);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<PointId> pts = {pick(rng), pick(rng)};
      if (t.closure(pts) != oracle_closure(t, pts) || t.star(pts) != oracle_star(t, pts)) {
        detail = "set query mismatch";
        return false;
      }
    }
  }
  return true;
}

bool c2_pointwise_coincidence(std::string& detail) {
  Mesh m = build_structured(8, 8, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  std::vector<DirichletBC> bcs = {{0, BoundarySelector::all(), nullptr}};
  FormDescriptor stiff;
  stiff.kind = FormKind::stiffness;
  stiff.rhs = [](double, double, double* out) { out[0] = 1.0; };
  AssembledSystem sys = assemble_global(stiff, &p1, bcs);
  const SparseMatrix& a = sys.matrix;
  const Vector& b = sys.rhs;
  const int n = a.rows();
  auto constrained = [&](int i) { return sys.constraints.constrained(i); };

  PatchSmoother add = PatchSmoother::build(&p1, sys.constraints, {});
  add.assemble(stiff);
  SmootherConfig mcfg;
  mcfg.local_type = LocalSolveType::multiplicative;
  PatchSmoother mul = PatchSmoother::build(&p1, sys.constraints, mcfg);
  mul.assemble(stiff);

  Vector xa(n, 0.0), xj(n, 0.0), xm(n, 0.0), xg(n, 0.0);
  double dev = 0.0;
  for (int sweep = 0; sweep < 10; ++sweep) {
    // Additive vertex-star sweep vs hand-coded Jacobi.
    Vector r = b;
    Vector ax = a.apply(xa);
    for (int i = 0; i < n; ++i) r[i] -= ax[i];
    for (int i = 0; i < n; ++i)
      if (constrained(i)) r[i] = 0.0;
    Vector delta = add.apply_additive(r);
    for (int i = 0; i < n; ++i) xa[i] += delta[i];
    for (int i = 0; i < n; ++i) {
      if (constrained(i)) continue;
      double acc = b[i];
      auto offs = a.row_offsets();
      auto cols = a.col_indices();
      auto vals = a.values();
      for (int k = offs[i]; k < offs[i + 1]; ++k) acc -= vals[k] * xj[cols[k]];
      // xj update deferred: classical Jacobi uses the previous iterate.
      delta[i] = acc / a.entry(i, i);
    }
    for (int i = 0; i < n; ++i)
      if (!constrained(i)) xj[i] += delta[i];
    for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(xa[i] - xj[i]));

    // Multiplicative sweep vs hand-coded lexicographic Gauss-Seidel.
    Vector rm = b;
    Vector axm = a.apply(xm);
    for (int i = 0; i < n; ++i) rm[i] -= axm[i];
    for (int i = 0; i < n; ++i)
      if (constrained(i)) rm[i] = 0.0;
    mul.apply_multiplicative(rm, xm);
    for (int i = 0; i < n; ++i) {
      if (constrained(i)) continue;
      double acc = b[i];
      auto offs = a.row_offsets();
      auto cols = a.col_indices();
      auto vals = a.values();
      for (int k = offs[i]; k < offs[i + 1]; ++k) acc -= vals[k] * xg[cols[k]];
      xg[i] += acc / a.entry(i, i);
    }
    for (int i = 0; i < n; ++i) dev = std::max(dev, std::abs(xm[i] - xg[i]));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "max deviation %.2e", dev);
  detail = buf;
  return dev <= 1e-14;
}

bool c3_local_matrix_exactness(std::string& detail) {
  Mesh m = build_structured(6, 6, CellShape::triangle);
  struct Case {
    const char* name;
    ReferenceElement elem;
    FormKind kind;
  };
  std::vector<Case> cases;
  cases.push_back({"nodal/stiffness", lagrange(CellShape::triangle, 1), FormKind::stiffness});
  cases.push_back({"edge-flux", raviart_thomas_0(CellShape::triangle), FormKind::hdiv_riesz});
  cases.push_back({"edge-circulation", nedelec_0(CellShape::triangle), FormKind::hcurl_riesz});
  for (auto& c : cases) {
    FunctionSpace space = build_space(m.topology, m.geometry, c.elem);
    FormDescriptor form;
    form.kind = c.kind;
    form.alpha = 10.0;
    SparseMatrix global = assemble_global(form, &space, {}).matrix;
    double scale = 0.0;
    for (double v : global.values()) scale = std::max(scale, std::abs(v));
    PatchSmoother sm = PatchSmoother::build(&space, ConstraintSet::empty(space.total_dofs()), {});
    for (size_t p = 0; p < sm.patches().size(); ++p) {
      const Numbering& num = sm.numberings()[p].interior;
      LocalSystem local = assemble_cells(form, &space, sm.patches()[p].cells, num, num);
      for (int i = 0; i < num.size(); ++i)
        for (int j = 0; j < num.size(); ++j)
          if (std::abs(local.matrix(i, j) - global.entry(num.global[i], num.global[j])) >
              1e-12 * scale) {
            detail = std::string(c.name) + ": local block deviates from global submatrix";
            return false;
          }
    }
  }
  return true;
}

bool c4_spectral_overlap_bound(std::string& detail) {
  BenchSpec spec = BenchSpec::defaults(Problem::poisson);
  spec.base_nx = spec.base_ny = 16;
  spec.refinements = {0};
  spec.smoother.weighting = WeightingKind::none;
  DiagnoseReport rep = diagnose(spec);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "lambda_max %.4f vs bound 7.05 (overlap %d)", rep.lambda_max,
                rep.overlap);
  detail = buf;
  return rep.overlap == 7 && rep.lambda_max <= 7.05;
}

bool robustness_table(Problem problem, std::string& detail, const char* audit_name) {
  BenchSpec spec = BenchSpec::defaults(problem);
  ResultTable t = run(spec);
  record_for_audit(audit_name, t);
  Spread s = spreads(t);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max %d, spread %d across parameters / %d across refinements",
                s.max_cell, s.row_spread, s.col_spread);
  detail = buf;
  return s.all_converged && s.max_cell <= 30 && s.row_spread <= 3 && s.col_spread <= 4;
}

bool c5_hdiv_robustness(std::string& detail) {
  if (!robustness_table(Problem::riesz_hdiv, detail, "hdiv")) return false;

  // Contrast: single-dof (pointwise) patches lose robustness in the stiff
  // regime — iteration count at the large parameter at least doubles or the
  // solve fails outright.
  BenchSpec jac = BenchSpec::defaults(Problem::riesz_hdiv);
  jac.refinements = {1};
  jac.params = {1.0, 1e4};
  jac.smoother.construct_dim = 1;  // one dof per patch
  ResultTable tj = run(jac);
  int base = parse_iters(tj.cells[0][0]);
  int stiff = parse_iters(tj.cells[0][1]);
  detail += "; pointwise contrast " + tj.cells[0][0] + " -> " + tj.cells[0][1];
  return base > 0 && (stiff < 0 || stiff >= 2 * base);
}

bool c6_hcurl_robustness(std::string& detail) {
  if (!robustness_table(Problem::riesz_hcurl, detail, "hcurl")) return false;

  // Edge-seeded patches miss the gradient kernel: the stiff solve must fail
  // within the iteration budget on the second refinement.
  BenchSpec edge = BenchSpec::defaults(Problem::riesz_hcurl);
  edge.refinements = {2};
  edge.params = {1e4};
  edge.smoother.construct_dim = 1;
  ResultTable te = run(edge);
  detail += "; edge-seeded stiff cell " + te.cells[0][0];
  return parse_iters(te.cells[0][0]) < 0;
}

bool c7_elasticity_kernel_capture(std::string& detail) {
  auto finest_ratio = [](const ResultTable& t, bool& stiff_failed) {
    size_t r = t.cells.size() - 1;
    int base = parse_iters(t.cells[r][0]);
    int stiff = parse_iters(t.cells[r].back());
    stiff_failed = stiff < 0;
    return stiff_failed ? 0.0 : static_cast<double>(stiff) / base;
  };

  BenchSpec low = BenchSpec::defaults(Problem::elasticity);
  low.degree = 1;
  ResultTable tl = run(low);
  record_for_audit("elasticity k=1", tl);
  bool low_failed = false;
  double low_ratio = finest_ratio(tl, low_failed);

  BenchSpec high = BenchSpec::defaults(Problem::elasticity);
  high.degree = 4;
  ResultTable th = run(high);
  record_for_audit("elasticity k=4", th);
  bool high_failed = false;
  double high_ratio = finest_ratio(th, high_failed);

  char buf[128];
  std::snprintf(buf, sizeof(buf), "degree-1 blow-up x%.1f%s, degree-4 ratio x%.2f",
                low_ratio, low_failed ? " (failed)" : "", high_ratio);
  detail = buf;
  return (low_failed || low_ratio >= 5.0) && !high_failed && high_ratio <= 1.5;
}

bool c8_saddle_point_mesh_independence(std::string& detail) {
  BenchSpec spec = BenchSpec::defaults(Problem::stokes);
  ResultTable t = run(spec);
  record_for_audit("stokes", t);
  Spread s = spreads(t);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "max %d, spread %d across parameters / %d across refinements",
                s.max_cell, s.row_spread, s.col_spread);
  detail = buf;
  return s.all_converged && s.max_cell <= 40 && s.row_spread <= 3 && s.col_spread <= 3;
}

bool c9_nonlinear_relaxation(std::string& detail) {
  Mesh m = build_structured(16, 16, CellShape::triangle);
  FunctionSpace p1 = build_space(m.topology, m.geometry, lagrange(CellShape::triangle, 1));
  std::vector<DirichletBC> bcs = {{0, BoundarySelector::all(), nullptr}};
  ConstraintSet cs = ConstraintSet::build(p1, bcs);
  FormDescriptor form = semilinear_form();
  PatchSmoother sm = PatchSmoother::build(&p1, cs, {});

  // Monotone residual decrease over the first 10 sweeps.
  Vector u(p1.total_dofs(), 0.0);
  double prev = norm2(residual(form, &p1, u, cs));
  for (int sweep = 0; sweep < 10; ++sweep) {
    sm.apply_nonlinear(form, u);
    double now = norm2(residual(form, &p1, u, cs));
    if (now >= prev) {
      detail = "residual grew on sweep " + std::to_string(sweep + 1);
      return false;
    }
    prev = now;
  }

  // Newton reference.
  Vector usol(p1.total_dofs(), 0.0);
  SolveReport nr = newton(form, &p1, bcs, usol);
  if (!nr.converged || nr.iterations > 8) {
    detail = "Newton took " + std::to_string(nr.iterations) + " steps";
    return false;
  }

  // The discrete solution is a fixed point of the sweep.
  Vector fixed = usol;
  sm.apply_nonlinear(form, fixed);
  double dev = 0.0;
  for (size_t i = 0; i < fixed.size(); ++i) dev = std::max(dev, std::abs(fixed[i] - usol[i]));
  char buf[96];
  std::snprintf(buf, sizeof(buf), "Newton %d steps, fixed-point drift %.2e", nr.iterations, dev);
  detail = buf;
  return dev <= 1e-10;
}

bool c10_direct_patch_degeneracy(std::string& detail) {
  // A single whole-domain patch is a direct solve: undamped stationary
  // iteration must finish in exactly one step. Run at the base parameter;
  // beyond it, even a direct solve's rounding floor exceeds the target.
  struct Case {
    Problem problem;
    const char* name;
  };
  for (Case c : {Case{Problem::poisson, "poisson"}, Case{Problem::riesz_hdiv, "hdiv"},
                 Case{Problem::riesz_hcurl, "hcurl"}, Case{Problem::elasticity, "elasticity"},
                 Case{Problem::stokes, "stokes"}}) {
    BenchSpec spec = BenchSpec::defaults(c.problem);
    spec.refinements = {1};
    spec.params = {1.0};
    spec.smoother.construct_type = ConstructType::pardecomp;
    spec.smoother.weighting = WeightingKind::none;
    spec.smoother.exclude_subspaces.clear();
    spec.cycle.accel = LevelAccel::richardson;
    spec.cycle.richardson_scale = 1.0;
    spec.ksp = KspType::richardson;
    spec.richardson_scale = 1.0;
    spec.rtol = 1e-12;
    ResultTable t = run(spec);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%s: %s iterations, residual %.2e", c.name,
                  t.cells[0][0].c_str(), t.true_residuals[0][0]);
    detail = buf;
    if (t.cells[0][0] != "1" || t.true_residuals[0][0] > 1e-12) return false;
  }
  detail = "all linear problems: 1 iteration, residual <= 1e-12";
  return true;
}

bool c11_true_residual_audit(std::string& detail) {
  int checked = 0, failed = 0;
  double worst = 0.0;
  std::string worst_where;
  for (size_t t = 0; t < g_audit_tables.size(); ++t) {
    const ResultTable& table = g_audit_tables[t];
    for (size_t r = 0; r < table.cells.size(); ++r)
      for (size_t c = 0; c < table.cells[r].size(); ++c) {
        if (parse_iters(table.cells[r][c]) < 0) continue;  // unconverged: exempt
        ++checked;
        double res = table.true_residuals[r][c];
        if (res > worst) {
          worst = res;
          worst_where = g_audit_names[t] + " row " + table.row_labels[r] + " col " +
                        table.col_labels[c];
        }
        if (res > 1e-8) ++failed;
      }
  }
  char buf[192];
  std::snprintf(buf, sizeof(buf), "%d cells audited, %d above 1e-8; worst %.3e (%s)", checked,
                failed, worst, worst_where.c_str());
  detail = buf;
  return failed == 0;
}

}  // namespace

int main() {
  run_criterion(1, "incidence queries match a brute-force oracle", c1_topology_oracle);
  run_criterion(2, "vertex-star sweeps coincide with Jacobi / Gauss-Seidel",
                c2_pointwise_coincidence);
  run_criterion(3, "star patch local matrices equal global submatrices",
                c3_local_matrix_exactness);
  run_criterion(4, "additive smoother spectrum respects the overlap count",
                c4_spectral_overlap_bound);
  run_criterion(5, "div-form solver is parameter- and mesh-robust", c5_hdiv_robustness);
  run_criterion(6, "curl-form solver is robust; edge-seeded patches are not",
                c6_hcurl_robustness);
  run_criterion(7, "near-incompressible elasticity needs kernel-capturing patches",
                c7_elasticity_kernel_capture);
  run_criterion(8, "saddle-point solver iteration counts are mesh-independent",
                c8_saddle_point_mesh_independence);
  run_criterion(9, "nonlinear patch sweeps decrease the residual and fix the solution",
                c9_nonlinear_relaxation);
  run_criterion(10, "a whole-domain patch degenerates to a one-step direct solve",
                c10_direct_patch_degeneracy);
  run_criterion(11, "converged results withstand an unpreconditioned residual audit",
                c11_true_residual_audit);

  if (g_failures == 0)
    std::printf("all criteria passed\n");
  else
    std::printf("%d criteria failed\n", g_failures);
  return g_failures;
}
