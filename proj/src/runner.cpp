#include "nlhom/runner.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "nlhom/asymptotic.hpp"
#include "nlhom/cell_problem.hpp"
#include "nlhom/extension.hpp"
#include "nlhom/io.hpp"
#include "nlhom/parallel.hpp"
#include "nlhom/version.hpp"

namespace nlhom {

namespace {

namespace fs = std::filesystem;

std::string vec_str(const Vec& v, int d) {
  std::ostringstream os;
  for (int a = 0; a < d; ++a) {
    if (a) os << " ";
    os << CsvWriter::format(v[a]);
  }
  return os.str();
}

std::string config_echo(const ExperimentConfig& cfg) {
  std::ostringstream os;
  int d = cfg.domain.dim;
  os << "[domain]\n";
  os << "d = " << d << "\n";
  os << "n = " << cfg.resolution << "\n";
  if (!cfg.domain.label.empty()) os << "label = " << cfg.domain.label << "\n";
  if (cfg.domain.holes.empty()) {
    os << "holes = none\n";
  } else {
    os << "holes = ";
    for (std::size_t i = 0; i < cfg.domain.holes.size(); ++i) {
      const auto& h = cfg.domain.holes[i];
      if (i) os << " ; ";
      if (h.shape == HoleSpec::Shape::box) {
        os << "box";
        for (int a = 0; a < d; ++a)
          os << " " << CsvWriter::format(h.lo[a]) << " " << CsvWriter::format(h.hi[a]);
      } else {
        os << "ball";
        for (int a = 0; a < d; ++a) os << " " << CsvWriter::format(h.center[a]);
        os << " " << CsvWriter::format(h.radius);
      }
    }
    os << "\n";
  }
  os << "\n[kernel]\n";
  switch (cfg.kernel_shape) {
    case Kernel::Shape::ball:
      os << "shape = ball\nradius = " << CsvWriter::format(cfg.kernel_radius) << "\n";
      break;
    case Kernel::Shape::gaussian:
      os << "shape = gaussian\nradius = " << CsvWriter::format(cfg.kernel_radius)
         << "\nsigma = " << CsvWriter::format(cfg.kernel_sigma) << "\n";
      break;
    case Kernel::Shape::table: {
      os << "shape = table\ntable =";
      for (std::size_t i = 0; i < cfg.table_r.size(); ++i)
        os << " " << CsvWriter::format(cfg.table_r[i]) << ":" << CsvWriter::format(cfg.table_a[i]);
      os << "\n";
      break;
    }
  }
  os << "\n[run]\n";
  os << "kind = " << kind_name(cfg.kind) << "\n";
  os << "p = " << CsvWriter::format(cfg.p) << "\n";
  os << "xi = ";
  for (std::size_t i = 0; i < cfg.xi_list.size(); ++i) {
    if (i) os << " ; ";
    os << vec_str(cfg.xi_list[i], d);
  }
  os << "\n";
  if (!cfg.eps_list.empty()) {
    os << "eps =";
    for (double e : cfg.eps_list) os << " " << CsvWriter::format(e);
    os << "\n";
  }
  if (!cfg.T_list.empty()) {
    os << "T =";
    for (double T : cfg.T_list) os << " " << CsvWriter::format(T);
    os << "\n";
  }
  if (cfg.band > 0) os << "band = " << CsvWriter::format(cfg.band) << "\n";
  os << "res = " << cfg.res_per_unit << "\n";
  if (cfg.omega_set) {
    os << "omega = " << vec_str(cfg.omega_lo, d) << " " << vec_str(cfg.omega_hi, d) << "\n";
  }
  os << "seed = " << cfg.seed << "\n";
  os << "threads = " << cfg.threads << "\n";
  os << "out = " << cfg.out_dir << "\n";
  return os.str();
}

BoxRegion make_omega(const ExperimentConfig& cfg, double spacing) {
  Vec lo = cfg.omega_lo, hi = cfg.omega_hi;
  if (!cfg.omega_set) {
    for (int a = 0; a < cfg.domain.dim; ++a) {
      lo[a] = 0.0;
      hi[a] = 1.0;
    }
  }
  Vec ext{1, 1, 1};
  for (int a = 0; a < cfg.domain.dim; ++a) ext[a] = hi[a] - lo[a];
  return BoxRegion(cfg.domain.dim, lo, ext, spacing);
}

struct RunContext {
  PeriodicDomain dom;
  Kernel kernel;
  ComponentMask comp;
  bool comp_built = false;
  std::ostringstream summary;
};

void ensure_component(RunContext& ctx) {
  if (!ctx.comp_built) {
    ctx.comp = component_selection(ctx.dom);
    ctx.comp_built = true;
  }
}

void run_hhom_cell(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  int d = cfg.domain.dim;
  std::vector<std::string> header;
  for (int a = 0; a < d; ++a) header.push_back("xi" + std::to_string(a + 1));
  header.insert(header.end(), {"p", "n", "value", "grad_norm", "iters"});
  CsvWriter csv((out / "hhom_cell.csv").string(), header);
  int idx = 0;
  for (const Vec& xi : cfg.xi_list) {
    CellProblem prob{ctx.dom, ctx.kernel, cfg.p, xi};
    CorrectorSolution sol = cfg.p == 2.0 ? solve_quadratic(prob) : solve_convex(prob);
    std::vector<double> row;
    for (int a = 0; a < d; ++a) row.push_back(xi[a]);
    row.insert(row.end(), {cfg.p, static_cast<double>(cfg.resolution), sol.value, sol.grad_sup,
                           static_cast<double>(sol.iterations)});
    csv.row(row);
    write_nlh1((out / ("corrector_" + std::to_string(idx) + ".nlh1")).string(), sol.w);
    ctx.summary << "h_hom(" << vec_str(xi, d) << ") = " << CsvWriter::format(sol.value)
                << "  grad_sup = " << CsvWriter::format(sol.grad_sup) << "  iters = "
                << sol.iterations << (sol.smoothed ? "  (smoothed |.|)" : "") << "\n";
    ++idx;
  }
}

void run_box_sweep(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  ensure_component(ctx);
  if (cfg.T_list.empty()) throw ConfigError("hhom-box-sweep needs a T list");
  const Vec& xi = cfg.xi_list.front();
  PeriodicDomain dom_at_res = cfg.res_per_unit == cfg.resolution
                                  ? ctx.dom
                                  : rasterize_domain(cfg.domain, cfg.res_per_unit);
  CellProblem cprob{dom_at_res, ctx.kernel, cfg.p, xi};
  CorrectorSolution cell = cfg.p == 2.0 ? solve_quadratic(cprob) : solve_convex(cprob);

  BoxProblem base;
  base.dom = ctx.dom;
  base.kernel = ctx.kernel;
  base.p = cfg.p;
  base.xi = xi;
  base.res_per_unit = cfg.res_per_unit;
  base.band_width = cfg.band;
  base.k0 = ctx.comp.k0;
  std::vector<TSweepRow> rows = t_sweep(base, cfg.T_list, cell.value);

  CsvWriter csv((out / "tsweep.csv").string(),
                {"T", "box_pinned", "box_periodic", "cell", "gap_pinned", "gap_periodic"});
  for (const auto& r : rows)
    csv.row({r.T, r.box_pinned, r.box_periodic, r.cell, r.gap_pinned, r.gap_periodic});
  ctx.summary << "cell value = " << CsvWriter::format(cell.value) << "\n";
  for (const auto& r : rows)
    ctx.summary << "T = " << r.T << ": pinned " << CsvWriter::format(r.box_pinned)
                << ", periodic " << CsvWriter::format(r.box_periodic) << ", gap_pinned "
                << CsvWriter::format(r.gap_pinned) << "\n";
}

void run_extension_constants(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  ensure_component(ctx);
  if (cfg.eps_list.empty()) throw ConfigError("extension-constants needs an eps list");
  double t = default_collar_width(ctx.dom);
  ExtensionPlan plan = build_plan(ctx.dom, ctx.comp, t);
  double r = ctx.kernel.r0();
  CsvWriter csv((out / "extension.csv").string(), {"eps", "r", "c1_hat", "c2_hat", "R", "k0"});
  ctx.summary << "k = " << plan.k() << "  C~ = " << CsvWriter::format(plan.c_tilde())
              << "  k0 = " << CsvWriter::format(plan.k0()) << "  t = " << CsvWriter::format(plan.t)
              << "  R = " << CsvWriter::format(plan.R_est) << "\n";
  for (double eps : cfg.eps_list) {
    BoxRegion omega = make_omega(cfg, eps / cfg.resolution);
    double c1 = 0.0, c2 = 0.0;
    for (int fidx = 0; fidx < cfg.nfields; ++fidx) {
      GridField u(omega);
      apply_domain_mask(u, ctx.dom, eps);
      fill_random(u, cfg.seed + static_cast<std::uint64_t>(fidx));
      EstimateConstants est = estimate_constants(plan, u, eps, r, cfg.p);
      c1 = std::max(c1, est.c1_hat);
      c2 = std::max(c2, est.c2_hat);
    }
    csv.row({eps, r, c1, c2, plan.R_est, plan.k0()});
    ctx.summary << "eps = " << CsvWriter::format(eps) << ": c1_hat = " << CsvWriter::format(c1)
                << ", c2_hat(r0) = " << CsvWriter::format(c2) << "\n";
  }
}

void run_gamma_sweep(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  ensure_component(ctx);
  if (cfg.eps_list.empty()) throw ConfigError("gamma-sweep needs an eps list");
  const Vec& xi = cfg.xi_list.front();
  // Validate the eps/grid compatibility up front so errors carry the bound.
  for (double eps : cfg.eps_list) {
    double min_ext = cfg.omega_set ? make_omega(cfg, eps / cfg.resolution).min_extent() : 1.0;
    if (eps * ctx.comp.k0 >= 0.5 * min_ext) {
      std::ostringstream os;
      os << "eps = " << eps << " too large: eps * k0 = " << eps * ctx.comp.k0
         << " must stay below half the Omega extent " << 0.5 * min_ext;
      throw GeometryError(os.str());
    }
  }
  CellProblem prob{ctx.dom, ctx.kernel, cfg.p, xi};
  CorrectorSolution cell = cfg.p == 2.0 ? solve_quadratic(prob) : solve_convex(prob);
  Vec lo{0, 0, 0}, ext{1, 1, 1};
  if (cfg.omega_set) {
    lo = cfg.omega_lo;
    for (int a = 0; a < cfg.domain.dim; ++a) ext[a] = cfg.omega_hi[a] - cfg.omega_lo[a];
  }
  std::vector<GammaRow> rows =
      gamma_experiment(ctx.dom, ctx.kernel, cfg.p, xi, cell, cfg.eps_list, lo, ext);
  CsvWriter csv((out / "gamma.csv").string(), {"eps", "F_recovery", "F_linear", "h_hom"});
  for (const auto& r : rows) csv.row({r.eps, r.F_recovery, r.F_linear, r.h_hom});
  ctx.summary << "h_hom = " << CsvWriter::format(cell.value) << "\n";
  for (const auto& r : rows)
    ctx.summary << "eps = " << CsvWriter::format(r.eps)
                << ": F_recovery/|O| = " << CsvWriter::format(r.F_recovery)
                << ", F_linear/|O| = " << CsvWriter::format(r.F_linear) << "\n";
}

void run_poincare(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  CsvWriter csv((out / "poincare.csv").string(), {"case", "p", "lhs", "rhs", "ok"});
  const double ps[3] = {1.5, 2.0, 3.0};
  int failures = 0;
  for (int c = 0; c < cfg.ncases; ++c) {
    std::uint64_t s = cfg.seed + static_cast<std::uint64_t>(c) * 7919;
    double p = ps[splitmix64(s) % 3];
    // Random subregion of the unit cell and a random eps-mask.
    int n = 24;
    double eps = 0.5;
    BoxRegion region(cfg.domain.dim, Vec{0, 0, 0}, Vec{1, 1, 1}, 1.0 / n);
    GridField u(region);
    apply_domain_mask(u, ctx.dom, eps);
    fill_random(u, s);
    // Snap the random subregion to the grid so its extent is a whole number
    // of cells.
    double a0 = std::round((0.1 + 0.3 * (static_cast<double>(splitmix64(s ^ 1) % 1000) / 1000.0)) * n) / n;
    double b0 = std::round((0.6 + 0.35 * (static_cast<double>(splitmix64(s ^ 2) % 1000) / 1000.0)) * n) / n;
    Vec lo{0, 0, 0}, ext{1, 1, 1};
    for (int a = 0; a < cfg.domain.dim; ++a) {
      lo[a] = a0;
      ext[a] = b0 - a0;
    }
    BoxRegion A(cfg.domain.dim, lo, ext, 1.0 / n);
    auto [lhs, rhs] = poincare_defect(u, A, p);
    bool ok = lhs <= rhs * (1.0 + 1e-9);
    if (!ok) ++failures;
    csv.row({static_cast<double>(c), p, lhs, rhs, ok ? 1.0 : 0.0});
  }
  ctx.summary << "poincare cases: " << cfg.ncases << ", failures: " << failures << "\n";
  if (failures > 0) throw SolverError("mean-value inequality failed on random cases");
}

void run_path_suite(const ExperimentConfig& cfg, RunContext& ctx, const fs::path& out) {
  ensure_component(ctx);
  int d = cfg.domain.dim;
  int n = cfg.resolution;
  double r1 = cfg.r1 > 0 ? cfg.r1 : 4.0 / n;
  double nu = cfg.nu;
  int nbar = path_length_bound(ctx.dom, ctx.comp, r1, nu);

  // Coarse nodes of 3Q cap E, subsampled pairs.
  std::vector<Vec> nodes;
  int stride = std::max(1, 3 * n / 12);
  Lattice w3(d, {3 * static_cast<Index>(n), 3 * static_cast<Index>(n), 3 * static_cast<Index>(n)});
  for (Index i0 = stride / 2; i0 < 3 * n; i0 += stride)
    for (Index i1 = d > 1 ? stride / 2 : 0; i1 < (d > 1 ? 3 * n : 1); i1 += stride)
      for (Index i2 = d > 2 ? stride / 2 : 0; i2 < (d > 2 ? 3 * n : 1); i2 += stride) {
        IVec c{i0, i1, i2};
        if (!ctx.comp.cell(d, c)) continue;
        Vec x{0, 0, 0};
        for (int a = 0; a < d; ++a) x[a] = (static_cast<double>(c[a]) + 0.5) / n;
        nodes.push_back(x);
      }
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < nodes.size() && pairs.size() < static_cast<std::size_t>(cfg.npairs); ++i)
    for (std::size_t j = i + 1; j < nodes.size() && pairs.size() < static_cast<std::size_t>(cfg.npairs); ++j)
      pairs.push_back({i, j});

  CsvWriter csv((out / "paths.csv").string(), {"pair", "N", "N_bar", "ok"});
  int failures = 0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    DiscretePath path = find_discrete_path(ctx.dom, ctx.comp, nodes[pairs[k].first],
                                           nodes[pairs[k].second], r1, nu);
    int N = path.interior_count();
    bool ok = N <= nbar;
    if (!ok) ++failures;
    csv.row({static_cast<double>(k), static_cast<double>(N), static_cast<double>(nbar),
             ok ? 1.0 : 0.0});
  }
  ctx.summary << "paths: " << pairs.size() << " pairs, N_bar = " << nbar
              << ", failures: " << failures << "\n";
  if (failures > 0) throw SolverError("discrete path bound violated");
}

}  // namespace

void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
  set_thread_count(cfg.threads);
  fs::path out(out_dir);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir);

  RunContext ctx;
  ctx.dom = rasterize_domain(cfg.domain, cfg.resolution);
  ctx.kernel = cfg.make_kernel();

  switch (cfg.kind) {
    case ExperimentKind::hhom_cell:
      run_hhom_cell(cfg, ctx, out);
      break;
    case ExperimentKind::hhom_box_sweep:
      run_box_sweep(cfg, ctx, out);
      break;
    case ExperimentKind::extension_constants:
      run_extension_constants(cfg, ctx, out);
      break;
    case ExperimentKind::gamma_sweep:
      run_gamma_sweep(cfg, ctx, out);
      break;
    case ExperimentKind::poincare_suite:
      run_poincare(cfg, ctx, out);
      break;
    case ExperimentKind::path_suite:
      run_path_suite(cfg, ctx, out);
      break;
  }

  std::ostringstream manifest;
  manifest << "nlhom " << kVersion << "\n";
  manifest << "kind: " << kind_name(cfg.kind) << "\n";
  manifest << "kernel: " << ctx.kernel.describe() << "\n";
  if (ctx.comp_built) {
    manifest << "k: " << ctx.comp.k << "\n";
    manifest << "C_tilde: " << CsvWriter::format(ctx.comp.c_tilde) << "\n";
    manifest << "k0: " << CsvWriter::format(ctx.comp.k0) << "\n";
  }
  manifest << "\n--- config ---\n" << config_echo(cfg);
  write_text_file((out / "manifest.txt").string(), manifest.str());
  write_text_file((out / "summary.txt").string(), ctx.summary.str());
}

}  // namespace nlhom
