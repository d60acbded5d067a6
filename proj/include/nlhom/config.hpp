#pragma once

#include <string>
#include <vector>

#include "nlhom/geometry.hpp"
#include "nlhom/kernel.hpp"

namespace nlhom {

enum class ExperimentKind {
  hhom_cell,
  hhom_box_sweep,
  extension_constants,
  gamma_sweep,
  poincare_suite,
  path_suite,
};

std::string kind_name(ExperimentKind k);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::hhom_cell;
  DomainSpec domain;
  int resolution = 0;  // unit-cell raster, defaults by dimension
  // kernel
  Kernel::Shape kernel_shape = Kernel::Shape::ball;
  double kernel_radius = 1.0;
  double kernel_sigma = 1.0;
  std::vector<double> table_r, table_a;
  // run parameters
  double p = 2.0;
  std::vector<Vec> xi_list;
  std::vector<double> eps_list;
  std::vector<double> T_list;
  double band = 0.0;  // 0 = geometry constant k0
  int res_per_unit = 0;  // box problems; 0 = resolution
  Vec omega_lo{0, 0, 0};
  Vec omega_hi{1, 1, 1};
  bool omega_set = false;
  std::uint64_t seed = 0;
  int threads = 0;
  int nfields = 20;
  int ncases = 100;  // poincare suite
  int npairs = 200;  // path suite
  double r1 = 0.0;   // path suite; 0 = 4 / resolution
  double nu = 0.5;
  std::string out_dir = "out";

  Kernel make_kernel() const;
  int default_resolution() const;
};

// Parses the sectioned key = value format. Collects every violation and
// reports them all in a single ConfigError.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace nlhom
