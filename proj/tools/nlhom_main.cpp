#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "nlhom/config.hpp"
#include "nlhom/errors.hpp"
#include "nlhom/io.hpp"
#include "nlhom/runner.hpp"
#include "nlhom/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"nlhom: nonlocal energies on periodically perforated domains"};
  app.set_version_flag("--version", std::string("nlhom ") + nlhom::kVersion);
  app.require_subcommand(1);

  std::string config_path, out_dir, field_path;
  int threads = -1;

  auto* run = app.add_subcommand("run", "run an experiment from a config file");
  run->add_option("config", config_path, "config file path")->required();
  run->add_option("--out", out_dir, "output directory (overrides the config)");
  run->add_option("--threads", threads, "worker threads (0 = auto)");

  auto* validate = app.add_subcommand("validate", "parse and validate a config file");
  validate->add_option("config", config_path, "config file path")->required();

  auto* dump = app.add_subcommand("dump-field", "print an NLH1 field header and stats");
  dump->add_option("field", field_path, "NLH1 file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      nlhom::ExperimentConfig cfg = nlhom::load_config(config_path);
      if (threads >= 0) cfg.threads = threads;
      std::string out = out_dir.empty() ? cfg.out_dir : out_dir;
      nlhom::run_experiment(cfg, out);
      std::printf("wrote artifacts to %s\n", out.c_str());
    } else if (validate->parsed()) {
      nlhom::ExperimentConfig cfg = nlhom::load_config(config_path);
      std::printf("config ok: kind = %s, d = %d, n = %d\n", nlhom::kind_name(cfg.kind).c_str(),
                  cfg.domain.dim, cfg.resolution);
    } else if (dump->parsed()) {
      nlhom::GridField f = nlhom::read_nlh1(field_path);
      nlhom::FieldStats s = nlhom::field_stats(f);
      std::printf("NLH1 field: d = %d, dims =", s.dim);
      for (int a = 0; a < s.dim; ++a) std::printf(" %lld", static_cast<long long>(s.dims[a]));
      std::printf("\norigin =");
      for (int a = 0; a < s.dim; ++a) std::printf(" %.17g", s.origin[a]);
      std::printf("\nspacing = %.17g\n", s.spacing);
      std::printf("nodes = %lld, masked = %lld\n", static_cast<long long>(s.nodes),
                  static_cast<long long>(s.masked));
      std::printf("masked values: min = %.17g, max = %.17g, mean = %.17g\n", s.min, s.max, s.mean);
    }
  } catch (const nlhom::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
