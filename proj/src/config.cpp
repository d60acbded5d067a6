#include "nlhom/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include "nlhom/errors.hpp"

namespace nlhom {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct Collector {
  std::vector<std::string> errors;
  void add(const std::string& e) { errors.push_back(e); }
};

bool parse_double(const std::string& s, double* out) {
  try {
    std::size_t pos = 0;
    *out = std::stod(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_int(const std::string& s, long* out) {
  try {
    std::size_t pos = 0;
    *out = std::stol(s, &pos);
    return pos == s.size();
  } catch (...) {
    return false;
  }
}

bool parse_double_list(const std::string& s, std::vector<double>* out) {
  out->clear();
  for (const auto& tok : split_ws(s)) {
    double v;
    if (!parse_double(tok, &v)) return false;
    out->push_back(v);
  }
  return !out->empty();
}

}  // namespace

std::string kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::hhom_cell: return "hhom-cell";
    case ExperimentKind::hhom_box_sweep: return "hhom-box-sweep";
    case ExperimentKind::extension_constants: return "extension-constants";
    case ExperimentKind::gamma_sweep: return "gamma-sweep";
    case ExperimentKind::poincare_suite: return "poincare-suite";
    case ExperimentKind::path_suite: return "path-suite";
  }
  return "?";
}

Kernel ExperimentConfig::make_kernel() const {
  switch (kernel_shape) {
    case Kernel::Shape::ball:
      return Kernel::ball_indicator(domain.dim, kernel_radius);
    case Kernel::Shape::gaussian:
      return Kernel::truncated_gaussian(domain.dim, kernel_sigma, kernel_radius);
    case Kernel::Shape::table:
      return Kernel::radial_table(domain.dim, table_r, table_a);
  }
  throw ConfigError("unknown kernel shape");
}

int ExperimentConfig::default_resolution() const {
  if (domain.dim == 1) return 256;
  if (domain.dim == 2) return 64;
  return 16;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  Collector errs;

  std::map<std::string, std::map<std::string, std::string>> sections;
  std::map<std::string, int> section_count;
  {
    std::istringstream is(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      std::size_t hash = line.find('#');
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') {
          errs.add("line " + std::to_string(lineno) + ": malformed section header");
          continue;
        }
        section = trim(line.substr(1, line.size() - 2));
        if (section != "domain" && section != "kernel" && section != "run") {
          errs.add("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
          section.clear();
          continue;
        }
        if (++section_count[section] > 1)
          errs.add("line " + std::to_string(lineno) + ": duplicate section [" + section + "]");
        continue;
      }
      std::size_t eq = line.find('=');
      if (eq == std::string::npos) {
        errs.add("line " + std::to_string(lineno) + ": expected key = value");
        continue;
      }
      if (section.empty()) {
        errs.add("line " + std::to_string(lineno) + ": key outside any section");
        continue;
      }
      std::string key = trim(line.substr(0, eq));
      std::string val = trim(line.substr(eq + 1));
      if (sections[section].count(key))
        errs.add("line " + std::to_string(lineno) + ": duplicate key '" + key + "' in [" + section + "]");
      sections[section][key] = val;
    }
  }

  // ---- [domain] ----
  long d = 2;
  auto& dom = sections["domain"];
  const std::vector<std::string> dom_keys{"d", "n", "holes", "label"};
  for (const auto& [k, v] : dom)
    if (std::find(dom_keys.begin(), dom_keys.end(), k) == dom_keys.end())
      errs.add("unknown key '" + k + "' in [domain]");
  if (dom.count("d")) {
    if (!parse_int(dom["d"], &d) || d < 1 || d > 3) errs.add("d must be 1, 2 or 3");
  }
  cfg.domain.dim = static_cast<int>(d);
  if (dom.count("n")) {
    long n;
    if (!parse_int(dom["n"], &n) || n < 8) errs.add("n must be an integer >= 8");
    else cfg.resolution = static_cast<int>(n);
  }
  if (dom.count("label")) cfg.domain.label = dom["label"];
  if (dom.count("holes") && trim(dom["holes"]) != "none") {
    for (const auto& part : split_on(dom["holes"], ';')) {
      if (part.empty()) continue;
      auto toks = split_ws(part);
      HoleSpec h;
      bool ok = !toks.empty();
      if (ok && toks[0] == "box") {
        h.shape = HoleSpec::Shape::box;
        ok = static_cast<long>(toks.size()) == 1 + 2 * d;
        for (int a = 0; ok && a < d; ++a) {
          ok = parse_double(toks[static_cast<std::size_t>(1 + 2 * a)], &h.lo[a]) &&
               parse_double(toks[static_cast<std::size_t>(2 + 2 * a)], &h.hi[a]) &&
               h.lo[a] < h.hi[a];
        }
      } else if (ok && toks[0] == "ball") {
        h.shape = HoleSpec::Shape::ball;
        ok = static_cast<long>(toks.size()) == 2 + d;
        for (int a = 0; ok && a < d; ++a)
          ok = parse_double(toks[static_cast<std::size_t>(1 + a)], &h.center[a]);
        ok = ok && parse_double(toks.back(), &h.radius) && h.radius > 0;
      } else {
        ok = false;
      }
      if (!ok)
        errs.add("holes: cannot parse '" + part + "' (expect 'box lo hi ...' or 'ball c ... r')");
      else
        cfg.domain.holes.push_back(h);
    }
  }

  // ---- [kernel] ----
  auto& ker = sections["kernel"];
  const std::vector<std::string> ker_keys{"shape", "radius", "sigma", "table"};
  for (const auto& [k, v] : ker)
    if (std::find(ker_keys.begin(), ker_keys.end(), k) == ker_keys.end())
      errs.add("unknown key '" + k + "' in [kernel]");
  if (ker.count("shape")) {
    std::string s = ker["shape"];
    if (s == "ball") cfg.kernel_shape = Kernel::Shape::ball;
    else if (s == "gaussian") cfg.kernel_shape = Kernel::Shape::gaussian;
    else if (s == "table") cfg.kernel_shape = Kernel::Shape::table;
    else errs.add("kernel shape must be ball, gaussian or table");
  }
  if (ker.count("radius")) {
    if (!parse_double(ker["radius"], &cfg.kernel_radius) || cfg.kernel_radius <= 0)
      errs.add("kernel radius must be positive");
  }
  if (ker.count("sigma")) {
    if (!parse_double(ker["sigma"], &cfg.kernel_sigma) || cfg.kernel_sigma <= 0)
      errs.add("kernel sigma must be positive");
  }
  if (ker.count("table")) {
    cfg.table_r.clear();
    cfg.table_a.clear();
    bool ok = true;
    for (const auto& pair : split_ws(ker["table"])) {
      auto colon = pair.find(':');
      double r, a;
      if (colon == std::string::npos || !parse_double(pair.substr(0, colon), &r) ||
          !parse_double(pair.substr(colon + 1), &a)) {
        ok = false;
        break;
      }
      cfg.table_r.push_back(r);
      cfg.table_a.push_back(a);
    }
    if (!ok) errs.add("kernel table must be r:a pairs separated by spaces");
  }

  // ---- [run] ----
  auto& run = sections["run"];
  const std::vector<std::string> run_keys{"kind", "p",   "xi",      "eps",    "T",
                                          "band", "res", "omega",   "seed",   "threads",
                                          "nfields", "ncases", "npairs", "r1", "nu", "out"};
  for (const auto& [k, v] : run)
    if (std::find(run_keys.begin(), run_keys.end(), k) == run_keys.end())
      errs.add("unknown key '" + k + "' in [run]");
  if (!run.count("kind")) {
    errs.add("missing required key 'kind' in [run]");
  } else {
    std::string s = run["kind"];
    if (s == "hhom-cell") cfg.kind = ExperimentKind::hhom_cell;
    else if (s == "hhom-box-sweep") cfg.kind = ExperimentKind::hhom_box_sweep;
    else if (s == "extension-constants") cfg.kind = ExperimentKind::extension_constants;
    else if (s == "gamma-sweep") cfg.kind = ExperimentKind::gamma_sweep;
    else if (s == "poincare-suite") cfg.kind = ExperimentKind::poincare_suite;
    else if (s == "path-suite") cfg.kind = ExperimentKind::path_suite;
    else errs.add("unknown experiment kind '" + s + "'");
  }
  if (run.count("p")) {
    if (!parse_double(run["p"], &cfg.p)) errs.add("p must be a number");
    else if (cfg.p <= 1.0) errs.add("p must exceed 1");
  }
  if (run.count("xi")) {
    cfg.xi_list.clear();
    for (const auto& part : split_on(run["xi"], ';')) {
      if (part.empty()) continue;
      auto toks = split_ws(part);
      Vec v{0, 0, 0};
      bool ok = static_cast<long>(toks.size()) == d;
      for (int a = 0; ok && a < d; ++a) ok = parse_double(toks[static_cast<std::size_t>(a)], &v[a]);
      if (!ok) errs.add("xi: each entry needs " + std::to_string(d) + " components");
      else cfg.xi_list.push_back(v);
    }
  }
  if (run.count("eps")) {
    if (!parse_double_list(run["eps"], &cfg.eps_list)) errs.add("eps must be a list of numbers");
    for (double e : cfg.eps_list)
      if (e <= 0) errs.add("eps values must be positive");
  }
  if (run.count("T")) {
    if (!parse_double_list(run["T"], &cfg.T_list)) errs.add("T must be a list of numbers");
    for (std::size_t i = 1; i < cfg.T_list.size(); ++i)
      if (cfg.T_list[i] <= cfg.T_list[i - 1]) errs.add("T values must increase");
  }
  if (run.count("band")) {
    if (!parse_double(run["band"], &cfg.band) || cfg.band < 0)
      errs.add("band must be a nonnegative number (0 = use k0)");
  }
  if (run.count("res")) {
    long r;
    if (!parse_int(run["res"], &r) || r < 2) errs.add("res must be an integer >= 2");
    else cfg.res_per_unit = static_cast<int>(r);
  }
  if (run.count("omega")) {
    auto toks = split_ws(run["omega"]);
    bool ok = static_cast<long>(toks.size()) == 2 * d;
    for (int a = 0; ok && a < d; ++a) {
      ok = parse_double(toks[static_cast<std::size_t>(a)], &cfg.omega_lo[a]) &&
           parse_double(toks[static_cast<std::size_t>(d + a)], &cfg.omega_hi[a]) &&
           cfg.omega_lo[a] < cfg.omega_hi[a];
    }
    if (!ok) errs.add("omega needs lo then hi corners (" + std::to_string(2 * d) + " numbers)");
    else cfg.omega_set = true;
  }
  if (run.count("seed")) {
    long s;
    if (!parse_int(run["seed"], &s) || s < 0) errs.add("seed must be a nonnegative integer");
    else cfg.seed = static_cast<std::uint64_t>(s);
  }
  if (run.count("threads")) {
    long t;
    if (!parse_int(run["threads"], &t) || t < 0) errs.add("threads must be >= 0 (0 = auto)");
    else cfg.threads = static_cast<int>(t);
  }
  if (run.count("nfields")) {
    long v;
    if (!parse_int(run["nfields"], &v) || v < 1) errs.add("nfields must be >= 1");
    else cfg.nfields = static_cast<int>(v);
  }
  if (run.count("ncases")) {
    long v;
    if (!parse_int(run["ncases"], &v) || v < 1) errs.add("ncases must be >= 1");
    else cfg.ncases = static_cast<int>(v);
  }
  if (run.count("npairs")) {
    long v;
    if (!parse_int(run["npairs"], &v) || v < 1) errs.add("npairs must be >= 1");
    else cfg.npairs = static_cast<int>(v);
  }
  if (run.count("r1")) {
    if (!parse_double(run["r1"], &cfg.r1) || cfg.r1 < 0) errs.add("r1 must be nonnegative");
  }
  if (run.count("nu")) {
    if (!parse_double(run["nu"], &cfg.nu) || cfg.nu <= 0 || cfg.nu > 1)
      errs.add("nu must lie in (0, 1]");
  }
  if (run.count("out")) cfg.out_dir = run["out"];

  // Defaults that depend on other values.
  if (cfg.resolution == 0) cfg.resolution = cfg.default_resolution();
  if (cfg.xi_list.empty()) {
    Vec e1{0, 0, 0};
    e1[0] = 1.0;
    cfg.xi_list.push_back(e1);
  }
  if (cfg.res_per_unit == 0) cfg.res_per_unit = cfg.resolution;

  if (!errs.errors.empty()) {
    std::string msg = "config invalid:";
    for (const auto& e : errs.errors) msg += "\n  - " + e;
    throw ConfigError(msg);
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open config file " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str());
}

}  // namespace nlhom
