#pragma once

#include <string>

#include "nlhom/config.hpp"

namespace nlhom {

// Executes one experiment and writes its artifacts (CSV tables, NLH1 dumps,
// manifest.txt, summary.txt) under out_dir. Deterministic for a fixed config.
void run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

}  // namespace nlhom
