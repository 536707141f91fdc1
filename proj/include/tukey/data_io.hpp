#pragma once

#include <string>
#include <vector>

#include "tukey/dataset.hpp"
#include "tukey/inference.hpp"
#include "tukey/simulate.hpp"

namespace tukey::io {

// All writers are deterministic: identical inputs produce byte-identical
// files. Doubles use shortest round-trip decimal encoding.

std::string format_double(double v);
double parse_double(const std::string& text, const std::string& context);

// Dataset CSV with header "value,observed"; value empty iff observed = 0.
// A sidecar document <path>.meta.json carries n_missing (integer or null).
// Absent sidecar + no unobserved rows reads as the count-unknown regime.
Dataset read_dataset(const std::string& path);
void write_dataset(const Dataset& data, const std::string& path);

// Structured JSON configs, schema_version 1, unknown keys rejected with
// the offending key path.
SimConfig read_sim_config(const std::string& path);
PriorConfig read_prior_config(const std::string& path);
McmcConfig read_mcmc_config(const std::string& path);

TruthRecord read_truth(const std::string& path);
void write_truth(const TruthRecord& truth, const std::string& path);

// Draws CSV: one row per retained draw, columns "chain,iteration,<param...>"
// with parameter names in sorted order.
PosteriorDraws read_draws(const std::string& path);
void write_draws(const PosteriorDraws& draws, const std::string& path);

// Summary document: per entry {median, ci95: [lo, hi], rhat}, estimands
// and parameters in separate blocks.
void write_summary(const std::vector<SummaryRow>& estimands,
                   const std::vector<SummaryRow>& parameters, const std::string& path);

}  // namespace tukey::io
