#pragma once

#include <set>
#include <string>

#include "core/config.hpp"
#include "core/lowerbound.hpp"
#include "core/pipeline.hpp"
#include "core/synthdata.hpp"
#include "core/train.hpp"

namespace anovanet {

// Config schema slices shared by the C API and the CLI; unknown-key
// validation unions the slices a command consumes.
const std::set<std::string>& dgp_config_keys();
const std::set<std::string>& plan_config_keys();
const std::set<std::string>& opt_config_keys();
const std::set<std::string>& lowerbound_config_keys();

DgpConfig dgp_from_config(const Config& cfg);
OptConfig opt_from_config(const Config& cfg);

// regime key: lowdim | highdim-rsc | highdim-erm-free (default highdim-rsc).
// sigma_hat <= 0 in the config leaves the plan's pilot estimation to the
// consumer (the pipeline estimates it on the fitting half).
HyperPlan plan_from_config(const Config& cfg, long n, int d);

std::string fit_summary_json(const FitResult& fit, bool deterministic);
std::string anova_report_json(const AnovaReport& report);
std::string model_describe_json(const StructuredModel& m);
std::string plan_describe_json(const HyperPlan& p);

// Packing verification suite: parameters, codebook statistics for the
// univariate and bivariate bit lengths, and the maximum relative discrepancy
// between closed-form and quadrature packing distances over random word
// pairs. The report carries the numbers; enforcement is the caller's.
std::string lowerbound_report_json(const Config& cfg);

}  // namespace anovanet
