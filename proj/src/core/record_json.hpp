#pragma once

#include <json.hpp>

#include "core/pipeline.hpp"
#include "core/train.hpp"

namespace anovanet {

nlohmann::json norms_to_json(const std::map<ComponentKey, double>& norms);
nlohmann::json plan_to_json(const HyperPlan& p);
nlohmann::json fit_to_json(const FitResult& fit, bool deterministic);

}  // namespace anovanet
