#include "anovanet.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "core/experiment.hpp"
#include "core/pipeline.hpp"
#include "core/quadrature.hpp"
#include "core/serialize.hpp"
#include "core/structured_model.hpp"
#include "core/synthdata.hpp"
#include "core/train.hpp"

struct anv_dataset {
  anovanet::Dataset ds;
};
struct anv_model {
  anovanet::StructuredModel m;
};
struct anv_plan {
  anovanet::HyperPlan p;
};
struct anv_fit {
  anovanet::FitResult fit;
};
struct anv_pipeline_result {
  anovanet::PipelineResult r;
};

namespace {

thread_local std::string g_last_error;

char* alloc_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

anv_status classify(const std::runtime_error& e) {
  const std::string what = e.what();
  if (what.find("diverged") != std::string::npos) return ANV_EDIVERGED;
  if (what.find("cannot open") != std::string::npos ||
      what.find("truncated") != std::string::npos ||
      what.find("bad magic") != std::string::npos ||
      what.find("write failed") != std::string::npos)
    return ANV_EIO;
  return ANV_EINVAL;
}

template <typename F>
anv_status guard(F&& f) {
  try {
    f();
    return ANV_OK;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return ANV_EINVAL;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = e.what();
    return ANV_EIO;
  } catch (const std::runtime_error& e) {
    g_last_error = e.what();
    return classify(e);
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return ANV_EINTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return ANV_EINTERNAL;
  }
}

anv_status require(bool cond, const char* message) {
  if (cond) return ANV_OK;
  g_last_error = message;
  return ANV_EINVAL;
}

anovanet::OptConfig to_opt(const anv_opt* opt) {
  anovanet::OptConfig o;
  if (!opt) return o;
  o.steps = opt->steps;
  o.restarts = opt->restarts;
  o.lr = opt->lr;
  o.cosine_decay = opt->cosine_decay != 0;
  o.threads = opt->threads;
  o.seed = opt->seed;
  o.eps_norm = opt->eps_norm;
  return o;
}

}  // namespace

extern "C" {

const char* anv_last_error(void) { return g_last_error.c_str(); }

const char* anv_version(void) { return "0.1.0"; }

void anv_string_free(char* s) { delete[] s; }

/* ---- datasets ----------------------------------------------------------- */

anv_status anv_dataset_generate(const char* config_text, anv_dataset** out) {
  if (require(config_text && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::Config cfg = anovanet::Config::parse_text(config_text);
    cfg.require_known(anovanet::dgp_config_keys());
    const anovanet::DgpConfig dgp = anovanet::dgp_from_config(cfg);
    const anovanet::StructuredModel truth = anovanet::make_truth(dgp);
    auto* handle = new anv_dataset{anovanet::sample_dataset(truth, dgp)};
    *out = handle;
  });
}

anv_status anv_signal_report(const char* config_text, char** json) {
  if (require(config_text && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::Config cfg = anovanet::Config::parse_text(config_text);
    cfg.require_known(anovanet::dgp_config_keys());
    const anovanet::DgpConfig dgp = anovanet::dgp_from_config(cfg);
    anovanet::SignalReport report;
    (void)anovanet::make_truth(dgp, &report);
    const nlohmann::json j{{"min_uni_l2", report.min_uni_l2},
                           {"min_bi_l2", report.min_bi_l2},
                           {"sup_abs", report.sup_abs}};
    *json = alloc_string(j.dump(2));
  });
}

anv_status anv_dataset_load_csv(const char* path, anv_dataset** out) {
  if (require(path && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_dataset{anovanet::load_dataset_csv_file(path)}; });
}

anv_status anv_dataset_load_bin(const char* path, anv_dataset** out) {
  if (require(path && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_dataset{anovanet::load_dataset_bin_file(path)}; });
}

anv_status anv_dataset_save_csv(const anv_dataset* ds, const char* path) {
  if (require(ds && path, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { anovanet::save_dataset_csv_file(ds->ds, path); });
}

anv_status anv_dataset_save_bin(const anv_dataset* ds, const char* path) {
  if (require(ds && path, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { anovanet::save_dataset_bin_file(ds->ds, path); });
}

anv_status anv_dataset_from_arrays(const double* X, const double* y, int64_t n, int32_t d,
                                   anv_dataset** out) {
  if (require(X && y && out && n > 0 && d > 0, "null argument or empty shape") != ANV_OK)
    return ANV_EINVAL;
  return guard([&] {
    anovanet::Dataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    for (int64_t i = 0; i < n; ++i) {
      for (int32_t j = 0; j < d; ++j) ds.X(i, j) = X[i * d + j];
      ds.y(i) = y[i];
    }
    *out = new anv_dataset{std::move(ds)};
  });
}

anv_status anv_dataset_dims(const anv_dataset* ds, int64_t* n, int32_t* d) {
  if (require(ds != nullptr, "null dataset") != ANV_OK) return ANV_EINVAL;
  if (n) *n = ds->ds.n();
  if (d) *d = ds->ds.d();
  return ANV_OK;
}

anv_status anv_dataset_row(const anv_dataset* ds, int64_t i, double* x, double* y) {
  if (require(ds != nullptr, "null dataset") != ANV_OK) return ANV_EINVAL;
  if (require(i >= 0 && i < ds->ds.n(), "row index out of range") != ANV_OK) return ANV_EINVAL;
  if (x)
    for (int j = 0; j < ds->ds.d(); ++j) x[j] = ds->ds.X(i, j);
  if (y) *y = ds->ds.y(i);
  return ANV_OK;
}

anv_status anv_dataset_truth(const anv_dataset* ds, anv_model** out) {
  if (require(ds && out, "null argument") != ANV_OK) return ANV_EINVAL;
  if (require(ds->ds.truth != nullptr, "dataset carries no ground truth") != ANV_OK)
    return ANV_EINVAL;
  return guard([&] { *out = new anv_model{*ds->ds.truth}; });
}

anv_status anv_dataset_split(const anv_dataset* ds, anv_dataset** first, anv_dataset** second) {
  if (require(ds && first && second, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    auto [a, b] = anovanet::split_dataset(ds->ds);
    *first = new anv_dataset{std::move(a)};
    *second = new anv_dataset{std::move(b)};
  });
}

void anv_dataset_free(anv_dataset* ds) { delete ds; }

/* ---- models ------------------------------------------------------------- */

anv_status anv_model_load(const char* path, anv_model** out) {
  if (require(path && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_model{anovanet::load_model_file(path)}; });
}

anv_status anv_model_save(const anv_model* m, const char* path) {
  if (require(m && path, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { anovanet::save_model_file(m->m, path); });
}

anv_status anv_model_eval(const anv_model* m, const double* x, int32_t d, double* out) {
  if (require(m && x && out, "null argument") != ANV_OK) return ANV_EINVAL;
  if (require(d == m->m.d, "evaluation point dimension mismatch") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = m->m.eval(x); });
}

anv_status anv_model_project(const anv_model* m, anv_model** projected, char** report_json) {
  if (require(m && projected, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::Quad1D rule =
        anovanet::Quad1D::gauss_legendre(anovanet::kDefaultGaussOrder);
    auto [model, report] = anovanet::anova_project(m->m, rule);
    *projected = new anv_model{std::move(model)};
    if (report_json) *report_json = alloc_string(anovanet::anova_report_json(report));
  });
}

anv_status anv_model_mc_l2(const anv_model* a, const anv_model* b, int64_t n_mc, uint64_t seed,
                           double* estimate, double* std_error) {
  if (require(a && b && estimate, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::McError err = anovanet::mc_l2_error(a->m, b->m, n_mc, seed);
    *estimate = err.estimate;
    if (std_error) *std_error = err.std_error;
  });
}

anv_status anv_model_describe(const anv_model* m, char** json) {
  if (require(m && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *json = alloc_string(anovanet::model_describe_json(m->m)); });
}

void anv_model_free(anv_model* m) { delete m; }

/* ---- hyperparameter plans ----------------------------------------------- */

anv_status anv_plan_lowdim(int64_t n, int32_t d, double beta1, double beta2, double B,
                           anv_plan** out) {
  if (require(out != nullptr, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_plan{anovanet::plan_lowdim(n, d, beta1, beta2, B)}; });
}

anv_status anv_plan_highdim(int64_t n, int32_t d, double beta1, double beta2, double sigma_hat,
                            double C3, double C4, double c1, double c2, double B,
                            int32_t erm_free, anv_plan** out) {
  if (require(out != nullptr, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    anovanet::PlanConstants constants;
    constants.C3 = C3;
    constants.C4 = C4;
    constants.c1 = c1;
    constants.c2 = c2;
    *out = new anv_plan{
        anovanet::plan_highdim(n, d, beta1, beta2, sigma_hat, constants, B, erm_free != 0)};
  });
}

anv_status anv_plan_from_config(const char* config_text, int64_t n, int32_t d, anv_plan** out) {
  if (require(config_text && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::Config cfg = anovanet::Config::parse_text(config_text);
    cfg.require_known(anovanet::plan_config_keys());
    *out = new anv_plan{anovanet::plan_from_config(cfg, n, d)};
  });
}

anv_status anv_plan_describe(const anv_plan* p, char** json) {
  if (require(p && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *json = alloc_string(anovanet::plan_describe_json(p->p)); });
}

void anv_plan_free(anv_plan* p) { delete p; }

/* ---- fitting ------------------------------------------------------------ */

void anv_opt_default(anv_opt* opt) {
  if (!opt) return;
  const anovanet::OptConfig defaults;
  opt->steps = defaults.steps;
  opt->restarts = defaults.restarts;
  opt->lr = defaults.lr;
  opt->cosine_decay = defaults.cosine_decay ? 1 : 0;
  opt->threads = defaults.threads;
  opt->seed = defaults.seed;
  opt->eps_norm = defaults.eps_norm;
}

anv_status anv_fit_erm(const anv_dataset* ds, const anv_plan* plan, const int32_t* uni_keys,
                       int32_t n_uni, const int32_t* bi_pairs, int32_t n_bi, const anv_opt* opt,
                       anv_fit** out) {
  if (require(ds && plan && out, "null argument") != ANV_OK) return ANV_EINVAL;
  if (require(n_uni >= 0 && n_bi >= 0, "negative key count") != ANV_OK) return ANV_EINVAL;
  if (require((n_uni == 0 || uni_keys) && (n_bi == 0 || bi_pairs), "null key array") != ANV_OK)
    return ANV_EINVAL;
  return guard([&] {
    std::vector<anovanet::ComponentKey> keys;
    for (int32_t i = 0; i < n_uni; ++i)
      keys.push_back(anovanet::ComponentKey::uni(uni_keys[i]));
    for (int32_t i = 0; i < n_bi; ++i)
      keys.push_back(anovanet::ComponentKey::bi(bi_pairs[2 * i], bi_pairs[2 * i + 1]));
    *out = new anv_fit{anovanet::fit_erm(ds->ds, plan->p, keys, to_opt(opt))};
  });
}

anv_status anv_fit_penalized(const anv_dataset* ds, const anv_plan* plan, const anv_opt* opt,
                             anv_fit** out) {
  if (require(ds && plan && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_fit{anovanet::fit_penalized(ds->ds, plan->p, to_opt(opt))}; });
}

anv_status anv_fit_model(const anv_fit* fit, anv_model** out) {
  if (require(fit && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_model{fit->fit.model}; });
}

anv_status anv_fit_summary(const anv_fit* fit, int32_t deterministic, char** json) {
  if (require(fit && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard(
      [&] { *json = alloc_string(anovanet::fit_summary_json(fit->fit, deterministic != 0)); });
}

void anv_fit_free(anv_fit* fit) { delete fit; }

anv_status anv_sigma_hat(const anv_dataset* ds, double* out) {
  if (require(ds && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = anovanet::sigma_hat_pilot(ds->ds); });
}

/* ---- screening pipeline -------------------------------------------------- */

anv_status anv_pipeline_run(const anv_dataset* ds, const anv_plan* plan, const anv_opt* opt,
                            anv_pipeline_result** out) {
  if (require(ds && plan && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard(
      [&] { *out = new anv_pipeline_result{anovanet::run_pipeline(ds->ds, plan->p, to_opt(opt))}; });
}

anv_status anv_pipeline_record(const anv_pipeline_result* result, int32_t deterministic,
                               char** json) {
  if (require(result && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard(
      [&] { *json = alloc_string(anovanet::pipeline_record(result->r, deterministic != 0)); });
}

anv_status anv_pipeline_final_model(const anv_pipeline_result* result, anv_model** out) {
  if (require(result && out, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] { *out = new anv_model{result->r.final_fit.model}; });
}

void anv_pipeline_free(anv_pipeline_result* result) { delete result; }

/* ---- minimax lower-bound toolkit ----------------------------------------- */

anv_status anv_lowerbound_report(const char* config_text, char** json) {
  if (require(config_text && json, "null argument") != ANV_OK) return ANV_EINVAL;
  return guard([&] {
    const anovanet::Config cfg = anovanet::Config::parse_text(config_text);
    *json = alloc_string(anovanet::lowerbound_report_json(cfg));
  });
}

}  // extern "C"
