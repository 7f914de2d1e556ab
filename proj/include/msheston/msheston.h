/* C interface to the multi-scale Heston pricing and calibration library. */
#ifndef MSHESTON_MSHESTON_H
#define MSHESTON_MSHESTON_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MSH_API __declspec(dllexport)
#else
#define MSH_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msh_status {
  MSH_OK = 0,
  MSH_INVALID_ARGUMENT,
  MSH_NEAR_SINGULAR,
  MSH_BRANCH_CROSSING,
  MSH_CONTOUR_VIOLATION,
  MSH_NON_CONVERGENCE,
  MSH_NOT_CENTERED,
  MSH_NOT_POSITIVE_DEFINITE,
  MSH_STEP_EXPLOSION,
  MSH_OUT_OF_BAND,
  MSH_NON_FINITE,
  MSH_PARSE_ERROR,
  MSH_EMPTY_AFTER_FILTER,
  MSH_IO_ERROR,
  MSH_INTERNAL_ERROR
} msh_status;

/* Message of the last failed call on this thread; empty after a success. */
MSH_API const char* msh_last_error(void);
MSH_API const char* msh_status_name(msh_status status);
MSH_API const char* msh_version(void);

typedef struct msh_heston_params {
  double kappa, theta, sigma, rho, z, r;
} msh_heston_params;

typedef struct msh_group_params {
  double v1e, v2e, v3e, v4e;
} msh_group_params;

typedef struct msh_quadrature_spec {
  double abs_tol;
  double rel_tol;
  int max_subdivisions;
  double contour_k_i;
  double put_contour_k_i;
} msh_quadrature_spec;

MSH_API void msh_quadrature_spec_default(msh_quadrature_spec* out);

/* ---- pricing ---- */

enum { MSH_CALL = 0, MSH_PUT = 1 };
enum { MSH_WARNING_NEGATIVE_PRICE = 1 };

typedef struct msh_price {
  double total;
  double heston;
  double correction;
  double p00, p10, p11;
  double quadrature_error;
  unsigned warnings;
} msh_price;

/* `v` and `spec` may be NULL (zero correction, default quadrature). */
MSH_API msh_status msh_price_option(double spot, double strike, double tau, int payoff, const msh_heston_params* p,
                                    const msh_group_params* v, const msh_quadrature_spec* spec, msh_price* out);

/* All strikes of one expiry; `out` holds n entries. */
MSH_API msh_status msh_price_slice(double spot, double tau, const double* strikes, size_t n, int payoff,
                                   const msh_heston_params* p, const msh_group_params* v,
                                   const msh_quadrature_spec* spec, msh_price* out);

MSH_API double msh_bs_call(double spot, double strike, double expiry, double vol, double rate, double dividend);
MSH_API msh_status msh_implied_vol(double price, double spot, double strike, double expiry, double rate,
                                   double dividend, double* out);

/* ---- full model and group parameters ---- */

enum { MSH_F_EXP_OU = 0, MSH_F_UNIT = 1 };

typedef struct msh_full_model {
  msh_heston_params heston; /* heston.rho is the raw rho_xz */
  double epsilon, m, nu, rho_xy, rho_yz, y0;
  int f_kind;
} msh_full_model;

typedef struct msh_group_result {
  double rho_effective;
  msh_group_params v;
  double unscaled[4];
  double mean_f;
  double mean_f2;
} msh_group_result;

MSH_API msh_status msh_group_params_compute(const msh_full_model* fm, msh_group_result* out);

/* ---- Monte Carlo ---- */

enum { MSH_FAST_EXACT_OU = 0, MSH_FAST_EULER = 1 };

typedef struct msh_sim_config {
  uint64_t n_paths;
  double dt;
  uint64_t seed;
  int antithetic;
  int fast_factor_step;
  double max_truncation_fraction;
  unsigned threads;
} msh_sim_config;

typedef struct msh_mc_estimate {
  double price;
  double std_error;
  int std_error_defined;
  uint64_t n_paths;
  uint64_t n_steps;
  double truncation_fraction;
  int truncation_exceeded;
} msh_mc_estimate;

MSH_API void msh_sim_config_default(msh_sim_config* out);
MSH_API msh_status msh_mc_price_call(const msh_full_model* fm, double spot, double strike, double expiry,
                                     const msh_sim_config* cfg, msh_mc_estimate* out);

/* ---- configuration ---- */

typedef struct msh_config msh_config;

/* `json_text` NULL gives the defaults. */
MSH_API msh_status msh_config_parse(const char* json_text, msh_config** out);
MSH_API msh_status msh_config_load(const char* path, msh_config** out);
MSH_API void msh_config_free(msh_config* cfg);
MSH_API void msh_config_heston(const msh_config* cfg, msh_heston_params* out);
MSH_API void msh_config_group(const msh_config* cfg, msh_group_params* out);
MSH_API void msh_config_quadrature(const msh_config* cfg, msh_quadrature_spec* out);
MSH_API void msh_config_full_model(const msh_config* cfg, msh_full_model* out);
MSH_API void msh_config_simulation(const msh_config* cfg, msh_sim_config* out);
MSH_API void msh_config_set_heston(msh_config* cfg, const msh_heston_params* p);
MSH_API void msh_config_set_group(msh_config* cfg, const msh_group_params* v);
MSH_API void msh_config_set_full_model(msh_config* cfg, const msh_full_model* fm);
MSH_API void msh_config_set_simulation(msh_config* cfg, const msh_sim_config* sim);
MSH_API void msh_config_set_rate_override(msh_config* cfg, double rate);
MSH_API void msh_config_set_dividend_override(msh_config* cfg, double dividend);
MSH_API void msh_config_set_calibration_start(msh_config* cfg, const msh_heston_params* start);
MSH_API void msh_config_set_multi_start(msh_config* cfg, int count);
/* Canonical JSON; owned by `cfg`, valid until the next call on it. */
MSH_API const char* msh_config_json(msh_config* cfg);

/* ---- surfaces ---- */

enum { MSH_SOURCE_MARKET = 0, MSH_SOURCE_HESTON = 1, MSH_SOURCE_MULTISCALE = 2 };

typedef struct msh_vol_point {
  double expiry;
  double strike;
  double implied_vol;
  int source;
} msh_vol_point;

typedef struct msh_surface msh_surface;

/* Grid of implied vols; expiry i owns strike_counts[i] consecutive entries
   of `strikes`. Points that fail are counted in msh_surface_error_count. */
MSH_API msh_status msh_surface_model(double spot, const double* expiries, size_t n_expiries,
                                     const size_t* strike_counts, const double* strikes, const msh_heston_params* p,
                                     const msh_group_params* v, const msh_quadrature_spec* spec, double dividend,
                                     msh_surface** out);
MSH_API msh_status msh_surface_read_csv(const char* path, msh_surface** out);
/* `path` "-" writes to standard output. */
MSH_API msh_status msh_surface_write_csv(const msh_surface* s, const char* path);
MSH_API size_t msh_surface_size(const msh_surface* s);
MSH_API msh_status msh_surface_point(const msh_surface* s, size_t index, msh_vol_point* out);
MSH_API size_t msh_surface_error_count(const msh_surface* s);
/* Message of failing point `index`, or NULL. */
MSH_API const char* msh_surface_error(const msh_surface* s, size_t index);
MSH_API size_t msh_surface_arbitrage_warnings(const msh_surface* s);
MSH_API void msh_surface_free(msh_surface* s);

/* ---- option chains ---- */

typedef struct msh_chain_report {
  uint64_t total_rows;
  uint64_t passed;
  uint64_t rejected_option_type;
  uint64_t rejected_maturity;
  uint64_t rejected_open_interest;
  uint64_t rejected_duplicate;
  uint64_t rejected_no_implied_vol;
} msh_chain_report;

/* Filters and overrides come from `cfg` (NULL for defaults). */
MSH_API msh_status msh_chain_load(const char* path, const msh_config* cfg, msh_surface** out,
                                  msh_chain_report* report);

/* ---- calibration ---- */

typedef struct msh_calibration msh_calibration;

/* Heston fit from the configured start, then the multi-scale fit from it. */
MSH_API msh_status msh_calibrate(const msh_surface* market, const msh_config* cfg, msh_calibration** out);
MSH_API void msh_calibration_heston(const msh_calibration* c, msh_heston_params* out, double* objective);
MSH_API void msh_calibration_multiscale(const msh_calibration* c, msh_heston_params* theta, msh_group_params* v,
                                        double* objective);
/* Both fits, per-expiry residuals with ratios, data and config hashes.
   Owned by `c`. */
MSH_API const char* msh_calibration_json(const msh_calibration* c);
MSH_API void msh_calibration_free(msh_calibration* c);

#ifdef __cplusplus
}
#endif

#endif
