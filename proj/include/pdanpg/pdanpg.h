/*
 * Copyright 2026 The pdanpg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PDANPG_PDANPG_H
#define PDANPG_PDANPG_H

/*
 * C interface to the pdanpg library.
 *
 * Every function returns a pdanpg_status. On failure the message of the most
 * recent error on the calling thread is available from pdanpg_last_error().
 * Strings returned through char** out-parameters are heap allocated and must
 * be released with pdanpg_string_free(). Documents are JSON.
 */

#include <stddef.h>

#if defined(_WIN32)
#define PDANPG_API __declspec(dllexport)
#else
#define PDANPG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pdanpg_status {
    PDANPG_OK = 0,
    PDANPG_ERR_INVALID_ARGUMENT = 1,
    PDANPG_ERR_CONFIG = 2,
    PDANPG_ERR_IO = 3,
    PDANPG_ERR_INFEASIBLE = 4,
    PDANPG_ERR_NUMERIC = 5,
    PDANPG_ERR_INTERNAL = 6
} pdanpg_status;

typedef struct pdanpg_env pdanpg_env;
typedef struct pdanpg_policy pdanpg_policy;

PDANPG_API const char* pdanpg_version(void);
/* Message of the last failure on this thread; empty string if none. */
PDANPG_API const char* pdanpg_last_error(void);
PDANPG_API void pdanpg_string_free(char* s);

/* Environments: a configuration document plus the instance it builds. */
PDANPG_API pdanpg_status pdanpg_env_from_json(const char* config_json, pdanpg_env** out);
PDANPG_API pdanpg_status pdanpg_env_load(const char* path, pdanpg_env** out);
PDANPG_API pdanpg_status pdanpg_env_save(const pdanpg_env* env, const char* path);
PDANPG_API pdanpg_status pdanpg_env_config_json(const pdanpg_env* env, char** out);
PDANPG_API pdanpg_status pdanpg_env_dims(const pdanpg_env* env, size_t* states, size_t* actions, double* gamma);
/* {"states","actions","gamma","max_jc","c_slater"}; c_slater is null when no policy is strictly feasible. */
PDANPG_API pdanpg_status pdanpg_env_summary_json(const pdanpg_env* env, char** out);
PDANPG_API void pdanpg_env_free(pdanpg_env* env);

/* {"j_star","lambda_star","c_slater","max_jc","lambda_upper","iterations"}. */
PDANPG_API pdanpg_status pdanpg_oracle_json(const pdanpg_env* env, char** out);

/* policy_json may be NULL for the default random features seeded by the env seed. */
PDANPG_API pdanpg_status pdanpg_policy_create(const pdanpg_env* env, const char* policy_json, pdanpg_policy** out);
PDANPG_API pdanpg_status pdanpg_policy_dim(const pdanpg_policy* policy, size_t* dim);
/* Row-major S x A table; len must equal S * A. */
PDANPG_API pdanpg_status pdanpg_policy_probabilities(const pdanpg_policy* policy, double* out, size_t len);
PDANPG_API pdanpg_status pdanpg_policy_get_theta(const pdanpg_policy* policy, double* out, size_t len);
PDANPG_API pdanpg_status pdanpg_policy_set_theta(pdanpg_policy* policy, const double* theta, size_t len);
PDANPG_API void pdanpg_policy_free(pdanpg_policy* policy);

/*
 * Runs the estimator and oracle checks at the policy's theta. options_json may
 * be NULL. *all_pass is set to 1 only when every check passed.
 */
PDANPG_API pdanpg_status pdanpg_diagnose_json(const pdanpg_env* env, const pdanpg_policy* policy,
                                              const char* options_json, int* all_pass, char** report);

/*
 * Runs PD-ANPG from a request or solve manifest. When out_dir is not NULL,
 * trace.csv and manifest.json are written there.
 */
PDANPG_API pdanpg_status pdanpg_solve(const char* request_json, const char* out_dir, char** summary);

/* Paired benchmark; writes bench.csv and manifest.json when out_dir is not NULL. */
PDANPG_API pdanpg_status pdanpg_bench(const char* request_json, const char* out_dir, char** table_csv);

#ifdef __cplusplus
}
#endif

#endif /* PDANPG_PDANPG_H */
