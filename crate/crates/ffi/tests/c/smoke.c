#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sgflow.h"

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  SgflowAsymptoticParams params = sgflow_asymptotic_params_default();
  double limit = 0.0;
  CHECK(sgflow_sgf_correction_limit(&params, &limit) == SGFLOW_STATUS_OK);
  CHECK(fabs(limit - 0.02625) < 1e-16);
  CHECK(sgflow_last_error_message() == NULL);

  params.alpha = 1.0;
  CHECK(sgflow_gf_risk_limit(&params, &limit) == SGFLOW_STATUS_THRESHOLD_DIVERGENCE);
  CHECK(sgflow_last_error_message() != NULL);
  CHECK(strstr(sgflow_last_error_message(), "threshold") != NULL);
  CHECK(sgflow_gf_risk_limit(NULL, &limit) == SGFLOW_STATUS_NULL_POINTER);

  SgflowLinearSde *sde = NULL;
  CHECK(sgflow_linear_sde_constant(1.0, 1.0, 1.0, 0.0, 0.01, &sde) == SGFLOW_STATUS_OK);
  double mean = 0.0, var = 0.0;
  CHECK(sgflow_linear_sde_exact(sde, 2.0, &mean, &var) == SGFLOW_STATUS_OK);
  CHECK(fabs(mean - (1.0 - exp(-2.0))) < 1e-12);
  CHECK(fabs(var - 0.005 * (1.0 - exp(-4.0))) < 1e-12);
  sgflow_linear_sde_free(sde);

  SgflowInstance *inst = NULL;
  CHECK(sgflow_instance_new(20, 40, 10, 0.5, 1, &inst) == SGFLOW_STATUS_OK);
  size_t n = 0, d = 0, p = 0;
  CHECK(sgflow_instance_dims(inst, &n, &d, &p) == SGFLOW_STATUS_OK);
  CHECK(n == 20 && d == 40 && p == 10);
  double risk = 0.0;
  CHECK(sgflow_instance_gf_risk(inst, 1.0, &risk) == SGFLOW_STATUS_OK);
  CHECK(isfinite(risk) && risk > 0.0);
  sgflow_instance_free(inst);

  printf("ok %s\n", sgflow_version());
  return 0;
}
