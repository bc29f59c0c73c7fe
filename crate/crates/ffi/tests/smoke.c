#include <stdio.h>
#include <stdlib.h>
#include "dexchange.h"

#define CHECK(cond)                                                      \
  do {                                                                   \
    if (!(cond)) {                                                       \
      const char *e = dx_last_error();                                   \
      fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond, e ? e : ""); \
      return 1;                                                          \
    }                                                                    \
  } while (0)

int main(void) {
  DxInstance *inst = NULL;
  CHECK(dx_instance_example1(257, &inst) == DX_OK);
  CHECK(dx_instance_users(inst) == 3 && dx_instance_packets(inst) == 6);

  int64_t least = 0;
  CHECK(dx_min_sum_rate(inst, NULL, &least) == DX_OK && least == 5);

  double w[3] = {1, 3, 2};
  int64_t rates[3], beta = 0;
  double value = 0;
  CHECK(dx_solve(inst, DX_LINEAR, w, 5, NULL, DX_SFM, rates, &beta, &value) == DX_OK);
  CHECK(rates[0] == 1 && rates[1] == 1 && rates[2] == 3 && value == 10.0);
  CHECK(dx_solve(inst, DX_LINEAR, w, 4, NULL, DX_SFM, rates, NULL, NULL) == DX_INFEASIBLE);
  CHECK(dx_last_error() != NULL);

  int64_t want[3] = {1, 1, 3};
  DxSchedule *sched = NULL;
  size_t attempts = 0;
  CHECK(dx_construct_code(inst, want, 1, 0, 64, &sched, &attempts) == DX_OK);
  bool all = false;
  CHECK(dx_verify(inst, sched, NULL, &all) == DX_OK && all);

  uint32_t packets[6] = {11, 22, 33, 44, 55, 66}, v[5], x[6], out[6];
  CHECK(dx_schedule_len(sched) == 5);
  CHECK(dx_schedule_transmit(sched, packets, v) == DX_OK);
  for (size_t u = 0; u < 3; u++) {
    CHECK(dx_instance_observe(inst, u, packets, x) == DX_OK);
    CHECK(dx_decode(inst, sched, u, x, v, out) == DX_OK);
    for (int k = 0; k < 6; k++) CHECK(out[k] == packets[k]);
  }

  char *json = dx_schedule_to_json(sched);
  DxSchedule *back = NULL;
  CHECK(dx_schedule_from_json(inst, json, &back) == DX_OK);
  CHECK(dx_schedule_len(back) == 5);
  dx_string_free(json);
  dx_schedule_free(back);
  dx_schedule_free(sched);
  dx_instance_free(inst);
  puts("ok");
  return 0;
}
