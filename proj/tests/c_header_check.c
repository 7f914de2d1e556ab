#include <stdio.h>

#include "msheston/msheston.h"

int main(void) {
  msh_heston_params p = {1.0, 0.24, 0.39, -0.2122857308985, 0.24, 0.05};
  msh_price out;
  msh_status st = msh_price_option(100.0, 100.0, 1.0, MSH_CALL, &p, NULL, NULL, &out);
  if (st != MSH_OK) {
    fprintf(stderr, "%s: %s\n", msh_status_name(st), msh_last_error());
    return 1;
  }
  printf("%.10f\n", out.total);
  return out.total > 0.0 ? 0 : 1;
}
