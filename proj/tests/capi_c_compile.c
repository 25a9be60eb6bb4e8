/* SPDX-License-Identifier: Apache-2.0
 * Copyright 2026 The skws Authors
 */

#include <skws/skws.h>
#include <stdio.h>

int main(void) {
  skws_model* model = NULL;
  skws_model_info info;
  if (skws_model_create(NULL, 1, &model) != SKWS_OK) {
    fprintf(stderr, "%s\n", skws_last_error());
    return 1;
  }
  if (skws_model_info_get(model, &info) != SKWS_OK) return 1;
  skws_model_free(model);
  printf("d_model=%zu\n", info.d_model);
  return info.d_model == 32 ? 0 : 1;
}
