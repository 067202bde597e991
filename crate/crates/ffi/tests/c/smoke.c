#include <stdio.h>
#include <string.h>

#include "chorc.h"

#define CHECK(call, want)                                                    \
  do {                                                                       \
    ChorcStatus s_ = (call);                                                 \
    if (s_ != (want)) {                                                      \
      const char *e_ = chorc_last_error();                                   \
      fprintf(stderr, "%s: status %d (%s)\n", #call, s_, e_ ? e_ : "none");  \
      return 1;                                                              \
    }                                                                        \
  } while (0)

int main(void) {
  ChorcChoreography *c = NULL;
  ChorcState *st = NULL;
  ChorcState *end = NULL;
  ChorcNetwork *n = NULL;
  char *trace = NULL;
  char *text = NULL;

  CHECK(chorc_choreography_parse("{p.x -> q.u, q.x -> p.v}", &c), CHORC_STATUS_OK);
  CHECK(chorc_state_parse("p.x = 1\nq.x = 2", &st), CHORC_STATUS_OK);
  CHECK(chorc_run(c, st, CHORC_SEM_CONC, 3, 100, &trace, &end), CHORC_STATUS_OK);
  if (strstr(trace, "\"terminated\"") == NULL) return 1;
  CHECK(chorc_state_print(end, &text), CHORC_STATUS_OK);
  if (strstr(text, "q.u = 1") == NULL || strstr(text, "p.v = 2") == NULL) return 1;
  chorc_string_free(text);
  chorc_string_free(trace);

  CHECK(chorc_choreography_project(c, &n), CHORC_STATUS_OK);
  CHECK(chorc_network_print(n, &text), CHORC_STATUS_OK);
  printf("%s\n", text);
  chorc_string_free(text);

  ChorcChoreography *bad = NULL;
  CHECK(chorc_choreography_parse("p.x ->", &bad), CHORC_STATUS_PARSE_ERROR);
  if (bad != NULL || chorc_last_error() == NULL) return 1;

  chorc_network_free(n);
  chorc_state_free(end);
  chorc_state_free(st);
  chorc_choreography_free(c);
  return 0;
}
