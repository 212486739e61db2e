#include <stdio.h>
#include <string.h>

#include "creditfair.h"

#define CHECK(cond)                                                    \
    do {                                                               \
        if (!(cond)) {                                                 \
            const char *msg = cf_last_error_message();                 \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,     \
                    msg ? msg : "no error");                           \
            return 1;                                                  \
        }                                                              \
    } while (0)

int main(void) {
    CfInstance *inst = NULL;
    CHECK(cf_instance_builtin("smmf_unfair", &inst) == CF_STATUS_OK);
    CHECK(cf_instance_agents(inst) == 2);
    CHECK(cf_instance_rounds(inst) == 2);

    CfTrace *smmf = NULL;
    CHECK(cf_run(inst, "smmf", &smmf) == CF_STATUS_OK);
    bool refuted = false;
    char *verdict = NULL;
    CHECK(cf_refute(smmf, &refuted, &verdict) == CF_STATUS_OK);
    CHECK(refuted);
    CHECK(strstr(verdict, "\"CF5\"") != NULL);
    cf_string_free(verdict);

    CfTrace *lr = NULL;
    CHECK(cf_run(inst, "lendrecoup", &lr) == CF_STATUS_OK);
    bool passed = false;
    CHECK(cf_audit_explicit(lr, &passed, NULL) == CF_STATUS_OK);
    CHECK(passed);

    CfTrace *bad = NULL;
    CHECK(cf_run(inst, "fifo", &bad) == CF_STATUS_PARSE);
    CHECK(bad == NULL);
    CHECK(cf_last_error_message() != NULL);

    char *solution = NULL;
    CHECK(cf_pswc_solve_json("{\"capacity\":\"3\",\"weights\":[\"1\",\"2\"],"
                             "\"minima\":[\"0\",\"0\"],\"limits\":[null,null]}",
                             &solution) == CF_STATUS_OK);
    CHECK(strstr(solution, "\"allocation\":[\"1\",\"2\"]") != NULL);
    cf_string_free(solution);

    cf_trace_free(lr);
    cf_trace_free(smmf);
    cf_instance_free(inst);
    puts("ok");
    return 0;
}
