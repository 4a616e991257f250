#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "ceph.h"

static char *read_file(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    fseek(f, 0, SEEK_SET);
    char *buf = malloc((size_t)n + 1);
    if (fread(buf, 1, (size_t)n, f) != (size_t)n) {
        fclose(f);
        free(buf);
        return NULL;
    }
    buf[n] = '\0';
    fclose(f);
    return buf;
}

#define CHECK(cond)                                                  \
    do {                                                             \
        if (!(cond)) {                                               \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                \
        }                                                            \
    } while (0)

int main(int argc, char **argv) {
    CHECK(argc == 2);
    char *json = read_file(argv[1]);
    CHECK(json != NULL);

    CephAnalysis *a = NULL;
    CHECK(ceph_analysis_from_json(json, &a) == CEPH_STATUS_OK);
    CHECK(a != NULL);

    double anb = 0.0;
    CHECK(ceph_analysis_measurement(a, "ANB", &anb) == CEPH_STATUS_OK);
    CHECK(fabs(anb - 6.14) < 0.005);

    CephSagittalClass cls = CEPH_SAGITTAL_CLASS_UNAVAILABLE;
    CHECK(ceph_analysis_sagittal_class(a, &cls) == CEPH_STATUS_OK);
    CHECK(cls == CEPH_SAGITTAL_CLASS_CLASS_II);

    char *report = NULL;
    CHECK(ceph_analysis_report(a, "en", "text", &report) == CEPH_STATUS_OK);
    CHECK(strstr(report, "6.14") != NULL);
    ceph_string_free(report);

    char *prompt = NULL;
    CHECK(ceph_analysis_prompt(a, "en", 7, &prompt) == CEPH_STATUS_OK);
    CHECK(strstr(prompt, "ANB angle: 6.14") != NULL);
    printf("%s\n", prompt);
    ceph_string_free(prompt);

    CHECK(ceph_analysis_measurement(a, "NOPE", &anb) == CEPH_STATUS_INVALID_ARGUMENT);
    CHECK(ceph_last_error_message() != NULL);
    ceph_analysis_free(a);

    CephAnalysis *b = NULL;
    CHECK(ceph_analysis_from_json("{", &b) == CEPH_STATUS_PARSE_ERROR);
    CHECK(b == NULL);

    free(json);
    return 0;
}
