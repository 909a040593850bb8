// nn2flow 0.1.0: test harness
// model: fixture_a
// model hash: f317f36aa33b85cb964e6c101ed7110109eadafee4d5f5ae79307669211c145f

#include <stdint.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

int predict(const int32_t *x);
#ifdef NN2FLOW_TRACE_EXIT
extern int nn2flow_last_exit;
#endif

#define DIM 2
static const long long LO[DIM] = {0, 0};
static const long long HI[DIM] = {7, 7};

static int fail(long line, const char *why)
{
    fprintf(stderr, "line %ld: %s\n", line, why);
    return 1;
}

/* Parses up to DIM + 1 comma-separated integers; returns the field count or -1. */
static int parse_row(char *p, long long *v)
{
    int n = 0;
    for (;;) {
        char *end;
        while (*p == ' ' || *p == '\t') p++;
        if (n == DIM + 1) return -1;
        v[n] = strtoll(p, &end, 10);
        if (end == p) return -1;
        n++;
        p = end;
        while (*p == ' ' || *p == '\t') p++;
        if (*p == ',') { p++; continue; }
        if (*p == '\0' || *p == '\n' || *p == '\r') return n;
        return -1;
    }
}

int main(int argc, char **argv)
{
    char buf[8192];
    long long v[DIM + 1];
    int32_t x[DIM];
    long line = 0;
    int skip = argc > 1 && strcmp(argv[1], "--header") == 0;
    while (fgets(buf, sizeof buf, stdin)) {
        int n, i;
        line++;
        if (skip) { skip = 0; continue; }
        if (buf[strspn(buf, " \t\r\n")] == '\0') continue;
        if (!strchr(buf, '\n') && !feof(stdin)) return fail(line, "line too long");
        n = parse_row(buf, v);
        if (n != DIM && n != DIM + 1) return fail(line, "expected DIM or DIM+1 integer fields");
        for (i = 0; i < DIM; i++) {
            if (v[i] < LO[i] || v[i] > HI[i]) return fail(line, "feature outside the input domain");
            x[i] = (int32_t)v[i];
        }
#ifdef NN2FLOW_TRACE_EXIT
        {
            int c = predict(x);
            printf("%d %d\n", c, nn2flow_last_exit);
        }
#else
        printf("%d\n", predict(x));
#endif
    }
    return 0;
}
