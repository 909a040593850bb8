// nn2flow 0.1.0: reference program
// model: fixture_a
// model hash: f317f36aa33b85cb964e6c101ed7110109eadafee4d5f5ae79307669211c145f

#include <stdint.h>

int predict(const int32_t *x)
{
    int64_t z0[2] = {0}, r0[2] = {0};
    int64_t o[2];
    int c = 0;

    z0[0] = 2 * (int64_t)x[0] + 0 * (int64_t)x[1] - 1;
    r0[0] = z0[0] > 0 ? z0[0] : 0;
    z0[1] = 0 * (int64_t)x[0] + 3 * (int64_t)x[1] - 2;
    r0[1] = z0[1] > 0 ? z0[1] : 0;
    o[0] = 1 * r0[0] - 1 * r0[1];
    o[1] = -1 * r0[0] + 1 * r0[1] + 1;
    if (o[1] > o[c]) c = 1;
    return c;
}
