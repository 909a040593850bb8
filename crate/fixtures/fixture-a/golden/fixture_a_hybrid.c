// nn2flow 0.1.0: hybrid program
// model: fixture_a
// model hash: f317f36aa33b85cb964e6c101ed7110109eadafee4d5f5ae79307669211c145f
// plan hash: e1946ee3580deaa46bacdc463fa30222fa7b3c3981ae737b9308809b9531ef6e

#include <stdint.h>

#ifdef NN2FLOW_TRACE_EXIT
int nn2flow_last_exit = -1;
#define NN2FLOW_EXIT(id) (nn2flow_last_exit = (id))
#else
#define NN2FLOW_EXIT(id) ((void)0)
#endif

int predict(const int32_t *x)
{
    int64_t z0[2] = {0}, r0[2] = {0};
    int64_t o[2];
    int c = 0;
    uint32_t t0 = 0;

    NN2FLOW_EXIT(-1);

    // prologue
    z0[0] = 2 * (int64_t)x[0] + 0 * (int64_t)x[1] - 1;
    r0[0] = z0[0] > 0 ? z0[0] : 0;
    if (z0[0] <= 0) t0 |= 0x00000001u;

    // logic flows
    if ((t0 & 0x00000001u) == 0x00000001u) {
        NN2FLOW_EXIT(0);
        return 1;
    }

    // fallback
    z0[1] = 0 * (int64_t)x[0] + 3 * (int64_t)x[1] - 2;
    r0[1] = z0[1] > 0 ? z0[1] : 0;
    o[0] = 1 * r0[0] - 1 * r0[1];
    o[1] = -1 * r0[0] + 1 * r0[1] + 1;
    if (o[1] > o[c]) c = 1;
    return c;
}
