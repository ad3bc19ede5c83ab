/* Compiled as plain C: guards the shared-library header against C++-isms. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "flowdepth.h"

static int failures = 0;

static void expect(int ok, const char* what) {
    printf("[%s] %s\n", ok ? "ok" : "FAILED", what);
    if (!ok)
        ++failures;
}

int main(void) {
    fd_pose identity = fd_pose_identity();
    expect(identity.qw == 1.0 && identity.tx == 0.0, "identity pose");

    fd_pose t = identity;
    t.tx = 1.0;
    t.ty = 2.0;
    t.tz = 3.0;
    fd_pose inverse;
    fd_pose round;
    expect(fd_pose_invert(t, &inverse) == FD_OK, "pose invert");
    expect(fd_pose_compose(t, inverse, &round) == FD_OK, "pose compose");
    expect(fabs(round.tx) < 1e-12 && fabs(fabs(round.qw) - 1.0) < 1e-12,
           "compose with inverse is the identity");

    fd_intrinsics K = {100.0, 100.0, 50.0, 50.0, 101, 101};
    double point[3];
    expect(fd_backproject(150.0, 50.0, 2.0, K, point) == FD_OK, "backproject");
    expect(fabs(point[0] - 2.0) < 1e-12, "backproject value");
    expect(fd_backproject(10.0, 10.0, 0.0, K, point) == FD_ERROR_DOMAIN,
           "degenerate depth rejected");
    expect(strlen(fd_last_error()) > 0, "error message populated");

    double du[64], dv[64];
    for (int i = 0; i < 64; ++i) {
        du[i] = 3.0;
        dv[i] = 4.0;
    }
    fd_flow* a = NULL;
    fd_flow* b = NULL;
    expect(fd_flow_create(8, 8, du, dv, NULL, &a) == FD_OK, "flow create");
    expect(fd_flow_create(8, 8, NULL, NULL, NULL, &b) == FD_OK, "zero flow create");
    double loss = 0.0;
    expect(fd_flow_loss(a, b, &loss) == FD_OK && fabs(loss - 5.0) < 1e-12,
           "flow loss of a (3,4) offset is 5");
    fd_flow_destroy(a);
    fd_flow_destroy(b);

    fd_loss_config cfg = fd_loss_config_default();
    double depth_loss, pose_loss, optical_loss;
    expect(fd_combined_losses(0.5, 1.0, cfg, &depth_loss, &pose_loss, &optical_loss) == FD_OK &&
               fabs(depth_loss - 0.6) < 1e-12 && fabs(optical_loss - 1.0) < 1e-12,
           "combined losses");

    if (failures) {
        printf("%d C API check(s) failed\n", failures);
        return 1;
    }
    printf("all C API checks passed\n");
    return 0;
}
