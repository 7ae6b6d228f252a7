#include <stdio.h>
#include "ifdefense.h"

int main(void) {
    IfdField *field = NULL;
    IfdCloud *cloud = NULL;
    if (ifd_field_fixture("torus", &field) != IFD_STATUS_OK) return 1;
    if (ifd_remesh(field, 32, 0.2, 256, 7, &cloud) != IFD_STATUS_OK) return 2;
    if (ifd_cloud_len(cloud) != 256) return 3;
    double hd = -1.0;
    if (ifd_hausdorff(cloud, cloud, &hd) != IFD_STATUS_OK || hd != 0.0) return 4;
    if (ifd_field_fixture("nope", &field) != IFD_STATUS_INVALID_ARGUMENT) return 5;
    printf("%s\n", ifd_last_error());
    ifd_cloud_free(cloud);
    ifd_field_free(field);
    return 0;
}
