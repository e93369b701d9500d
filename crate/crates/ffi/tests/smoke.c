#include <math.h>
#include <stdio.h>

#include "ghostsim.h"

#define CHECK(call)                                                        \
    do {                                                                   \
        GsStatus s_ = (call);                                              \
        if (s_ != GS_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_,              \
                    gs_last_error_message());                              \
            return 1;                                                      \
        }                                                                  \
    } while (0)

int main(void) {
    GsImage *obj = NULL, *recon = NULL;
    GsSpeckleSet *set = NULL;
    GsGroupFrame *gf = NULL;
    uint64_t m = 0;
    double psnr = 0, ssim = 0;

    CHECK(gs_max_samples(250.0, 37.5, 1.5, &m));
    if (m != 10) return 2;

    CHECK(gs_phantom_digit(7, 32, &obj));
    CHECK(gs_speckle_set_generate(1, 2048, 32, 32, GS_DIST_UNIFORM01, &set));
    CHECK(gs_group_frame_simulate(obj, set, &gf));
    CHECK(gs_gi_from_gf(gf, &recon));
    CHECK(gs_quality(obj, recon, &psnr, &ssim));
    if (!(ssim > 0.0 && ssim < 1.0) || !isfinite(psnr)) return 3;

    if (gs_image_rotate(NULL, 1.0, &recon) != GS_STATUS_NULL_POINTER) return 4;
    if (gs_last_error_message() == NULL) return 5;

    printf("ssim=%.4f psnr_db=%.2f\n", ssim, psnr);
    gs_image_free(recon);
    gs_group_frame_free(gf);
    gs_speckle_set_free(set);
    gs_image_free(obj);
    return 0;
}
