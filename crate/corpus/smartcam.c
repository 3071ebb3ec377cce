/* Low-level kernels of a smart camera pipeline on 16x16 grey images.
 *
 * Images are stored row-major in flat arrays of 256 pixels. Loops whose
 * trip count depends on the data are given counts in smartcam.profile.toml.
 */

void add_images(int a[256], int b[256], int out[256])
{
    int i;

    for (i = 0; i < 256; i++)
        out[i] = a[i] + b[i];
}

void sub_images(int a[256], int b[256], int out[256])
{
    int i;

    for (i = 0; i < 256; i++)
        out[i] = a[i] - b[i];
}

void absolute(int a[256], int out[256])
{
    int i;
    int v;

    for (i = 0; i < 256; i++) {
        v = a[i];
        if (v < 0)
            v = -v;
        out[i] = v;
    }
}

void threshold(int a[256], int out[256], int t)
{
    int i;

    for (i = 0; i < 256; i++) {
        if (a[i] > t)
            out[i] = 255;
        else
            out[i] = 0;
    }
}

/* The bin index comes from the pixel value, so iterations may collide. */
void get_histogram(int img[256], int histo[64])
{
    int i;

    for (i = 0; i < 64; i++)
        histo[i] = 0;
    for (i = 0; i < 256; i++)
        histo[img[i] >> 2] = histo[img[i] >> 2] + 1;
}

/* Smallest level whose cumulative count reaches half the pixels. */
int histo_threshold(int histo[64])
{
    int acc;
    int k;

    acc = 0;
    k = 0;
    while (acc < 128) {
        acc += histo[k];
        k++;
    }
    return k << 2;
}

/* Binary erosion with a cross element, borders left untouched. */
void erode(int in[16][16], int out[16][16])
{
    int r;
    int c;

    for (r = 1; r < 15; r++)
        for (c = 1; c < 15; c++)
            out[r][c] = in[r][c] & in[r - 1][c] & in[r + 1][c] & in[r][c - 1] & in[r][c + 1];
}

void change_background(int img[256], int bg[256], int mask[256], int out[256])
{
    int i;

    for (i = 0; i < 256; i++) {
        if (mask[i] != 0)
            out[i] = img[i];
        else
            out[i] = (bg[i] * 3 + img[i]) >> 2;
    }
}

/* Centre of mass of a 16x16 window, packed as (x << 8) | y. */
int test_gravity(int img[16][16])
{
    int r;
    int c;
    int m;
    int sx;
    int sy;

    m = 0;
    sx = 0;
    sy = 0;
    for (r = 0; r < 16; r++)
        for (c = 0; c < 16; c++) {
            m = m + img[r][c];
            sx = sx + img[r][c] * c;
            sy = sy + img[r][c] * r;
        }
    if (m == 0)
        return 0;
    return ((sx / m) << 8) | (sy / m);
}

/* Per-pixel transfer curve picked by a mode switch. */
void remap(int a[256], int out[256], int mode)
{
    int i;
    int v;

    for (i = 0; i < 256; i++) {
        v = a[i];
        switch (mode) {
        case 0:
            out[i] = v;
            break;
        case 1:
            out[i] = 255 - v;
            break;
        case 2:
            out[i] = (v * v) >> 8;
            break;
        default:
            out[i] = v >> 1;
        }
    }
}

/* Halves the gain until the brightest pixel fits in eight bits. */
int fit_gain(int peak, int gain)
{
    do {
        gain = gain >> 1;
    } while (peak * gain > 255);
    return gain;
}

void motion_mask(int cur[256], int prev[256], int diff[256], int mag[256], int mask[256], int t)
{
    sub_images(cur, prev, diff);
    absolute(diff, mag);
    threshold(mag, mask, t);
}
