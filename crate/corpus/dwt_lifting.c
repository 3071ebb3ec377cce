/* One level of a 5/3-style wavelet analysis on an 8x16 tile.
 *
 * Samples are stored with one element of padding on each side, so sample j
 * of row r lives at x[r][j + 1]. The high band comes from the odd samples
 * corrected by their even neighbours, the low band from the even samples
 * smoothed by their odd neighbours. Both bands read only the input, so the
 * two filters of a pass are independent. The row pass writes its bands
 * interleaved and transposed into y; the column pass does the same from y
 * into z.
 */

void predict_rows(int x[8][18], int y[18][8])
{
    int r;
    int n;

    for (r = 0; r < 8; r++)
        for (n = 0; n < 8; n++)
            y[2 * n + 2][r] = x[r][2 * n + 2] - ((x[r][2 * n + 1] + x[r][2 * n + 3]) >> 1);
}

void update_rows(int x[8][18], int y[18][8])
{
    int r;
    int n;

    for (r = 0; r < 8; r++)
        for (n = 0; n < 8; n++)
            y[2 * n + 1][r] = x[r][2 * n + 1] + ((x[r][2 * n] + x[r][2 * n + 2]) >> 2);
}

void dwt_rows(int x[8][18], int y[18][8])
{
    predict_rows(x, y);
    update_rows(x, y);
}

void predict_cols(int y[18][8], int z[8][18])
{
    int c;
    int n;

    for (c = 0; c < 8; c++)
        for (n = 0; n < 8; n++)
            z[c][2 * n + 2] = y[2 * n + 2][c] - ((y[2 * n + 1][c] + y[2 * n + 3][c]) >> 1);
}

void update_cols(int y[18][8], int z[8][18])
{
    int c;
    int n;

    for (c = 0; c < 8; c++)
        for (n = 0; n < 8; n++)
            z[c][2 * n + 1] = y[2 * n + 1][c] + ((y[2 * n][c] + y[2 * n + 2][c]) >> 2);
}

void dwt_cols(int y[18][8], int z[8][18])
{
    predict_cols(y, z);
    update_cols(y, z);
}

void dwt2d(int x[8][18], int y[18][8], int z[8][18])
{
    dwt_rows(x, y);
    dwt_cols(y, z);
}
