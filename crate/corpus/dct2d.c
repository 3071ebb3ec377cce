/* 8x8 two-dimensional DCT-II in 4.12 fixed point.
 * The 2D transform is a row pass followed by a column pass through tmp. */

const int coef[8][8] = {
    {  1448,  1448,  1448,  1448,  1448,  1448,  1448,  1448 },
    {  2009,  1703,  1138,   400,  -400, -1138, -1703, -2009 },
    {  1892,   784,  -784, -1892, -1892,  -784,   784,  1892 },
    {  1703,  -400, -2009, -1138,  1138,  2009,   400, -1703 },
    {  1448, -1448, -1448,  1448,  1448, -1448, -1448,  1448 },
    {  1138, -2009,   400,  1703, -1703,  -400,  2009, -1138 },
    {   784, -1892,  1892,  -784,  -784,  1892, -1892,   784 },
    {   400, -1138,  1703, -2009,  2009, -1703,  1138,  -400 }
};

void dct_rows(int in[8][8], int out[8][8])
{
    int r;
    int k;

    for (r = 0; r < 8; r++) {
        for (k = 0; k < 8; k++) {
            out[r][k] = (((coef[k][0] * in[r][0]
                         + coef[k][1] * in[r][1])
                        + (coef[k][2] * in[r][2]
                         + coef[k][3] * in[r][3]))
                        + ((coef[k][4] * in[r][4]
                         + coef[k][5] * in[r][5])
                        + (coef[k][6] * in[r][6]
                         + coef[k][7] * in[r][7]))) >> 12;
        }
    }
}

void dct_cols(int in[8][8], int out[8][8])
{
    int c;
    int k;

    for (c = 0; c < 8; c++) {
        for (k = 0; k < 8; k++) {
            out[k][c] = (((coef[k][0] * in[0][c]
                         + coef[k][1] * in[1][c])
                        + (coef[k][2] * in[2][c]
                         + coef[k][3] * in[3][c]))
                        + ((coef[k][4] * in[4][c]
                         + coef[k][5] * in[5][c])
                        + (coef[k][6] * in[6][c]
                         + coef[k][7] * in[7][c]))) >> 12;
        }
    }
}

void dct2d(int in[8][8], int tmp[8][8], int out[8][8])
{
    dct_rows(in, tmp);
    dct_cols(tmp, out);
}
