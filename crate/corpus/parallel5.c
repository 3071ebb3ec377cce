/* Five independent update chains. Each block is fully sequential on its own. */

void five_blocks(int x[5], int y[5])
{
    {
        y[0] = (x[0] + 1) * 3;
    }
    {
        y[1] = (x[1] + 2) * 5;
    }
    {
        y[2] = (x[2] + 3) * 7;
    }
    {
        y[3] = (x[3] + 4) * 11;
    }
    {
        y[4] = (x[4] + 5) * 13;
    }
}
