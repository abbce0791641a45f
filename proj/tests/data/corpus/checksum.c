unsigned int adler32(const unsigned char *buf, unsigned long len)
{
    unsigned int a = 1, b = 0;
    unsigned long i;
    for (i = 0; i < len; i++) {
        a = (a + buf[i]) % 65521;
        b = (b + a) % 65521;
    }
    return (b << 16) | a;
}

unsigned char xor_sum(const unsigned char *buf, int n)
{
    unsigned char s = 0;
    while (n-- > 0)
        s ^= *buf++;
    return s;
}
