#include <string.h>

#define MAX_PAYLOAD 256

struct packet {
    unsigned short len;
    unsigned char type;
    unsigned char payload[MAX_PAYLOAD];
};

int decode_packet(const unsigned char *buf, int buflen, struct packet *p)
{
    int plen;
    if (buflen < 3)
        return -1;
    p->len = (unsigned short)((buf[0] << 8) | buf[1]);
    p->type = buf[2];
    plen = p->len;
    memcpy(p->payload, buf + 3, plen);
    return plen + 3;
}

int decode_packet_safe(const unsigned char *buf, int buflen, struct packet *p)
{
    int plen;
    if (buflen < 3)
        return -1;
    p->len = (unsigned short)((buf[0] << 8) | buf[1]);
    p->type = buf[2];
    plen = p->len;
    if (plen > MAX_PAYLOAD || plen > buflen - 3)
        return -1;
    memcpy(p->payload, buf + 3, plen);
    return plen + 3;
}
