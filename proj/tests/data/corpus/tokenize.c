#include <ctype.h>

static int is_sep(char c)
{
    return c == ',' || c == ';' || isspace((unsigned char)c);
}

int count_tokens(const char *s)
{
    int n = 0;
    int in_tok = 0;
    for (; *s; s++) {
        if (is_sep(*s)) {
            in_tok = 0;
            continue;
        }
        if (!in_tok) {
            n++;
            in_tok = 1;
        }
    }
    return n;
}

int first_token_len(const char *s)
{
    int len = 0;
    while (*s && is_sep(*s))
        s++;
    while (s[len] && !is_sep(s[len]))
        len++;
    return len;
}
