/* Copyright 2026 The blockpair Authors.
 * SPDX-License-Identifier: Apache-2.0
 *
 * A small single-file compressor with the shape of gzip: a CRC table, an
 * LZ77 matcher over a hash chain, a bit writer and a matching decoder. */

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#define WINDOW 4096
#define MIN_MATCH 3
#define MAX_MATCH 18
#define HASH_BITS 12
#define HASH_SIZE (1 << HASH_BITS)
#define NIL 0xffff

typedef unsigned char uch;
typedef unsigned short ush;
typedef unsigned long ulg;

static ulg crc_table[256];
static ush head[HASH_SIZE];
static ush prev[WINDOW];

struct bitbuf {
  uch *out;
  size_t pos;
  size_t cap;
  ulg acc;
  int bits;
};

void make_crc_table(void) {
  for (ulg n = 0; n < 256; n++) {
    ulg c = n;
    for (int k = 0; k < 8; k++) c = c & 1 ? 0xedb88320UL ^ (c >> 1) : c >> 1;
    crc_table[n] = c;
  }
}

ulg updcrc(ulg crc, const uch *s, size_t n) {
  ulg c = crc ^ 0xffffffffUL;
  while (n--) c = crc_table[(c ^ *s++) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffUL;
}

int grow(struct bitbuf *b) {
  size_t cap = b->cap ? b->cap * 2 : 256;
  uch *p = realloc(b->out, cap);
  if (!p) return -1;
  b->out = p;
  b->cap = cap;
  return 0;
}

int put_byte(struct bitbuf *b, uch c) {
  if (b->pos == b->cap && grow(b) != 0) return -1;
  b->out[b->pos++] = c;
  return 0;
}

int send_bits(struct bitbuf *b, ulg value, int length) {
  b->acc |= value << b->bits;
  b->bits += length;
  while (b->bits >= 8) {
    if (put_byte(b, (uch)(b->acc & 0xff)) != 0) return -1;
    b->acc >>= 8;
    b->bits -= 8;
  }
  return 0;
}

int flush_bits(struct bitbuf *b) {
  int rc = b->bits > 0 ? put_byte(b, (uch)(b->acc & 0xff)) : 0;
  b->acc = 0;
  b->bits = 0;
  return rc;
}

unsigned hash3(const uch *p) {
  unsigned h = ((unsigned)p[0] << 8) ^ ((unsigned)p[1] << 4) ^ p[2];
  return (h * 2654435761u) >> (32 - HASH_BITS);
}

void insert_string(const uch *buf, size_t pos) {
  unsigned h = hash3(buf + pos);
  prev[pos % WINDOW] = head[h];
  head[h] = (ush)(pos % WINDOW);
}

size_t match_length(const uch *a, const uch *b, size_t limit) {
  size_t n = 0;
  while (n < limit && a[n] == b[n]) n++;
  return n;
}

size_t longest_match(const uch *buf, size_t pos, size_t len, size_t *dist) {
  size_t best = 0;
  size_t limit = len - pos < MAX_MATCH ? len - pos : MAX_MATCH;
  unsigned cur = head[hash3(buf + pos)];
  int chain = 32;
  while (cur != NIL && chain-- > 0) {
    size_t base = pos - pos % WINDOW + cur;
    if (base >= pos) base = base >= WINDOW ? base - WINDOW : pos;
    if (base < pos) {
      size_t n = match_length(buf + base, buf + pos, limit);
      if (n > best) {
        best = n;
        *dist = pos - base;
        if (n == limit) break;
      }
    }
    ush next = prev[cur];
    if (next == cur) break;
    cur = next;
  }
  return best >= MIN_MATCH ? best : 0;
}

int deflate_block(const uch *buf, size_t len, struct bitbuf *out) {
  memset(head, 0xff, sizeof head);
  memset(prev, 0xff, sizeof prev);
  size_t pos = 0;
  while (pos < len) {
    size_t dist = 0;
    size_t n = len - pos >= MIN_MATCH ? longest_match(buf, pos, len, &dist) : 0;
    if (n) {
      if (send_bits(out, 1, 1) || send_bits(out, n - MIN_MATCH, 4) || send_bits(out, dist - 1, 12))
        return -1;
      for (size_t k = 0; k < n; k++)
        if (pos + k + MIN_MATCH <= len) insert_string(buf, pos + k);
      pos += n;
    } else {
      if (send_bits(out, 0, 1) || send_bits(out, buf[pos], 8)) return -1;
      if (pos + MIN_MATCH <= len) insert_string(buf, pos);
      pos++;
    }
  }
  return flush_bits(out);
}

struct bitreader {
  const uch *in;
  size_t len;
  size_t pos;
  ulg acc;
  int bits;
};

int need_bits(struct bitreader *r, int n) {
  while (r->bits < n) {
    if (r->pos >= r->len) return -1;
    r->acc |= (ulg)r->in[r->pos++] << r->bits;
    r->bits += 8;
  }
  return 0;
}

long get_bits(struct bitreader *r, int n) {
  if (need_bits(r, n) != 0) return -1;
  long v = (long)(r->acc & ((1UL << n) - 1));
  r->acc >>= n;
  r->bits -= n;
  return v;
}

long inflate_block(const uch *in, size_t in_len, uch *out, size_t out_len) {
  struct bitreader r = {in, in_len, 0, 0, 0};
  size_t pos = 0;
  while (pos < out_len) {
    long flag = get_bits(&r, 1);
    if (flag < 0) return -1;
    if (flag == 0) {
      long c = get_bits(&r, 8);
      if (c < 0) return -1;
      out[pos++] = (uch)c;
      continue;
    }
    long n = get_bits(&r, 4);
    long d = get_bits(&r, 12);
    if (n < 0 || d < 0) return -1;
    n += MIN_MATCH;
    d += 1;
    if ((size_t)d > pos) return -2;
    for (long k = 0; k < n && pos < out_len; k++, pos++) out[pos] = out[pos - (size_t)d];
  }
  return (long)pos;
}

const char *level_name(int level) {
  switch (level) {
    case 0: return "store";
    case 1: return "fast";
    case 9: return "best";
    default: return level < 5 ? "low" : "high";
  }
}

double ratio(size_t in, size_t out) { return in ? (double)out / (double)in : 0.0; }

void fill_sample(uch *buf, size_t len, unsigned seed) {
  static const char *words[] = {"deflate ", "inflate ", "window ", "match ", "crc ", "huffman "};
  size_t pos = 0;
  while (pos < len) {
    seed = seed * 1103515245u + 12345u;
    const char *w = words[(seed >> 16) % 6];
    size_t n = strlen(w);
    size_t take = len - pos < n ? len - pos : n;
    memcpy(buf + pos, w, take);
    pos += take;
  }
}

ulg adler32(ulg adler, const uch *s, size_t n) {
  ulg a = adler & 0xffff, b = (adler >> 16) & 0xffff;
  while (n > 0) {
    size_t chunk = n < 5552 ? n : 5552;
    n -= chunk;
    while (chunk--) {
      a += *s++;
      b += a;
    }
    a %= 65521;
    b %= 65521;
  }
  return (b << 16) | a;
}

void count_freqs(const uch *buf, size_t len, ulg *freq) {
  memset(freq, 0, 256 * sizeof *freq);
  for (size_t k = 0; k < len; k++) freq[buf[k]]++;
}

int bit_length(ulg f, ulg total) {
  int bits = 1;
  if (f == 0) return 0;
  while (bits < 15 && (f << bits) < total) bits++;
  return bits;
}

ulg estimate_bits(const ulg *freq, size_t len) {
  ulg sum = 0;
  for (int c = 0; c < 256; c++) {
    int bl = bit_length(freq[c], len);
    sum += freq[c] * (ulg)(bl > 0 ? bl : 9);
  }
  return sum;
}

size_t longest_run(const uch *buf, size_t len, uch *value) {
  size_t best = 0, run = 0;
  for (size_t k = 0; k < len; k++) {
    run = k > 0 && buf[k] == buf[k - 1] ? run + 1 : 1;
    if (run > best) {
      best = run;
      *value = buf[k];
    }
  }
  return best;
}

int check_header(const uch *buf, size_t len) {
  if (len < 10) return -1;
  if (buf[0] != 0x1f || buf[1] != 0x8b) return -2;
  int method = buf[2];
  int flags = buf[3];
  if (method != 8) return -3;
  if (flags & 0xe0) return -4;
  return flags & 0x08 ? 1 : 0;
}

int roundtrip(size_t len, unsigned seed, int verbose) {
  uch *src = malloc(len);
  uch *back = malloc(len);
  struct bitbuf out = {0};
  int rc = 1;
  if (!src || !back) goto done;
  fill_sample(src, len, seed);
  if (deflate_block(src, len, &out) != 0) goto done;
  long got = inflate_block(out.out, out.pos, back, len);
  if (got != (long)len || memcmp(src, back, len) != 0) {
    fprintf(stderr, "roundtrip mismatch at length %zu\n", len);
    goto done;
  }
  ulg freq[256];
  uch run_value = 0;
  count_freqs(src, len, freq);
  size_t run = longest_run(src, len, &run_value);
  if (verbose)
    printf("  entropy bound %lu bits, adler %08lx, longest run %zu of %02x, header %d\n",
           estimate_bits(freq, len), adler32(1, src, len), run, run_value, check_header(src, len));
  if (verbose)
    printf("%6zu -> %6zu bytes (%.3f) crc %08lx\n", len, out.pos, ratio(len, out.pos),
           updcrc(0, src, len));
  rc = 0;
done:
  free(src);
  free(back);
  free(out.out);
  return rc;
}

int main(int argc, char **argv) {
  int level = argc > 1 ? atoi(argv[1]) : 6;
  int verbose = argc > 2 && strcmp(argv[2], "-v") == 0;
  make_crc_table();
  printf("level %d (%s)\n", level, level_name(level));
  int failures = 0;
  for (size_t len = 16; len <= 65536; len *= 4) failures += roundtrip(len, (unsigned)len, verbose);
  puts(failures ? "FAIL" : "ok");
  return failures ? 1 : 0;
}
