/* Guest library for the native plugin tests. Compiled by the test suite:
 *   cc -shared -fPIC -O2 -o libfixture.so fixture.c
 */

#include <stdint.h>
#include <stdio.h>
#include <string.h>

int64_t add_i64(int64_t a, int64_t b) { return a + b; }

double mul_f64(double a, double b) { return a * b; }

int64_t str_len8(const char *s) { return (int64_t)strlen(s); }

double mix3(int64_t a, double b, int64_t c) { return (double)a * b + (double)c; }

static int64_t last_value = 0;

void set_last(int64_t v) { last_value = v; }

int64_t get_last(void) { return last_value; }

void do_nothing(void) {}

int64_t sum8(int64_t a, int64_t b, int64_t c, int64_t d,
             int64_t e, int64_t f, int64_t g, int64_t h) {
  return a + b + c + d + e + f + g + h;
}

static char greet_buffer[256];

const char *greet(const char *name) {
  snprintf(greet_buffer, sizeof greet_buffer, "hello %s", name);
  return greet_buffer;
}
