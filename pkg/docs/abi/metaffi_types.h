/* Generated by metaffi.abi. DO NOT EDIT; regenerate with
 * `python3 -m metaffi.abi`. */
#ifndef METAFFI_TYPES_H
#define METAFFI_TYPES_H

#include <stdint.h>

typedef uint64_t metaffi_type;
typedef uint64_t metaffi_size;

#define metaffi_float64_type  (1ULL << 0)
#define metaffi_float32_type  (1ULL << 1)
#define metaffi_int8_type     (1ULL << 2)
#define metaffi_int16_type    (1ULL << 3)
#define metaffi_int32_type    (1ULL << 4)
#define metaffi_int64_type    (1ULL << 5)
#define metaffi_uint8_type    (1ULL << 6)
#define metaffi_uint16_type   (1ULL << 7)
#define metaffi_uint32_type   (1ULL << 8)
#define metaffi_uint64_type   (1ULL << 9)
#define metaffi_bool_type     (1ULL << 10)
#define metaffi_char8_type    (1ULL << 11)
#define metaffi_string8_type  (1ULL << 12)
#define metaffi_char16_type   (1ULL << 13)
#define metaffi_string16_type (1ULL << 14)
#define metaffi_char32_type   (1ULL << 15)
#define metaffi_string32_type (1ULL << 16)
#define metaffi_handle_type   (1ULL << 17)
#define metaffi_callable_type (1ULL << 18)
#define metaffi_any_type      (1ULL << 19)
#define metaffi_null_type     (1ULL << 20)
#define metaffi_size_type     (1ULL << 21)
#define metaffi_type_type     (1ULL << 22)
#define metaffi_array_type    (1ULL << 63)

struct xcall {
    void* entrypoint;
    void* context;
};

struct cdts;

struct cdt_metaffi_handle {
    void* handle;
    uint64_t runtime_id;
    void* release;
};

struct cdt_metaffi_callable {
    struct xcall val;
    metaffi_type* parameter_types;
    metaffi_size params_count;
    metaffi_type* retval_types;
    metaffi_size retvals_count;
};

/* Scalars live inline; strings, handles, callables and arrays are
 * pointers to out-of-line storage (strings allocator-owned and
 * null-terminated, arrays a struct cdts). */
union cdt_value {
    double f64;
    float f32;
    int64_t i64;
    uint64_t u64;
    uint8_t boolean;
    uint32_t c8;   /* char8: up to 4 UTF-8 code units */
    uint32_t c16;  /* char16: up to 2 UTF-16 code units */
    uint32_t c32;  /* char32: one UTF-32 code unit */
    metaffi_type type;
    void* ptr;
};

struct cdt {
    metaffi_type type;
    uint8_t free_required;
    union cdt_value value;
};

struct cdts {
    struct cdt* arr;
    metaffi_size length;
    uint8_t allocated_on_heap;
};

_Static_assert(sizeof(struct cdt) == 24, "cdt ABI size");
_Static_assert(sizeof(struct cdts) == 24, "cdts ABI size");
_Static_assert(sizeof(struct xcall) == 16, "xcall ABI size");
_Static_assert(sizeof(struct cdt_metaffi_handle) == 24, "cdt_metaffi_handle ABI size");
_Static_assert(sizeof(struct cdt_metaffi_callable) == 48, "cdt_metaffi_callable ABI size");

#endif /* METAFFI_TYPES_H */
