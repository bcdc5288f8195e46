#ifndef ZIGZAG_H
#define ZIGZAG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes. Negative values are errors.
enum ZgzStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  ZGZ_STATUS_OK = 0,
  // A corruption was found and repaired.
  ZGZ_STATUS_CORRECTED = 1,
  ZGZ_STATUS_NULL_POINTER = -1,
  ZGZ_STATUS_INVALID_PARAMETERS = -2,
  ZGZ_STATUS_DIMENSION_MISMATCH = -3,
  ZGZ_STATUS_TOO_MANY_ERASURES = -4,
  ZGZ_STATUS_UNCORRECTABLE = -5,
  ZGZ_STATUS_FORMAT = -6,
  ZGZ_STATUS_SEARCH_EXHAUSTED = -7,
  ZGZ_STATUS_INTERNAL = -8,
  ZGZ_STATUS_PANIC = -9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum ZgzStatus ZgzStatus;
#else
typedef int32_t ZgzStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque codec handle.
typedef struct ZgzCodec ZgzCodec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a codec. `construction` is 1 (zigzag) or 2 (any-node); `q = 0`
// picks the default field. On success `*out` owns a handle to release
// with `zgz_codec_free`.
//
// # Safety
// `out` must be a valid pointer.
ZgzStatus zgz_codec_new(uint8_t construction,
                        uint32_t r,
                        size_t m,
                        uint32_t q,
                        struct ZgzCodec **out);

// Builds a codec from a descriptor in JSON, as written by
// `zgz_codec_descriptor`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
ZgzStatus zgz_codec_from_json(const char *json, struct ZgzCodec **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `codec` must come from this library and not be used afterwards.
void zgz_codec_free(struct ZgzCodec *codec);

// Writes the codec descriptor as JSON into `*out`; free it with
// `zgz_string_free`.
//
// # Safety
// `codec` must be a live handle and `out` a valid pointer.
ZgzStatus zgz_codec_descriptor(const struct ZgzCodec *codec, char **out);

// # Safety
// `s` must come from this library or be null.
void zgz_string_free(char *s);

// Dimensions: systematic nodes `k`, total nodes `n`, rows `p`, field
// order `q`. Any output pointer may be null.
//
// # Safety
// `codec` must be a live handle; non-null outputs must be valid.
ZgzStatus zgz_codec_shape(const struct ZgzCodec *codec,
                          size_t *k,
                          size_t *n,
                          size_t *p,
                          uint32_t *q);

// Fills the parity columns of `columns` from its first `k` columns.
//
// # Safety
// `columns` must hold `n * p` bytes.
ZgzStatus zgz_encode(const struct ZgzCodec *codec, uint8_t *columns);

// Restores the absent columns with the access-efficient rebuild. Cells
// read and surviving cells are written to `reads` and `surviving` when
// non-null; their quotient is the rebuilding ratio.
//
// # Safety
// `columns` must hold `n * p` bytes and `present` `n` bytes.
ZgzStatus zgz_rebuild(const struct ZgzCodec *codec,
                      uint8_t *columns,
                      const uint8_t *present,
                      uint64_t *reads,
                      uint64_t *surviving);

// Restores the absent columns by plain erasure decoding.
//
// # Safety
// `columns` must hold `n * p` bytes and `present` `n` bytes.
ZgzStatus zgz_decode(const struct ZgzCodec *codec, uint8_t *columns, const uint8_t *present);

// Checks a full stripe and repairs a single corrupted column in place.
// Returns `Ok` when clean, `Corrected` after a repair (the column index
// goes to `*column`), `Uncorrectable` otherwise.
//
// # Safety
// `columns` must hold `n * p` bytes; `column` may be null.
ZgzStatus zgz_correct(const struct ZgzCodec *codec, uint8_t *columns, int64_t *column);

// Message for the last error on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *zgz_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZIGZAG_H */
