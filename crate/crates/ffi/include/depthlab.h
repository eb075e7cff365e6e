#ifndef DEPTHLAB_H
#define DEPTHLAB_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DlStatus {
  DL_STATUS_OK = 0,
  DL_STATUS_NULL_ARGUMENT = 1,
  // Not UTF-8, or not a bit string where one was expected.
  DL_STATUS_INVALID_TEXT = 2,
  // A machine description failed to parse or validate.
  DL_STATUS_INVALID_SPEC = 3,
  // A pushdown compressor had no move for the input.
  DL_STATUS_STUCK = 4,
  // A binary description or LZ78 code could not be decoded.
  DL_STATUS_DECODE_FAILED = 5,
  DL_STATUS_INVALID_PARAMETERS = 6,
  // The result would exceed a size ceiling.
  DL_STATUS_REFUSED = 7,
  DL_STATUS_PANIC = 8,
} DlStatus;

// Opaque finite-state transducer.
typedef struct DlFst DlFst;

// Opaque validated pushdown compressor.
typedef struct DlPdc DlPdc;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or an empty string. Valid
// until the next failing call on the same thread.
const char *dl_last_error(void);

// # Safety
// `s` is null or was returned by this library and not yet freed.
void dl_string_free(char *s);

// Parse a transducer from its text format.
//
// # Safety
// `spec` is a NUL-terminated string; `out` is writable.
enum DlStatus dl_fst_parse(const char *spec, struct DlFst **out);

// # Safety
// `fst` is null or a live handle from this library.
void dl_fst_free(struct DlFst *fst);

// Run a transducer; `out_state` receives the final state.
//
// # Safety
// Pointers are valid handles, NUL-terminated strings and writable outputs.
enum DlStatus dl_fst_run(const struct DlFst *fst,
                         const char *input,
                         char **out_bits,
                         uintptr_t *out_state);

// Binary description of a transducer.
//
// # Safety
// `fst` is a live handle; `out_bits` is writable.
enum DlStatus dl_fst_encode(const struct DlFst *fst, char **out_bits);

// Transducer from a binary description.
//
// # Safety
// `description` is a NUL-terminated string; `out` is writable.
enum DlStatus dl_fst_decode(const char *description, struct DlFst **out);

// # Safety
// `fst` is a live handle; `out_text` is writable.
enum DlStatus dl_fst_to_text(const struct DlFst *fst, char **out_text);

// Transducer computing `outer(inner(x))`.
//
// # Safety
// Handles are live; `out` is writable.
enum DlStatus dl_fst_compose(const struct DlFst *outer,
                             const struct DlFst *inner,
                             struct DlFst **out);

// Shortest input length over all transducers with descriptions of at most
// `k` bits that print `target`; -1 when none does.
//
// # Safety
// `target` is a NUL-terminated string; `out_value` is writable.
enum DlStatus dl_kfs(const char *target, uintptr_t k, int64_t *out_value);

// Parse and validate a pushdown compressor.
//
// # Safety
// `spec` is a NUL-terminated string; `out` is writable.
enum DlStatus dl_pdc_parse(const char *spec, struct DlPdc **out);

// # Safety
// `pdc` is null or a live handle from this library.
void dl_pdc_free(struct DlPdc *pdc);

// The flag-and-palindrome compressor with flag length `k`, zone width `v`
// and error-flag parameter `m`.
//
// # Safety
// `out` is writable.
enum DlStatus dl_pdc_half_compressor(uintptr_t k, uintptr_t v, uintptr_t m, struct DlPdc **out);

// Run a pushdown compressor. Returns `DL_STATUS_STUCK` when it has no move.
//
// # Safety
// Pointers are valid handles, NUL-terminated strings and writable outputs.
enum DlStatus dl_pdc_run(const struct DlPdc *pdc,
                         const char *input,
                         char **out_bits,
                         uintptr_t *out_state);

// # Safety
// `pdc` is a live handle; `out_text` is writable.
enum DlStatus dl_pdc_to_text(const struct DlPdc *pdc, char **out_text);

// Pushdown compressor computing `pdc(fst(x))`.
//
// # Safety
// Handles are live; `out` is writable.
enum DlStatus dl_pdc_compose_fst(const struct DlPdc *pdc,
                                 const struct DlFst *fst,
                                 struct DlPdc **out);

// Whether (output, final state) determines the input for every input of
// at most `max_len` bits.
//
// # Safety
// `pdc` is a live handle; `out_lossless` is writable.
enum DlStatus dl_pdc_il_check(const struct DlPdc *pdc, uintptr_t max_len, bool *out_lossless);

// # Safety
// `input` is a NUL-terminated string; `out_bits` is writable.
enum DlStatus dl_lz_encode(const char *input, char **out_bits);

// # Safety
// `code` is a NUL-terminated string; `out_bits` is writable.
enum DlStatus dl_lz_decode(const char *code, char **out_bits);

// LZ78 code length in bits without materializing the code.
//
// # Safety
// `input` is a NUL-terminated string; `out_len` is writable.
enum DlStatus dl_lz_length(const char *input, uint64_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPTHLAB_H */
