/*
 * stpde — stochastic transport-diffusion lab: public C API.
 *
 * The library runs named numerical studies (kernel validation, dual solves,
 * Monte Carlo stability/convergence ladders, ...) configured by flat
 * "key = value" text, and returns a JSON report plus a CSV table through an
 * opaque report handle. All functions are thread-safe; the per-thread
 * stpde_last_error() string explains the most recent failure on the calling
 * thread.
 *
 * Exit-code convention (shared by stpde_run and the CLI):
 *   0  study ran; verdict pass / inconclusive / oracle-limited
 *   1  study ran and failed an acceptance check, or aborted mid-run
 *   2  usage error (unknown command, malformed or missing configuration)
 *
 * Copyright (c) 2026 The stpde authors
 * SPDX-License-Identifier: MIT
 */

#ifndef STPDE_H
#define STPDE_H

#ifdef __cplusplus
extern "C" {
#endif

/* Opaque result of one study run. Free with stpde_report_free. */
typedef struct stpde_report stpde_report;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char* stpde_version(void);

/* Space-separated list of accepted command names. Static storage. */
const char* stpde_commands(void);

/*
 * Runs one named study. `config_text` holds zero or more "key = value"
 * lines ('#' comments allowed; NULL means empty). On return *out (when out
 * is non-NULL) owns a report handle — also on failure, so diagnostics stay
 * available; it is NULL only when allocation itself failed. Returns the
 * exit code described above.
 */
int stpde_run(const char* command, const char* config_text,
              stpde_report** out);

/* Report accessors. Strings live until stpde_report_free; never NULL. */
const char* stpde_report_json(const stpde_report* report);
const char* stpde_report_csv(const stpde_report* report);
const char* stpde_report_status(const stpde_report* report);
const char* stpde_report_message(const stpde_report* report);
int stpde_report_exit_code(const stpde_report* report);

/* Releases a report handle. NULL is a no-op. */
void stpde_report_free(stpde_report* report);

/*
 * Scalar utility: exponentially scaled modified Bessel value e^{-r} I_n(r),
 * the building block of the lattice heat kernel. Writes the value to *out
 * and returns 0, or returns 2 on invalid arguments (n < 0, r < 0, out NULL).
 */
int stpde_scaled_bessel_i(long n, double r, double* out);

/*
 * Most recent error message raised on this thread by any stpde_* call.
 * Empty string when no error has occurred. Static thread-local storage.
 */
const char* stpde_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* STPDE_H */
