# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled training kernels.

Semantics mirror labelcycle._pure_kernels.run_epoch: batched per-position
updates against pre-update values, fixed context window, per-position
linear learning-rate decay, negatives drawn from a unigram^0.75 cdf with
hits on the target dropped. The RNG is xorshift64* (the numpy generator
is too slow to call per draw from C), so streams differ from the pure
backend; each backend is deterministic under its own seed.
"""

import numpy as np

from libc.math cimport exp, log

cdef double SCORE_CLIP = 30.0
cdef double LOG_EPS = 1e-9
cdef int KIND_CBOW = 0
cdef int KIND_SKIPGRAM = 1
cdef int KIND_PVDM = 2

cdef double INV_2_53 = 1.0 / 9007199254740992.0


cdef inline unsigned long long xs_next(unsigned long long *s) noexcept nogil:
    cdef unsigned long long x = s[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    s[0] = x
    return x * <unsigned long long>2685821657736338717


cdef inline double xs_double(unsigned long long *s) noexcept nogil:
    return <double>(xs_next(s) >> 11) * INV_2_53


cdef inline long long cdf_pick(double[::1] cdf, double r) noexcept nogil:
    # first index with cdf[i] >= r, as np.searchsorted(side="left")
    cdef long long lo = 0, hi = cdf.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if cdf[mid] < r:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double clipped_sigmoid(double s) noexcept nogil:
    if s > SCORE_CLIP:
        s = SCORE_CLIP
    elif s < -SCORE_CLIP:
        s = -SCORE_CLIP
    return 1.0 / (1.0 + exp(-s))


cdef inline long long draw_negatives(
    unsigned long long *state, double[::1] cdf, int k, long long exclude,
    long long[::1] rows_out,
) noexcept nogil:
    """Fill rows_out[1..] with kept negatives; rows_out[0] is the target.
    Returns the total row count (1 + kept)."""
    cdef long long m = 1, idx
    cdef int i
    rows_out[0] = exclude
    for i in range(k):
        idx = cdf_pick(cdf, xs_double(state))
        if idx != exclude:
            rows_out[m] = idx
            m += 1
    return m


cdef inline double train_rows(
    float[:, ::1] output_vecs, double[::1] h, double[::1] gh,
    long long[::1] rows, double[::1] errs, long long n_rows, double lr,
) noexcept nogil:
    """Forward + output update for one position. `h` is the hidden vector;
    on return `gh` holds d loss / d h (computed against pre-update rows).
    Returns the position loss."""
    cdef long long j2, row
    cdef int j, dim = output_vecs.shape[1]
    cdef double s, sig, p, e, loss = 0.0

    for j in range(dim):
        gh[j] = 0.0
    for j2 in range(n_rows):
        row = rows[j2]
        s = 0.0
        for j in range(dim):
            s += output_vecs[row, j] * h[j]
        sig = clipped_sigmoid(s)
        if j2 == 0:
            e = sig - 1.0
            p = sig
        else:
            e = sig
            p = 1.0 - sig
        if p < LOG_EPS:
            p = LOG_EPS
        loss -= log(p)
        errs[j2] = e
        for j in range(dim):
            gh[j] += e * output_vecs[row, j]
    # output rows updated after gh so every gradient sees pre-update values
    for j2 in range(n_rows):
        row = rows[j2]
        e = lr * errs[j2]
        for j in range(dim):
            output_vecs[row, j] -= <float>(e * h[j])
    return loss


def run_epoch(
    int kind,
    int[::1] tokens_flat,
    long long[::1] doc_offsets,
    long long[::1] units_flat,
    long long[::1] unit_offsets,
    float[:, ::1] input_vecs,
    float[:, ::1] output_vecs,
    doc_vecs_obj,
    int window,
    int negatives,
    double[::1] noise_cdf,
    double lr_start,
    double lr_end,
    long long done,
    long long total_positions,
    unsigned long long state,
    bint train_inputs,
):
    """One pass over the corpus; returns (loss_sum, n_examples, done, state)."""
    cdef float[:, ::1] doc_vecs
    cdef bint has_docs = doc_vecs_obj is not None
    if kind == KIND_PVDM and not has_docs:
        raise ValueError("pvdm requires doc vectors")
    if has_docs:
        doc_vecs = doc_vecs_obj

    cdef int dim = input_vecs.shape[1]
    cdef double[::1] h = np.empty(dim, dtype=np.float64)
    cdef double[::1] gh = np.empty(dim, dtype=np.float64)
    cdef long long[::1] rows = np.empty(negatives + 1, dtype=np.int64)
    cdef double[::1] errs = np.empty(negatives + 1, dtype=np.float64)

    cdef double loss_sum = 0.0, lr, lr_span = lr_end - lr_start, coef
    cdef long long n_examples = 0, n_docs = doc_offsets.shape[0] - 1
    cdef long long d, off, n, t, lo, hi, c, center, w, u, k, n_units, n_rows
    cdef long long peers, g_lo, g_hi
    cdef int j

    for d in range(n_docs):
        off = doc_offsets[d]
        n = doc_offsets[d + 1] - off
        for t in range(n):
            lr = lr_start + lr_span * (<double>done / <double>total_positions)
            done += 1
            lo = t - window
            if lo < 0:
                lo = 0
            hi = t + window + 1
            if hi > n:
                hi = n
            center = tokens_flat[off + t]

            if kind == KIND_SKIPGRAM:
                # hidden recomputed per target: earlier targets at this
                # position already moved the center's unit rows
                for c in range(lo, hi):
                    if c == t:
                        continue
                    n_units = unit_offsets[center + 1] - unit_offsets[center]
                    for j in range(dim):
                        h[j] = 0.0
                    for k in range(unit_offsets[center], unit_offsets[center + 1]):
                        u = units_flat[k]
                        for j in range(dim):
                            h[j] += input_vecs[u, j]
                    for j in range(dim):
                        h[j] /= n_units
                    n_rows = draw_negatives(
                        &state, noise_cdf, negatives, tokens_flat[off + c], rows
                    )
                    loss_sum += train_rows(output_vecs, h, gh, rows, errs, n_rows, lr)
                    n_examples += 1
                    coef = lr / <double>n_units
                    for k in range(unit_offsets[center], unit_offsets[center + 1]):
                        u = units_flat[k]
                        for j in range(dim):
                            input_vecs[u, j] -= <float>(coef * gh[j])
                continue

            if kind == KIND_CBOW:
                n_units = 0
                for j in range(dim):
                    h[j] = 0.0
                for c in range(lo, hi):
                    if c == t:
                        continue
                    w = tokens_flat[off + c]
                    for k in range(unit_offsets[w], unit_offsets[w + 1]):
                        u = units_flat[k]
                        for j in range(dim):
                            h[j] += input_vecs[u, j]
                        n_units += 1
                if n_units == 0:
                    continue
                for j in range(dim):
                    h[j] /= n_units
                n_rows = draw_negatives(&state, noise_cdf, negatives, center, rows)
                loss_sum += train_rows(output_vecs, h, gh, rows, errs, n_rows, lr)
                n_examples += 1
                coef = lr / <double>n_units
                for c in range(lo, hi):
                    if c == t:
                        continue
                    w = tokens_flat[off + c]
                    for k in range(unit_offsets[w], unit_offsets[w + 1]):
                        u = units_flat[k]
                        for j in range(dim):
                            input_vecs[u, j] -= <float>(coef * gh[j])
                continue

            # pvdm: hidden = (sum of composed word vectors + doc vector) / peers
            peers = hi - lo  # ctx words plus the doc vector, minus the center
            for j in range(dim):
                h[j] = doc_vecs[d, j]
            for c in range(lo, hi):
                if c == t:
                    continue
                w = tokens_flat[off + c]
                g_lo = unit_offsets[w]
                g_hi = unit_offsets[w + 1]
                for k in range(g_lo, g_hi):
                    u = units_flat[k]
                    for j in range(dim):
                        h[j] += input_vecs[u, j] / <double>(g_hi - g_lo)
            for j in range(dim):
                h[j] /= peers
            n_rows = draw_negatives(&state, noise_cdf, negatives, center, rows)
            if not train_inputs:
                # inference path: forward only, then update just the doc vector
                loss_sum += frozen_rows_loss(output_vecs, h, gh, rows, errs, n_rows)
            else:
                loss_sum += train_rows(output_vecs, h, gh, rows, errs, n_rows, lr)
                for c in range(lo, hi):
                    if c == t:
                        continue
                    w = tokens_flat[off + c]
                    g_lo = unit_offsets[w]
                    g_hi = unit_offsets[w + 1]
                    coef = lr / <double>(peers * (g_hi - g_lo))
                    for k in range(g_lo, g_hi):
                        u = units_flat[k]
                        for j in range(dim):
                            input_vecs[u, j] -= <float>(coef * gh[j])
            n_examples += 1
            coef = lr / <double>peers
            for j in range(dim):
                doc_vecs[d, j] -= <float>(coef * gh[j])

    return loss_sum, n_examples, done, state


cdef inline double frozen_rows_loss(
    float[:, ::1] output_vecs, double[::1] h, double[::1] gh,
    long long[::1] rows, double[::1] errs, long long n_rows,
) noexcept nogil:
    """train_rows without the output update, for frozen-matrix inference."""
    cdef long long j2, row
    cdef int j, dim = output_vecs.shape[1]
    cdef double s, sig, p, e, loss = 0.0

    for j in range(dim):
        gh[j] = 0.0
    for j2 in range(n_rows):
        row = rows[j2]
        s = 0.0
        for j in range(dim):
            s += output_vecs[row, j] * h[j]
        sig = clipped_sigmoid(s)
        if j2 == 0:
            e = sig - 1.0
            p = sig
        else:
            e = sig
            p = 1.0 - sig
        if p < LOG_EPS:
            p = LOG_EPS
        loss -= log(p)
        errs[j2] = e
        for j in range(dim):
            gh[j] += e * output_vecs[row, j]
    return loss
