# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trial engine.

Bit-identical twin of ``_engine.py``: same Philox4x32-10 counter stream, same
inverse-CDF binomial walk, same draw-consumption rules.  All arithmetic is
IEEE double with the same operation order as the pure-Python engine, so the
two backends produce byte-identical trial records.
"""

from libc.math cimport log, pow, rint
from libc.stdlib cimport free, malloc

import numpy as np

cdef unsigned long long MASK32 = 0xFFFFFFFFULL

cdef unsigned int PHILOX_M0 = 0xD2511F53
cdef unsigned int PHILOX_M1 = 0xCD9E8D57
cdef unsigned int PHILOX_W0 = 0x9E3779B9
cdef unsigned int PHILOX_W1 = 0xBB67AE85

cdef double BINOMIAL_MAX = 500.0

cdef int OP_SPLIT = 0
cdef int OP_DEATH_INSTANT = 1
cdef int OP_DEATH_LINGER = 2
cdef int OP_DECLINE = 3
cdef int OP_TIME = 4


cdef inline double uniform53(unsigned int k0, unsigned int k1,
                             unsigned long long counter,
                             unsigned long long stream) nogil:
    cdef unsigned int c0 = <unsigned int> (counter & MASK32)
    cdef unsigned int c1 = <unsigned int> ((counter >> 32) & MASK32)
    cdef unsigned int c2 = <unsigned int> (stream & MASK32)
    cdef unsigned int c3 = <unsigned int> ((stream >> 32) & MASK32)
    cdef unsigned long long p0, p1
    cdef unsigned int hi0, lo0, hi1, lo1
    cdef int i
    for i in range(10):
        p0 = (<unsigned long long> PHILOX_M0) * c0
        p1 = (<unsigned long long> PHILOX_M1) * c2
        hi0 = <unsigned int> (p0 >> 32)
        lo0 = <unsigned int> (p0 & MASK32)
        hi1 = <unsigned int> (p1 >> 32)
        lo1 = <unsigned int> (p1 & MASK32)
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = k0 + PHILOX_W0
        k1 = k1 + PHILOX_W1
    return ((c0 >> 5) * 67108864.0 + (c1 >> 6)) / 9007199254740992.0


cdef inline double binomial_icdf(double u, double n, double p) nogil:
    cdef double q = 1.0 - p
    cdef double pmf = pow(q, n)
    cdef double cdf = pmf
    cdef double k = 0.0
    while u > cdf and k < n:
        pmf *= ((n - k) / (k + 1.0)) * (p / q)
        k += 1.0
        cdf += pmf
    return k


def run_program(program, int n_trials, object seed):
    """Run all trials; returns (root, leaf, alive, conscious) numpy arrays."""
    cdef unsigned long long seed64 = <unsigned long long> (int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef unsigned int k0 = <unsigned int> (seed64 & MASK32)
    cdef unsigned int k1 = <unsigned int> ((seed64 >> 32) & MASK32)

    cdef int[::1] root_idx = program.root_idx
    cdef double[::1] root_cum = program.root_cum
    cdef double[:, ::1] init_counts = program.init_counts
    cdef int[::1] op = program.op
    cdef int[::1] ebranch = program.ebranch
    cdef int[::1] ekind = program.ekind
    cdef int[::1] child_off = program.child_off
    cdef int[::1] nchild = program.nchild
    cdef double[::1] xs = program.x
    cdef double[::1] ys = program.y
    cdef int[::1] child_branch = program.child_branch
    cdef double[::1] child_cum = program.child_cum

    cdef int n_kinds = len(program.kind_labels)
    cdef int n_roots = root_idx.shape[0]
    cdef int n_events = op.shape[0]
    cdef int max_dying = 0
    cdef int e
    for e in range(n_events):
        if op[e] == OP_DEATH_LINGER:
            max_dying += 1
    if max_dying < 1:
        max_dying = 1

    out_root_arr = np.zeros(n_trials, dtype=np.int32)
    out_leaf_arr = np.zeros(n_trials, dtype=np.int32)
    out_alive_arr = np.zeros((n_trials, n_kinds), dtype=np.float64)
    out_conscious_arr = np.zeros((n_trials, n_kinds), dtype=np.float64)
    cdef int[::1] out_root = out_root_arr
    cdef int[::1] out_leaf = out_leaf_arr
    cdef double[:, ::1] out_alive = out_alive_arr
    cdef double[:, ::1] out_conscious = out_conscious_arr

    cdef double* alive = <double*> malloc(n_kinds * sizeof(double))
    cdef int* dying_kind = <int*> malloc(max_dying * sizeof(int))
    cdef double* dying_remaining = <double*> malloc(max_dying * sizeof(double))
    cdef double* dying_count = <double*> malloc(max_dying * sizeof(double))
    if alive == NULL or dying_kind == NULL or dying_remaining == NULL or dying_count == NULL:
        free(alive); free(dying_kind); free(dying_remaining); free(dying_count)
        raise MemoryError()

    cdef unsigned long long counter, stream
    cdef int trial, r, j, c, cur, code, kind, n_dying, off, nch, kidx
    cdef double u, count, killed, fraction, rounded, dt

    try:
        with nogil:
            for trial in range(n_trials):
                stream = <unsigned long long> trial
                counter = 0
                if n_roots > 1:
                    u = uniform53(k0, k1, counter, stream)
                    counter += 1
                    r = n_roots - 1
                    for j in range(n_roots):
                        if u < root_cum[j]:
                            r = j
                            break
                else:
                    r = 0
                cur = root_idx[r]
                for kidx in range(n_kinds):
                    alive[kidx] = init_counts[r, kidx]
                n_dying = 0

                for e in range(n_events):
                    code = op[e]
                    if code == OP_SPLIT:
                        if ebranch[e] != cur:
                            continue
                        off = child_off[e]
                        nch = nchild[e]
                        if nch == 1:
                            cur = child_branch[off]
                            continue
                        u = uniform53(k0, k1, counter, stream)
                        counter += 1
                        j = nch - 1
                        for c in range(nch):
                            if u < child_cum[off + c]:
                                j = c
                                break
                        cur = child_branch[off + j]
                    elif code == OP_DEATH_INSTANT or code == OP_DEATH_LINGER:
                        if ebranch[e] != cur:
                            continue
                        kind = ekind[e]
                        count = alive[kind]
                        if count <= 0.0:
                            continue
                        fraction = xs[e]
                        if fraction <= 0.0:
                            killed = 0.0
                        elif fraction >= 1.0:
                            killed = count
                        else:
                            rounded = rint(count)
                            if count - rounded < 1e-9 and rounded - count < 1e-9 \
                                    and 1.0 <= rounded <= BINOMIAL_MAX \
                                    and rounded * log(1.0 - fraction) > -690.0:
                                u = uniform53(k0, k1, counter, stream)
                                counter += 1
                                killed = binomial_icdf(u, rounded, fraction)
                            else:
                                killed = count * fraction
                        alive[kind] = count - killed
                        if code == OP_DEATH_LINGER and killed > 0.0:
                            dying_kind[n_dying] = kind
                            dying_remaining[n_dying] = ys[e]
                            dying_count[n_dying] = killed
                            n_dying += 1
                    elif code == OP_TIME:
                        dt = xs[e]
                        for j in range(n_dying):
                            dying_remaining[j] -= dt

                out_root[trial] = r
                out_leaf[trial] = cur
                for kidx in range(n_kinds):
                    out_alive[trial, kidx] = alive[kidx]
                    out_conscious[trial, kidx] = alive[kidx]
                for j in range(n_dying):
                    if dying_remaining[j] > 1e-12:
                        out_conscious[trial, dying_kind[j]] += dying_count[j]
    finally:
        free(alive)
        free(dying_kind)
        free(dying_remaining)
        free(dying_count)

    return out_root_arr, out_leaf_arr, out_alive_arr, out_conscious_arr
