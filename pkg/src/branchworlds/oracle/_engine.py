"""Pure-Python trial engine.

Semantics must match ``_kernel.pyx`` bit for bit: both draw uniforms from the
same counter-based Philox4x32-10 stream keyed by (seed, trial index), and both
use the same inverse-CDF binomial walk, so a report never depends on which
backend ran it.

Per trial: if there are several root branches, one is sampled by weight (a
single realized world); each split of the current branch samples exactly one
outcome with probability equal to its fraction; death events apply only on
the sampled path, killing a Binomial(count, fraction) draw of copies when the
cohort is a modest whole number and the expected fraction otherwise.
"""

from __future__ import annotations

import math

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
_MASK32 = 0xFFFFFFFF

# Cohorts up to this size with whole-number counts get per-copy randomness.
BINOMIAL_MAX = 500

OP_SPLIT = 0
OP_DEATH_INSTANT = 1
OP_DEATH_LINGER = 2
OP_DECLINE = 3
OP_TIME = 4


def uniform53(k0: int, k1: int, counter: int, stream: int) -> float:
    """One 53-bit uniform in [0, 1) from the (counter, stream) lattice point."""
    c0 = counter & _MASK32
    c1 = (counter >> 32) & _MASK32
    c2 = stream & _MASK32
    c3 = (stream >> 32) & _MASK32
    for _ in range(10):
        p0 = PHILOX_M0 * c0
        p1 = PHILOX_M1 * c2
        hi0 = (p0 >> 32) & _MASK32
        lo0 = p0 & _MASK32
        hi1 = (p1 >> 32) & _MASK32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
        k0 = (k0 + PHILOX_W0) & _MASK32
        k1 = (k1 + PHILOX_W1) & _MASK32
    return ((c0 >> 5) * 67108864.0 + (c1 >> 6)) / 9007199254740992.0


def binomial_icdf(u: float, n: float, p: float) -> float:
    """Inverse-CDF binomial sample; one uniform in, one count out.

    ``n`` is a whole number passed as a double so the arithmetic matches the
    compiled kernel exactly.
    """
    q = 1.0 - p
    pmf = q ** n
    cdf = pmf
    k = 0.0
    while u > cdf and k < n:
        pmf *= ((n - k) / (k + 1.0)) * (p / q)
        k += 1.0
        cdf += pmf
    return k


def samplable(count: float, fraction: float) -> bool:
    """Whether a death event gets per-copy randomness.

    Requires a whole-number cohort of tractable size whose zero-survivor
    probability is representable (``(1-f)**n`` must not underflow); anything
    else dies at the expected fraction deterministically.
    """
    if not 0.0 < fraction < 1.0:
        return False
    rounded = float(round(count))
    if abs(count - rounded) >= 1e-9 or not 1.0 <= rounded <= BINOMIAL_MAX:
        return False
    return rounded * math.log(1.0 - fraction) > -690.0


def _kill_count(u_next, count: float, fraction: float) -> float:
    if fraction <= 0.0:
        return 0.0
    if fraction >= 1.0:
        return count
    if samplable(count, fraction):
        return binomial_icdf(u_next(), float(round(count)), fraction)
    return count * fraction


def run_program(program, n_trials: int, seed: int):
    """Run all trials; returns (root, leaf, alive, conscious) plain lists."""
    k0 = seed & _MASK32
    k1 = (seed >> 32) & _MASK32
    root_idx = program.root_idx.tolist()
    root_cum = program.root_cum.tolist()
    init_counts = program.init_counts.tolist()
    op = program.op.tolist()
    ebranch = program.ebranch.tolist()
    ekind = program.ekind.tolist()
    child_off = program.child_off.tolist()
    nchild = program.nchild.tolist()
    xs = program.x.tolist()
    ys = program.y.tolist()
    child_branch = program.child_branch.tolist()
    child_cum = program.child_cum.tolist()
    n_kinds = len(program.kind_labels)
    n_roots = len(root_idx)
    n_events = len(op)

    out_root = [0] * n_trials
    out_leaf = [0] * n_trials
    out_alive = [[0.0] * n_kinds for _ in range(n_trials)]
    out_conscious = [[0.0] * n_kinds for _ in range(n_trials)]

    for trial in range(n_trials):
        counter = 0

        def draw() -> float:
            nonlocal counter
            u = uniform53(k0, k1, counter, trial)
            counter += 1
            return u

        if n_roots > 1:
            u = draw()
            r = n_roots - 1
            for j in range(n_roots):
                if u < root_cum[j]:
                    r = j
                    break
        else:
            r = 0
        cur = root_idx[r]
        alive = list(init_counts[r])
        dying: list[list[float]] = []  # [kind, remaining, count]

        for e in range(n_events):
            code = op[e]
            if code == OP_SPLIT:
                if ebranch[e] != cur:
                    continue
                off = child_off[e]
                n = nchild[e]
                if n == 1:
                    cur = child_branch[off]
                    continue
                u = draw()
                j = n - 1
                for c in range(n):
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
                killed = _kill_count(draw, count, xs[e])
                alive[kind] = count - killed
                if code == OP_DEATH_LINGER and killed > 0.0:
                    dying.append([float(kind), ys[e], killed])
            elif code == OP_TIME:
                dt = xs[e]
                for entry in dying:
                    entry[1] -= dt
            # OP_DECLINE leaves copy counts alone: a lowered consciousness
            # degree scales measure, not the number of copies.

        out_root[trial] = r
        out_leaf[trial] = cur
        row_alive = out_alive[trial]
        row_conscious = out_conscious[trial]
        for kidx in range(n_kinds):
            row_alive[kidx] = alive[kidx]
            row_conscious[kidx] = alive[kidx]
        for kind_f, remaining, count in dying:
            if remaining > 1e-12:
                row_conscious[int(kind_f)] += count
    return out_root, out_leaf, out_alive, out_conscious
