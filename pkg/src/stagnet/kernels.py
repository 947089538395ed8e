"""Per-epoch hot loops.

Every kernel exists twice: an explicit-loop version compiled with numba and a
vectorised numpy version. Random draws are always made by the caller with a
numpy ``Generator`` so both paths consume identical inputs. Accumulations run
in the same order on both paths, which keeps results bit-identical.

Action encoding: 0 = cooperate (cycle), 1 = defect (car).
``table[a_row, a_col]`` holds ``(row payoff, column payoff)``.
"""

import numpy as np

from . import _accel
from ._accel import njit

SQUARED = 0
ABSOLUTE = 1


# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------


@njit
def _play_pairs_nb(s, pi, pj, atten, u_i, u_j, table, expected, n):
    acc_i = np.zeros(n)
    acc_j = np.zeros(n)
    for p in range(pi.shape[0]):
        i = pi[p]
        j = pj[p]
        if expected:
            si = s[i]
            sj = s[j]
            w00 = si * sj
            w01 = si * (1.0 - sj)
            w10 = (1.0 - si) * sj
            w11 = (1.0 - si) * (1.0 - sj)
            pay_i = w00 * table[0, 0, 0] + w01 * table[0, 1, 0] + w10 * table[1, 0, 0] + w11 * table[1, 1, 0]
            pay_j = w00 * table[0, 0, 1] + w01 * table[0, 1, 1] + w10 * table[1, 0, 1] + w11 * table[1, 1, 1]
        else:
            ai = 0 if u_i[p] < s[i] else 1
            aj = 0 if u_j[p] < s[j] else 1
            pay_i = table[ai, aj, 0]
            pay_j = table[ai, aj, 1]
        acc_i[i] += pay_i * atten[p]
        acc_j[j] += pay_j * atten[p]
    return acc_i + acc_j


@njit
def _neighbour_sums_nb(indptr, indices, s):
    n = indptr.shape[0] - 1
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            acc += s[indices[p]]
        out[i] = acc
    return out


@njit
def _best_neighbour_nb(indptr, indices, payoff):
    n = indptr.shape[0] - 1
    best = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        top = -np.inf
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            if payoff[j] > top:
                top = payoff[j]
                best[i] = j
    return best


@njit
def _revise_nb(s, opt, best, u, alpha, delta, eps):
    n = s.shape[0]
    out = np.empty(n)
    revised = 0
    for i in range(n):
        if u[i] < alpha:
            target = opt[i]
        elif best[i] >= 0:
            target = s[best[i]]
        else:
            target = s[i]
        v = s[i] + delta * (target - s[i])
        if v < 0.0:
            v = 0.0
        elif v > 1.0:
            v = 1.0
        out[i] = v
        if abs(v - s[i]) > eps:
            revised += 1
    return out, revised


@njit
def _deviation_terms_nb(indptr, indices, s, opt, mode):
    energy = 0.0
    dev = 0.0
    n = s.shape[0]
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            d = s[indices[p]] - s[i]
            energy += d * d if mode == SQUARED else abs(d)
        d = opt[i] - s[i]
        dev += d * d if mode == SQUARED else abs(d)
    return energy, dev


# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


def _play_pairs_np(s, pi, pj, atten, u_i, u_j, table, expected, n):
    si = s[pi]
    sj = s[pj]
    if expected:
        w00 = si * sj
        w01 = si * (1.0 - sj)
        w10 = (1.0 - si) * sj
        w11 = (1.0 - si) * (1.0 - sj)
        pay_i = w00 * table[0, 0, 0] + w01 * table[0, 1, 0] + w10 * table[1, 0, 0] + w11 * table[1, 1, 0]
        pay_j = w00 * table[0, 0, 1] + w01 * table[0, 1, 1] + w10 * table[1, 0, 1] + w11 * table[1, 1, 1]
    else:
        ai = (u_i >= si).astype(np.int64)
        aj = (u_j >= sj).astype(np.int64)
        pay_i = table[ai, aj, 0]
        pay_j = table[ai, aj, 1]
    acc_i = np.bincount(pi, weights=pay_i * atten, minlength=n)
    acc_j = np.bincount(pj, weights=pay_j * atten, minlength=n)
    return acc_i + acc_j


def _rows(indptr):
    n = indptr.shape[0] - 1
    return np.repeat(np.arange(n), np.diff(indptr))


def _neighbour_sums_np(indptr, indices, s):
    n = indptr.shape[0] - 1
    return np.bincount(_rows(indptr), weights=s[indices], minlength=n)


def _best_neighbour_np(indptr, indices, payoff):
    n = indptr.shape[0] - 1
    best = np.full(n, -1, dtype=np.int64)
    if indices.shape[0] == 0:
        return best
    rows = _rows(indptr)
    vals = payoff[indices]
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    rowmax = np.full(n, -np.inf)
    rowmax[nonempty] = np.maximum.reduceat(vals, indptr[nonempty])
    hits = np.flatnonzero(vals == rowmax[rows])
    # rows are sorted and neighbour ids ascend within a row: first hit wins
    hit_rows, first = np.unique(rows[hits], return_index=True)
    best[hit_rows] = indices[hits[first]]
    return best


def _revise_np(s, opt, best, u, alpha, delta, eps):
    own = s
    imitated = np.where(best >= 0, s[np.maximum(best, 0)], own)
    target = np.where(u < alpha, opt, imitated)
    out = np.clip(s + delta * (target - s), 0.0, 1.0)
    revised = int(np.count_nonzero(np.abs(out - s) > eps))
    return out, revised


def _deviation_terms_np(indptr, indices, s, opt, mode):
    d = s[indices] - s[_rows(indptr)]
    e = opt - s
    if mode == SQUARED:
        return float(np.dot(d, d)), float(np.dot(e, e))
    return float(np.abs(d).sum()), float(np.abs(e).sum())


# --------------------------------------------------------------------------
# dispatch
# --------------------------------------------------------------------------


def _pick(nb, np_):
    def run(*args):
        return nb(*args) if _accel.get_backend() == "numba" else np_(*args)

    run.__name__ = np_.__name__.replace("_np", "").lstrip("_")
    run.__doc__ = np_.__doc__
    return run


play_pairs = _pick(_play_pairs_nb, _play_pairs_np)
neighbour_sums = _pick(_neighbour_sums_nb, _neighbour_sums_np)
best_neighbour = _pick(_best_neighbour_nb, _best_neighbour_np)
revise = _pick(_revise_nb, _revise_np)
deviation_terms = _pick(_deviation_terms_nb, _deviation_terms_np)


def neighbour_means(indptr, indices, s):
    """Mean neighbour strategy per agent; agents without neighbours keep their own."""
    counts = np.diff(indptr)
    sums = neighbour_sums(indptr, indices, s)
    return np.where(counts > 0, sums / np.maximum(counts, 1), s)
