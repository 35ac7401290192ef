"""Linear-chain CRF: scoring, forward algorithm, marginals, Viterbi.

A path y over T steps with emissions E (T x K), transitions trans (K x K),
start scores s (K,) and end scores e (K,) scores

    s[y_0] + sum_t E[t, y_t] + sum_t trans[y_{t-1}, y_t] + e[y_{T-1}]

All computations run in double precision log space regardless of the
emission dtype; log-sum-exp is stabilized by max subtraction.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp


def sequence_score(
    E: np.ndarray, trans: np.ndarray, s: np.ndarray, e: np.ndarray, tags: np.ndarray
) -> float:
    """Unnormalized score of one tag path."""
    tags = np.asarray(tags)
    T = E.shape[0]
    if len(tags) != T:
        raise ValueError(f"path length {len(tags)} != {T} emission rows")
    score = float(s[tags[0]]) + float(e[tags[-1]])
    score += float(E[np.arange(T), tags].sum())
    score += float(trans[tags[:-1], tags[1:]].sum())
    return score


def crf_log_partition(
    E: np.ndarray, trans: np.ndarray, s: np.ndarray, e: np.ndarray
) -> float:
    """log sum over all tag paths of exp(path score), by the forward algorithm."""
    E = np.asarray(E, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    alpha = s.astype(np.float64) + E[0]
    for t in range(1, E.shape[0]):
        alpha = logsumexp(alpha[:, None] + trans, axis=0) + E[t]
    return float(logsumexp(alpha + e))


def nll_loss(
    E: np.ndarray, trans: np.ndarray, s: np.ndarray, e: np.ndarray, gold: np.ndarray
) -> float:
    """Negative log-likelihood of the gold path; always >= 0."""
    return crf_log_partition(E, trans, s, e) - sequence_score(E, trans, s, e, gold)


def nll_gradients(
    E: np.ndarray, trans: np.ndarray, s: np.ndarray, e: np.ndarray, gold: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Loss and its exact gradients w.r.t. E, trans, s, e.

    Uses forward-backward: the gradient of log Z w.r.t. a score is the
    corresponding marginal probability, from which the gold indicator is
    subtracted.
    """
    E = np.asarray(E, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    e = np.asarray(e, dtype=np.float64)
    gold = np.asarray(gold)
    T, K = E.shape

    alpha = np.empty((T, K))
    alpha[0] = s + E[0]
    for t in range(1, T):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + trans, axis=0) + E[t]
    log_z = float(logsumexp(alpha[-1] + e))

    beta = np.empty((T, K))
    beta[-1] = e
    for t in range(T - 2, -1, -1):
        beta[t] = logsumexp(trans + (beta[t + 1] + E[t + 1])[None, :], axis=1)

    node_marg = np.exp(alpha + beta - log_z)  # (T, K)

    dE = node_marg.copy()
    dE[np.arange(T), gold] -= 1.0
    d_trans = np.zeros((K, K))
    for t in range(1, T):
        pair = np.exp(
            alpha[t - 1][:, None] + trans + (E[t] + beta[t])[None, :] - log_z
        )
        d_trans += pair
        d_trans[gold[t - 1], gold[t]] -= 1.0
    ds = node_marg[0].copy()
    ds[gold[0]] -= 1.0
    de = node_marg[-1].copy()
    de[gold[-1]] -= 1.0

    loss = log_z - sequence_score(E, trans, s, e, gold)
    return loss, dE, d_trans, ds, de


def viterbi_decode(
    E: np.ndarray, trans: np.ndarray, s: np.ndarray, e: np.ndarray
) -> list[int]:
    """Highest-scoring tag path; ties break toward the lower tag index."""
    E = np.asarray(E, dtype=np.float64)
    trans = np.asarray(trans, dtype=np.float64)
    T, K = E.shape
    score = s.astype(np.float64) + E[0]
    back = np.empty((T, K), dtype=np.int64)
    for t in range(1, T):
        cand = score[:, None] + trans  # (prev, next)
        back[t] = np.argmax(cand, axis=0)  # argmax picks the lowest index on ties
        score = cand[back[t], np.arange(K)] + E[t]
    last = int(np.argmax(score + e))
    path = [last]
    for t in range(T - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return path
