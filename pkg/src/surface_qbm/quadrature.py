"""Composite Gauss-Legendre rules and a vectorised adaptive panel integrator."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import QuadratureError


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def composite_rule(breakpoints, n_per_panel: int):
    """Concatenated Gauss-Legendre nodes/weights over consecutive panels."""
    b = np.asarray(breakpoints, dtype=float)
    x0, w0 = gauss_legendre(n_per_panel)
    width = np.diff(b)
    nodes = (b[:-1, None] + width[:, None] * x0[None, :]).ravel()
    weights = (width[:, None] * w0[None, :]).ravel()
    return nodes, weights


@dataclass
class PanelResult:
    value: np.ndarray
    error: np.ndarray
    nodes: np.ndarray
    weights: np.ndarray
    samples: np.ndarray  # integrand values at ``nodes``, shape (len(nodes), m)


def adaptive_panels(func, breakpoints, order=16, rtol=1e-9, max_rounds=30, max_panels=4096, l1_floor=1e-6):
    """Integrate a vector-valued ``func`` over ``[breakpoints[0], breakpoints[-1]]``.

    ``func`` maps a 1-D array of nodes to an array of shape ``(len(nodes), m)``.
    Each panel is compared against its two halves; panels whose discrepancy
    exceeds their share of ``rtol * |total|`` are bisected until every
    component meets the tolerance.  Components that nearly cancel are judged
    against ``l1_floor`` times their L1 norm instead.  The returned node set
    (the halves of every accepted panel) can be reused to integrate other
    integrands of the same shape.
    """
    x0, w0 = gauss_legendre(order)
    b = np.unique(np.asarray(breakpoints, dtype=float))
    if b.size < 2:
        raise ValueError("need at least two distinct breakpoints")

    def halves(lo, hi):
        mid = 0.5 * (lo + hi)
        lo2 = np.concatenate([lo, mid])
        hi2 = np.concatenate([mid, hi])
        w = hi2 - lo2
        nodes = (lo2[:, None] + w[:, None] * x0).ravel()
        vals = np.asarray(func(nodes))
        if vals.ndim == 1:
            vals = vals[:, None]
        vals = vals.reshape(lo2.size, order, -1)
        est = np.einsum("pnm,n->pm", vals, w0) * w[:, None]
        l1 = np.einsum("pnm,n->pm", np.abs(vals), w0) * w[:, None]
        n = lo.size
        return nodes.reshape(2 * n, order), vals, est[:n] + est[n:], est[:n], est[n:], lo2, hi2, l1[:n] + l1[n:]

    lo, hi = b[:-1], b[1:]
    # coarse estimate of every starting panel
    width = hi - lo
    nodes = (lo[:, None] + width[:, None] * x0).ravel()
    vals = np.asarray(func(nodes))
    if vals.ndim == 1:
        vals = vals[:, None]
    coarse = np.einsum("pnm,n->pm", vals.reshape(lo.size, order, -1), w0) * width[:, None]

    done_nodes, done_vals, done_est, done_err, done_w, done_l1 = [], [], [], [], [], []
    span = b[-1] - b[0]
    pending = (lo, hi, coarse)
    for _ in range(max_rounds):
        lo, hi, coarse = pending
        nd, vl, fine, left, right, lo2, hi2, l1 = halves(lo, hi)
        err = np.abs(fine - coarse)
        total = (np.sum(done_est, axis=0) if done_est else 0.0) + fine.sum(axis=0)
        norm1 = (np.sum(done_l1, axis=0) if done_l1 else 0.0) + l1.sum(axis=0)
        scale = np.maximum(np.maximum(np.abs(total), l1_floor * norm1), 1e-300)
        share = (hi - lo)[:, None] / span
        # discrepancies at rounding level cannot be reduced by bisection
        ok = np.all(err <= np.maximum(rtol * scale * share, 100 * np.finfo(float).eps * l1), axis=1)
        n = lo.size
        for idx in np.flatnonzero(ok):
            for half in (idx, idx + n):
                done_nodes.append(nd[half])
                done_vals.append(vl[half])
                done_w.append((hi2[half] - lo2[half]) * w0)
            done_est.append(fine[idx])
            done_err.append(err[idx])
            done_l1.append(l1[idx])
        bad = np.flatnonzero(~ok)
        if bad.size == 0:
            break
        if len(done_est) + 2 * bad.size > max_panels:
            raise QuadratureError("adaptive panel limit reached", float(np.max(err[bad] / scale)))
        pending = (
            np.concatenate([lo2[bad], lo2[bad + n]]),
            np.concatenate([hi2[bad], hi2[bad + n]]),
            np.concatenate([left[bad], right[bad]]),
        )
    else:
        raise QuadratureError("adaptive panels did not converge", float(np.max(err / scale)))

    order_idx = np.argsort([v[0] for v in done_nodes])
    nodes = np.concatenate([done_nodes[i] for i in order_idx])
    weights = np.concatenate([done_w[i] for i in order_idx])
    samples = np.concatenate([done_vals[i] for i in order_idx])
    value = np.sum(done_est, axis=0)
    error = np.sum(done_err, axis=0)
    return PanelResult(value, error, nodes, weights, samples)
