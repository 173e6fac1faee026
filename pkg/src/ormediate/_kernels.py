"""Hot kernels for logistic fitting: log-likelihood, score, and information.

Two interchangeable implementations of the same arithmetic: a numba ``@njit``
version (used by default when numba is importable) and a pure-numpy version.
Setting the environment variable ``ORMEDIATE_DISABLE_NUMBA=1`` before import
forces the numpy path. ``use()`` switches backends at runtime, which is what
``benchmarks/bench_irls.py`` does to time both.

numba is imported lazily on first fit, so coefficient-only workflows never pay
JIT compile time.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = ["active_backend", "use", "loglik_score_info", "loglik"]

DISABLE_ENV = "ORMEDIATE_DISABLE_NUMBA"


def _loglik_score_info_numpy(X, y, beta):
    eta = X @ beta
    ll = float(y @ eta - np.logaddexp(0.0, eta).sum())
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    weight = mu * (1.0 - mu)
    score = X.T @ (y - mu)
    info = (X * weight[:, None]).T @ X
    return ll, score, info


def _loglik_numpy(X, y, beta):
    eta = X @ beta
    return float(y @ eta - np.logaddexp(0.0, eta).sum())


_NUMPY_IMPL = ("numpy", _loglik_score_info_numpy, _loglik_numpy)
_numba_impl = None
_numba_failed = False
_active = None


def _build_numba_impl():
    global _numba_impl, _numba_failed
    if _numba_impl is not None or _numba_failed:
        return _numba_impl
    try:
        from numba import njit
    except ImportError:
        _numba_failed = True
        return None

    @njit(cache=True)
    def loglik_score_info_nb(X, y, beta):  # pragma: no cover - compiled
        n, k = X.shape
        ll = 0.0
        score = np.zeros(k)
        info = np.zeros((k, k))
        for i in range(n):
            eta = 0.0
            for j in range(k):
                eta += X[i, j] * beta[j]
            if eta > 0.0:
                ll += y[i] * eta - (eta + np.log1p(np.exp(-eta)))
                mu = 1.0 / (1.0 + np.exp(-eta))
            else:
                ll += y[i] * eta - np.log1p(np.exp(eta))
                mu = np.exp(eta) / (1.0 + np.exp(eta))
            resid = y[i] - mu
            weight = mu * (1.0 - mu)
            for j in range(k):
                score[j] += X[i, j] * resid
                xw = X[i, j] * weight
                for m in range(j, k):
                    info[j, m] += xw * X[i, m]
        for j in range(k):
            for m in range(j):
                info[j, m] = info[m, j]
        return ll, score, info

    @njit(cache=True)
    def loglik_nb(X, y, beta):  # pragma: no cover - compiled
        n, k = X.shape
        ll = 0.0
        for i in range(n):
            eta = 0.0
            for j in range(k):
                eta += X[i, j] * beta[j]
            if eta > 0.0:
                ll += y[i] * eta - (eta + np.log1p(np.exp(-eta)))
            else:
                ll += y[i] * eta - np.log1p(np.exp(eta))
        return ll

    # warm the compile on a toy problem so fit() timings are honest
    tiny_X = np.ones((2, 1))
    tiny_y = np.array([0.0, 1.0])
    tiny_b = np.zeros(1)
    loglik_score_info_nb(tiny_X, tiny_y, tiny_b)
    loglik_nb(tiny_X, tiny_y, tiny_b)
    _numba_impl = ("numba", loglik_score_info_nb, loglik_nb)
    return _numba_impl


def _resolve_default():
    if os.environ.get(DISABLE_ENV, "").strip() not in ("", "0"):
        return _NUMPY_IMPL
    impl = _build_numba_impl()
    return impl if impl is not None else _NUMPY_IMPL


def use(name: str) -> str:
    """Select the kernel backend: "numba", "numpy", or "auto". Returns the
    name actually selected ("auto" resolves numba when available)."""
    global _active
    if name == "numpy":
        _active = _NUMPY_IMPL
    elif name == "numba":
        impl = _build_numba_impl()
        if impl is None:
            raise RuntimeError("numba backend requested but numba is not importable")
        _active = impl
    elif name == "auto":
        _active = _resolve_default()
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active[0]


def _impl():
    global _active
    if _active is None:
        _active = _resolve_default()
    return _active


def active_backend() -> str:
    return _impl()[0]


def loglik_score_info(X, y, beta):
    """Log-likelihood, score vector, and observed information of a logistic
    model at ``beta``. All three in one pass; this is the IRLS hot loop."""
    return _impl()[1](X, y, beta)


def loglik(X, y, beta):
    return _impl()[2](X, y, beta)
