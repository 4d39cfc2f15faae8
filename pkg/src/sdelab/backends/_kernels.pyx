# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-step kernels: fused score/noise-prediction updates.

Signatures mirror ``_kernels_np``; each function does one pass over the
ensemble instead of a chain of temporaries.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, sqrt, tanh

cnp.import_array()

NAME = "compiled"


def gm1d_eps(x, double mu_t, double var_t, double root_one_minus_ab, out=None):
    """Noise prediction of the symmetric two-mode mixture, elementwise."""
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    flat = x_arr.reshape(-1)
    out_arr = np.empty_like(x_arr) if out is None else out
    _gm1d_eps_impl(flat, mu_t, var_t, root_one_minus_ab, out_arr.reshape(-1))
    return out_arr


cdef void _gm1d_eps_impl(double[::1] x, double mu_t, double var_t,
                         double root, double[::1] out) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double ratio = mu_t / var_t
    for i in range(n):
        out[i] = -root * (ratio * tanh(mu_t * x[i] / var_t) - x[i] / var_t)


def gm1d_step(x, double mu_t, double var_t, double root_one_minus_ab_s,
              double c1, double c2, double sigma, noise, out=None):
    """Fused sampler update ``c1*x + c2*eps(x) + sigma*noise`` for the mixture."""
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    out_arr = np.empty_like(x_arr) if out is None else out
    if sigma != 0.0:
        noise_arr = np.ascontiguousarray(noise, dtype=np.float64)
        _gm1d_step_noise(x_arr.reshape(-1), mu_t, var_t, root_one_minus_ab_s,
                         c1, c2, sigma, noise_arr.reshape(-1),
                         out_arr.reshape(-1))
    else:
        _gm1d_step_det(x_arr.reshape(-1), mu_t, var_t, root_one_minus_ab_s,
                       c1, c2, out_arr.reshape(-1))
    return out_arr


cdef void _gm1d_step_noise(double[::1] x, double mu_t, double var_t,
                           double root, double c1, double c2, double sigma,
                           double[::1] noise, double[::1] out) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double ratio = mu_t / var_t
    cdef double eps
    for i in range(n):
        eps = -root * (ratio * tanh(mu_t * x[i] / var_t) - x[i] / var_t)
        out[i] = c1 * x[i] + c2 * eps + sigma * noise[i]


cdef void _gm1d_step_det(double[::1] x, double mu_t, double var_t,
                         double root, double c1, double c2,
                         double[::1] out) nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double ratio = mu_t / var_t
    cdef double eps
    for i in range(n):
        eps = -root * (ratio * tanh(mu_t * x[i] / var_t) - x[i] / var_t)
        out[i] = c1 * x[i] + c2 * eps


def empirical_eps(x, centers, double var, double root_one_minus_ab, out=None):
    """Noise prediction of a finite-support mixture with common variance.

    ``x`` is (P, D); ``centers`` (K, D) already scaled by ``sqrt(abar_t)``.
    """
    x_arr = np.ascontiguousarray(x, dtype=np.float64)
    c_arr = np.ascontiguousarray(centers, dtype=np.float64)
    out_arr = np.empty_like(x_arr) if out is None else out
    scratch = np.empty(c_arr.shape[0], dtype=np.float64)
    _empirical_eps_impl(x_arr, c_arr, var, root_one_minus_ab, scratch, out_arr)
    return out_arr


cdef void _empirical_eps_impl(double[:, ::1] x, double[:, ::1] centers,
                              double var, double root, double[::1] logw,
                              double[:, ::1] out) nogil:
    cdef Py_ssize_t p, k, j
    cdef Py_ssize_t np_ = x.shape[0], nk = centers.shape[0], nd = x.shape[1]
    cdef double inv2v = 1.0 / (2.0 * var)
    cdef double scale = root / var
    cdef double d2, diff, best, wsum, w
    for p in range(np_):
        best = -1e308
        for k in range(nk):
            d2 = 0.0
            for j in range(nd):
                diff = x[p, j] - centers[k, j]
                d2 += diff * diff
            logw[k] = -d2 * inv2v
            if logw[k] > best:
                best = logw[k]
        wsum = 0.0
        for k in range(nk):
            logw[k] = exp(logw[k] - best)
            wsum += logw[k]
        for j in range(nd):
            out[p, j] = x[p, j]
        for k in range(nk):
            w = logw[k] / wsum
            if w > 0.0:
                for j in range(nd):
                    out[p, j] -= w * centers[k, j]
        for j in range(nd):
            out[p, j] *= scale
