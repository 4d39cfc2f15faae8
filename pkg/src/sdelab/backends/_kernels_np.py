"""Pure-numpy implementations of the hot per-step kernels.

Mirrors the compiled module in ``_kernels.pyx``; selected automatically when
the extension is unavailable or when ``SDELAB_BACKEND=numpy`` is set.
"""

import numpy as np

NAME = "numpy"


def gm1d_eps(x, mu_t, var_t, root_one_minus_ab, out=None):
    """Noise prediction of the symmetric two-mode mixture, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    score = (mu_t / var_t) * np.tanh(mu_t * x / var_t) - x / var_t
    eps = -root_one_minus_ab * score
    if out is not None:
        out[...] = eps
        return out
    return eps


def gm1d_step(x, mu_t, var_t, root_one_minus_ab_s, c1, c2, sigma, noise,
              out=None):
    """Fused sampler update ``c1*x + c2*eps(x) + sigma*noise`` for the mixture.

    ``noise`` may be None when ``sigma`` is zero.
    """
    eps = gm1d_eps(x, mu_t, var_t, root_one_minus_ab_s)
    new = c1 * np.asarray(x, dtype=np.float64) + c2 * eps
    if sigma != 0.0:
        new += sigma * noise
    if out is not None:
        out[...] = new
        return out
    return new


def empirical_eps(x, centers, var, root_one_minus_ab, out=None):
    """Noise prediction of a finite-support mixture with common variance.

    Parameters
    ----------
    x : (P, D) array
    centers : (K, D) array
        Mixture centers already scaled by ``sqrt(abar_t)``.
    var : float
        Common per-coordinate variance ``1 - abar_t``.
    root_one_minus_ab : float
        ``sqrt(1 - abar_t)``; converts the score to a noise prediction.
    """
    x = np.asarray(x, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    logw = -d2 / (2.0 * var)
    logw -= logw.max(axis=1, keepdims=True)
    w = np.exp(logw)
    w /= w.sum(axis=1, keepdims=True)
    weighted = w @ centers
    eps = (x - weighted) * (root_one_minus_ab / var)
    if out is not None:
        out[...] = eps
        return out
    return eps
