"""NumPy implementations of the hot kernels.

Same signatures as the compiled ``_core`` module; used when the extension
is not built or when ``RIDGELESS_PURE_PYTHON`` is set.
"""
import numpy as np

GAUSSIAN, LAPLACE, DIRICHLET = 0, 1, 2


def fold_axis(coeffs, first_k, N):
    """Aggregate a 1D coefficient run starting at frequency ``first_k`` into
    the N aliasing classes. Returns (signed, abs, squared) class sums."""
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    cls = np.mod(np.arange(first_k, first_k + coeffs.size), N)
    return (
        np.bincount(cls, coeffs, minlength=N),
        np.bincount(cls, np.abs(coeffs), minlength=N),
        np.bincount(cls, coeffs * coeffs, minlength=N),
    )


def fold_classes(values, classes, n_classes):
    values = np.ascontiguousarray(values, dtype=np.float64)
    classes = np.ascontiguousarray(classes, dtype=np.intp)
    return (
        np.bincount(classes, values, minlength=n_classes),
        np.bincount(classes, np.abs(values), minlength=n_classes),
        np.bincount(classes, values * values, minlength=n_classes),
    )


def _wrap(theta):
    return np.mod(theta + np.pi, 2.0 * np.pi) - np.pi


def _dirichlet(theta, order):
    s = np.sin(0.5 * theta)
    small = np.abs(s) < 1e-12
    safe = np.where(small, 1.0, s)
    return np.where(small, 2.0 * order + 1.0, np.sin((order + 0.5) * theta) / safe)


def kernel_matrix(family, M, points):
    points = np.ascontiguousarray(points, dtype=np.float64)
    diff = _wrap(points[:, None, :] - points[None, :, :])
    if family == GAUSSIAN:
        return np.exp(-(M * M) * np.sum(diff * diff, axis=-1))
    if family == LAPLACE:
        return np.exp(-M * np.sqrt(np.sum(diff * diff, axis=-1)))
    if family == DIRICHLET:
        return np.prod(_dirichlet(diff, M), axis=-1)
    raise ValueError(f"unknown family code {family}")
