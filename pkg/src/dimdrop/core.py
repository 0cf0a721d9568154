"""Dense complex-matrix arithmetic and unitary-group geometry.

All functions accept stacks of square matrices (arrays of shape ``(..., d, d)``)
and broadcast over the leading axes.  Nothing here mutates its inputs.

Kronecker convention
--------------------
``tensor_product(a, b)`` places ``b`` on the *outer* block index: the composite
row index of ``a[i1, j1] * b[i2, j2]`` is ``i2 * m + i1`` where ``m`` is the size
of ``a``.  Consequently ``tensor_product(x, identity(n))`` is block diagonal with
``n`` copies of ``x``.  An element of ``M_n(A)`` is stored with the ``M_n`` index
outermost and the fiber of ``A`` innermost; every identification in the package
routes through this one convention.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .config import DEFAULT_TOLERANCES
from .errors import BranchFailure, NotUnitary

ComplexMatrix = np.ndarray


def identity(n, dtype=complex):
    return np.eye(n, dtype=dtype)


def matrix_unit(i, j, n):
    """The standard matrix unit ``e_{i,j}`` of ``M_n`` (1-based indices)."""
    e = np.zeros((n, n), dtype=complex)
    e[i - 1, j - 1] = 1.0
    return e


def adjoint(x):
    return np.conj(np.swapaxes(x, -1, -2))


def tensor_product(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    m = a.shape[-1]
    n = b.shape[-1]
    out = np.einsum("...ij,...kl->...kilj", a, b)
    return out.reshape(out.shape[:-4] + (m * n, m * n))


def kron_identity(x, n):
    """``x ⊗ 1_n``: block diagonal with ``n`` copies of ``x``."""
    x = np.asarray(x)
    d = x.shape[-1]
    out = np.zeros(x.shape[:-2] + (n * d, n * d), dtype=np.result_type(x, complex))
    for i in range(n):
        out[..., i * d:(i + 1) * d, i * d:(i + 1) * d] = x
    return out


def direct_sum(a, b):
    """``diag(a, b)`` with ``a`` in the upper-left corner.

    Either summand may have size 0.  Leading (batch) axes broadcast.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    p, q = a.shape[-1], b.shape[-1]
    lead = np.broadcast_shapes(a.shape[:-2], b.shape[:-2])
    out = np.zeros(lead + (p + q, p + q), dtype=np.result_type(a, b, complex))
    out[..., :p, :p] = a
    out[..., p:, p:] = b
    return out


def pad_identity(x, extra):
    """``x ⊕ 1`` where the identity block has raw size ``extra``."""
    x = np.asarray(x)
    if extra == 0:
        return x.astype(complex, copy=True)
    return direct_sum(x, identity(extra))


def opnorm(x):
    """Operator (spectral) norm of each matrix in a stack."""
    x = np.asarray(x)
    if x.shape[-1] == 0:
        return np.zeros(x.shape[:-2])
    gram = adjoint(x) @ x
    top = np.linalg.eigvalsh(gram)[..., -1]
    return np.sqrt(np.maximum(top, 0.0))


_POWER_STEPS = 8
_EXACT_BATCH = 64


def _fro(flat):
    return np.sqrt(np.einsum("kij,kij->k", flat.real, flat.real)
                   + np.einsum("kij,kij->k", flat.imag, flat.imag))


def max_opnorm(x, floor=0.0):
    """Maximum operator norm over a stack, computed exactly.

    The matrices with the largest Frobenius norms are solved exactly first;
    only those whose Frobenius norm exceeds the best value found stay in play.
    These are normalized by their Frobenius norms.  A few power iterations on
    the Gram matrices give lower bounds; the Frobenius norm of the Gram matrix
    (squared up to three times while too many candidates remain) gives upper
    bounds.  Exact eigen-solves run only on matrices whose upper bound beats the
    best lower bound.  If every Frobenius norm is at most ``floor`` the largest
    of them is returned instead: an upper bound that skips the work for
    rounding-level residuals.
    """
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    flat = x.reshape((-1,) + x.shape[-2:])
    fro = _fro(flat)
    top = float(fro.max())
    if top <= floor or top == 0.0:
        return top
    order = np.argsort(-fro, kind="stable")
    best = float(opnorm(flat[order[:_EXACT_BATCH]]).max())
    rest = order[_EXACT_BATCH:]
    keep = rest[fro[rest] > best]
    if keep.size == 0:
        return best
    y = flat[keep] / fro[keep, None, None]
    g = adjoint(y) @ y
    lead = np.argmax(np.einsum("kii->ki", g).real, axis=-1)
    v = np.take_along_axis(g, lead[:, None, None], axis=-1)
    for _ in range(_POWER_STEPS):
        v = g @ v
        v /= np.sqrt(np.einsum("kij,kij->k", v.real, v.real)
                     + np.einsum("kij,kij->k", v.imag, v.imag))[:, None, None]
    rayleigh = np.einsum("kij,kil->k", v.conj(), g @ v).real
    best = max(best, float((fro[keep] * np.sqrt(np.maximum(rayleigh, 0.0))).max()))
    cand = np.arange(keep.size)
    power = 2
    while True:
        upper = fro[keep[cand]] * _fro(g) ** (1 / power)
        sel = upper > best
        cand, g, upper = cand[sel], g[sel], upper[sel]
        if cand.size <= _EXACT_BATCH or power >= 16:
            break
        g = g @ g
        power *= 2
    order = np.argsort(-upper, kind="stable")
    start, chunk = 0, _EXACT_BATCH
    while start < order.size and upper[order[start]] > best:
        idx = keep[cand[order[start:start + chunk]]]
        best = max(best, float(opnorm(flat[idx]).max()))
        start += chunk
        chunk *= 2
    return best


def unitarity_defect(u):
    """``||u* u - 1||`` in operator norm (array for stacked input)."""
    u = np.asarray(u)
    d = u.shape[-1]
    return opnorm(adjoint(u) @ u - np.eye(d))


NOISE_FLOOR = 1e-12


def max_unitarity_defect(u, floor=NOISE_FLOOR):
    """Worst ``||u* u - 1||`` over a stack (upper bound once below ``floor``)."""
    u = np.asarray(u)
    d = u.shape[-1]
    return max_opnorm(adjoint(u) @ u - np.eye(d), floor)


def determinant(u):
    return np.linalg.det(u)


def is_unitary(u, tol=DEFAULT_TOLERANCES.tol):
    return max_unitarity_defect(u) <= tol


def is_special_unitary(u, tol=DEFAULT_TOLERANCES.tol):
    return is_unitary(u, tol) and bool(np.all(np.abs(determinant(u) - 1.0) <= tol))


def is_projection(p, tol=DEFAULT_TOLERANCES.tol):
    p = np.asarray(p)
    return max_opnorm(p - adjoint(p)) <= tol and max_opnorm(p @ p - p) <= tol


def is_skew_hermitian(x, tol=DEFAULT_TOLERANCES.tol):
    x = np.asarray(x)
    return max_opnorm(x + adjoint(x)) <= tol


def is_partial_isometry(v, tol=DEFAULT_TOLERANCES.tol):
    v = np.asarray(v)
    return is_projection(adjoint(v) @ v, tol)


def eig_unitary(u):
    """Eigen-phases (ascending, in ``(-pi, pi]``) and orthonormal eigenvectors.

    Uses the complex Schur form, which is diagonal for normal matrices and
    always returns a unitary basis, even for repeated eigenvalues.
    """
    t, z = scipy.linalg.schur(np.asarray(u, dtype=complex), output="complex")
    phases = np.angle(np.diag(t))
    order = np.argsort(phases, kind="stable")
    return phases[order], z[:, order]


def expm_skew(x):
    """Matrix exponential of skew-Hermitian input via ``eigh`` (batched)."""
    x = np.asarray(x)
    herm = -1j * x
    herm = 0.5 * (herm + adjoint(herm))
    w, v = np.linalg.eigh(herm)
    return (v * np.exp(1j * w)[..., None, :]) @ adjoint(v)


def _check_unitary(u, tol):
    defect = max_unitarity_defect(u)
    if defect > tol:
        raise NotUnitary(defect, tol)


def unitary_log(u, tol=DEFAULT_TOLERANCES.tol, branch_margin=DEFAULT_TOLERANCES.branch_margin):
    """Principal logarithm of a unitary (or a stack of unitaries).

    The result is skew-Hermitian with eigen-phases in ``(-pi, pi)``.  Raises
    :class:`BranchFailure` when an eigen-phase lies within ``branch_margin``
    of ``pi``.
    """
    u = np.asarray(u, dtype=complex)
    _check_unitary(u, tol)
    d = u.shape[-1]
    flat = u.reshape((-1, d, d))
    out = np.empty_like(flat)
    for i, m in enumerate(flat):
        phases, vecs = eig_unitary(m)
        dist = np.pi - np.abs(phases)
        if d and dist.min() < branch_margin:
            raise BranchFailure(float(dist.min()), branch_margin)
        log = (vecs * (1j * phases)) @ vecs.conj().T
        out[i] = 0.5 * (log - log.conj().T)
    return out.reshape(u.shape)


def unitary_log_any(u):
    """A logarithm of a unitary with eigen-phases in ``(-pi, pi]``.

    Unlike :func:`unitary_log` this accepts eigenvalues at ``-1``; the choice
    of branch there is deterministic (phase ``+pi``) but not continuous in
    ``u``.
    """
    phases, vecs = eig_unitary(u)
    phases = np.where(phases <= -np.pi + 1e-12, np.pi, phases)
    log = (vecs * (1j * phases)) @ vecs.conj().T
    return 0.5 * (log - log.conj().T)


def unitary_geodesic(u0, u1, t, tol=DEFAULT_TOLERANCES.tol,
                     branch_margin=DEFAULT_TOLERANCES.branch_margin):
    """``u0 · exp(t · log(u0* u1))``; scalar or array ``t``.

    For array ``t`` of shape ``(k,)`` the result has shape ``(k, d, d)``.
    """
    u0 = np.asarray(u0, dtype=complex)
    u1 = np.asarray(u1, dtype=complex)
    log = unitary_log(adjoint(u0) @ u1, tol, branch_margin)
    t = np.asarray(t, dtype=float)
    if t.ndim == 0:
        return u0 @ expm_skew(t * log)
    return u0 @ expm_skew(t.reshape(t.shape + (1,) * log.ndim) * log)


def random_skew_hermitian(dim, rng):
    x = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(dim)
    return 0.5 * (x - x.conj().T)


def random_unitary(dim, rng):
    """Seeded random unitary: ``exp`` of a random skew-Hermitian matrix whose
    real and imaginary parts are standard normal scaled by ``1/sqrt(dim)``."""
    return expm_skew(random_skew_hermitian(dim, rng))


def random_unitary_bounded(dim, rng, max_phase=2.5):
    """Random unitary whose eigen-phases lie in ``(-max_phase, max_phase)``."""
    h = -1j * random_skew_hermitian(dim, rng)
    w, v = np.linalg.eigh(h)
    scale = max_phase * 0.999 / max(np.abs(w).max(), max_phase)
    return (v * np.exp(1j * w * scale)) @ v.conj().T


def special_unitary_part(u):
    """Scale ``u`` by a scalar phase so its determinant is 1 (principal root)."""
    d = u.shape[-1]
    det = np.linalg.det(u)
    return u * np.exp(-1j * np.angle(det) / d)[..., None, None]


def polar_unitary(x):
    """Unitary factor of the polar decomposition (closest unitary/isometry)."""
    uu, _, vh = np.linalg.svd(x, full_matrices=False)
    return uu @ vh
