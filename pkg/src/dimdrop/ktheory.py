"""Computable K-theory for the supported base algebras.

For the scalar and matrix bases ``K_1`` vanishes; for loops ``C(S^1, M_N)`` the
class of a unitary is the winding number of its determinant loop.  ``K_0``
data of a projection is its (constant) fiberwise rank, and a projection is
full exactly when that rank is positive everywhere.

Corner classes are computed by extending a corner unitary ``v`` of ``pAp``
to ``v + (1 - p)``; for a full corner this realizes the inclusion
isomorphism on ``K_1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import core, loops
from .algebra import AlgebraElement, GridPath
from .config import DEFAULT_TOLERANCES
from .errors import (
    ClassMismatch,
    ConfigError,
    NotCoprime,
    NotCornerUnitary,
    NyquistViolation,
    RankJump,
    SubprojectionFailure,
)


# ---------------------------------------------------------------- windings

def phase_windings(values, axis=-1):
    """Winding numbers of cyclic sequences of nonzero complex numbers.

    Sums the principal-branch phase increments between neighbours (including
    the wrap from the last sample back to the first) along ``axis``.
    Raises :class:`NyquistViolation` if any increment reaches ``pi``.
    """
    values = np.moveaxis(np.asarray(values, dtype=complex), axis, -1)
    nxt = np.roll(values, -1, axis=-1)
    inc = np.angle(nxt * np.conj(values))
    worst = float(np.abs(inc).max()) if inc.size else 0.0
    if worst >= np.pi * (1 - 1e-9):
        raise NyquistViolation(worst)
    total = inc.sum(axis=-1) / (2 * np.pi)
    return np.rint(total).astype(int)


def det_windings(fibers):
    """Determinant winding of loops stacked as ``(..., G, D, D)``."""
    return phase_windings(np.linalg.det(fibers), axis=-1)


def det_winding(loop):
    """Winding number of ``z -> det u(z)`` for a cyclic sequence of unitaries.

    ``loop`` is an array ``(G, D, D)`` or a circle-based :class:`AlgebraElement`.
    """
    if isinstance(loop, AlgebraElement):
        loop = loop.fibers
    return int(det_windings(np.asarray(loop)))


@dataclass(frozen=True)
class K1Class:
    """``K_1`` class: one winding for circle bases, none otherwise."""

    windings: tuple = ()

    def __add__(self, other):
        if len(self.windings) != len(other.windings):
            raise ClassMismatch(self.windings, other.windings)
        return K1Class(tuple(a + b for a, b in zip(self.windings, other.windings)))

    def __neg__(self):
        return K1Class(tuple(-a for a in self.windings))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, k):
        return K1Class(tuple(k * a for a in self.windings))

    __rmul__ = __mul__

    @property
    def is_zero(self):
        return all(a == 0 for a in self.windings)

    @property
    def value(self):
        """The winding as an ``int`` (0 for bases without ``K_1``)."""
        return self.windings[0] if self.windings else 0

    def to_list(self):
        return list(self.windings)


def k1_class(u):
    if not u.base.has_k1:
        return K1Class()
    return K1Class((det_winding(u.fibers),))


def k1_representative(base, c, d=1):
    """``diag(z^c, 1, ..., 1)`` in ``M_d(A)`` (the identity when ``K_1 = 0``)."""
    c = c.value if isinstance(c, K1Class) else int(c)
    dim = d * base.N
    if not base.has_k1:
        if c:
            raise ConfigError(f"{base.label()} has trivial K1; class {c} is not realizable")
        return AlgebraElement.identity(base, d)
    fibers = np.broadcast_to(np.eye(dim, dtype=complex), (base.G, dim, dim)).copy()
    fibers[:, 0, 0] = base.points() ** c
    return AlgebraElement(base, fibers)


# ---------------------------------------------------------------- U_0 paths

def _point_log(u):
    phases, vecs = core.eig_unitary(u)
    return (vecs * (1j * phases)) @ vecs.conj().T


def contract_to_identity(w, circle, T):
    """Path ``(T+1, F, d, d)`` from the unitary fibers ``w`` to the identity.

    Point bases use the principal logarithm; circle bases contract the loop
    (zero determinant winding required).  End samples are exact.
    """
    w = np.asarray(w, dtype=complex)
    d = w.shape[-1]
    eye = np.broadcast_to(np.eye(d, dtype=complex), w.shape)
    if d == 0:
        return np.zeros((T + 1,) + w.shape, dtype=complex)
    if circle:
        path = loops.null_homotopy(w, closed=True, total=T)
    else:
        ts = np.linspace(0.0, 1.0, T + 1)
        logs = np.stack([_point_log(x) for x in w])
        path = core.expm_skew((1 - ts)[:, None, None, None] * logs[None])
    path[0] = w
    path[-1] = eye
    return path


def connect_in_u0(u, v, T):
    """A unitary path (``GridPath`` of resolution ``T``) from ``u`` to ``v``.

    Over the circle the loop ``u* v`` is contracted with a tracked continuous
    logarithm (see :mod:`dimdrop.loops`); equal classes are required.
    """
    if u.base != v.base or u.dim != v.dim:
        raise ConfigError("u and v must live in the same matrix algebra")
    cu, cv = k1_class(u), k1_class(v)
    if cu != cv:
        raise ClassMismatch(cu.to_list(), cv.to_list())
    w = core.adjoint(u.fibers) @ v.fibers
    path = u.fibers[None] @ contract_to_identity(w, u.base.has_k1, T)[::-1]
    path[0] = u.fibers
    path[-1] = v.fibers
    return GridPath(u.base, path)


# ---------------------------------------------------------------- K_0 data

@dataclass(frozen=True)
class K0Data:
    rank: int
    full: bool


def fiber_ranks(p):
    fibers = p.fibers if isinstance(p, AlgebraElement) else np.asarray(p)
    herm = 0.5 * (fibers + core.adjoint(fibers))
    return (np.linalg.eigvalsh(herm) > 0.5).sum(axis=-1)


def rank_fullness(p, tol=DEFAULT_TOLERANCES.tol):
    if not p.is_projection(tol):
        raise ConfigError("rank_fullness expects a projection")
    ranks = fiber_ranks(p)
    if np.any(ranks != ranks[0]):
        raise RankJump([int(r) for r in ranks])
    r = int(ranks[0])
    return K0Data(rank=r, full=r >= 1)


# ---------------------------------------------------------------- Bezout

def bezout(m, n):
    """``(j, k)`` with ``j m + k n = 1`` and ``|j|`` as small as possible."""
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ConfigError("bezout expects positive integers")
    try:
        j0 = pow(m, -1, n)
    except ValueError:
        raise NotCoprime(m, n) from None
    candidates = []
    for j in (j0, j0 - n):
        k, rem = divmod(1 - j * m, n)
        if rem == 0:
            candidates.append((abs(j), abs(k), -j, j, k))
    _, _, _, j, k = min(candidates)
    return j, k


# ---------------------------------------------------------------- corners

def corner_compress(x, p):
    """``p x p``."""
    return p @ x @ p


def corner_k1(vp, p, tol=1e-8):
    """Class of a corner unitary ``vp`` of ``pAp`` via ``vp + (1 - p)``."""
    one = AlgebraElement.identity(p.base, p.amp)
    d1 = core.max_opnorm(vp.adjoint().fibers @ vp.fibers - p.fibers)
    d2 = core.max_opnorm(vp.fibers @ vp.adjoint().fibers - p.fibers)
    if max(d1, d2) > tol:
        raise NotCornerUnitary(f"v*v, vv* differ from p by {max(d1, d2):.3e}")
    return k1_class(vp + (one - p))


def projection_frame(p, tol=1e-6):
    """Continuous orthonormal frame ``F`` with ``F F* = p`` at every fiber.

    Returns an array ``(F, D, r)``.  Over the circle, eigenvectors are parallel
    transported from fiber to fiber and the holonomy is spread back evenly,
    so the frame closes up at the wrap.
    """
    fibers = p.fibers if isinstance(p, AlgebraElement) else np.asarray(p)
    ranks = fiber_ranks(fibers)
    if np.any(ranks != ranks[0]):
        raise RankJump([int(r) for r in ranks])
    r = int(ranks[0])
    nf, d = fibers.shape[0], fibers.shape[-1]
    herm = 0.5 * (fibers + core.adjoint(fibers))
    _, vecs = np.linalg.eigh(herm)
    eig = vecs[..., d - r:][..., ::-1]
    frame = np.empty((nf, d, r), dtype=complex)
    frame[0] = eig[0]
    if nf == 1 or r == 0:
        return eig.copy()

    def transport(target, prev):
        overlap = core.adjoint(target) @ prev
        sv = np.linalg.svd(overlap, compute_uv=False)
        if sv.min() < 0.5:
            raise SubprojectionFailure(
                f"neighbouring fibers nearly orthogonal (overlap {sv.min():.3f}); refine the grid"
            )
        return target @ core.polar_unitary(overlap)

    for g in range(1, nf):
        frame[g] = transport(eig[g], frame[g - 1])
    closing = transport(eig[0], frame[-1])
    hol = core.adjoint(frame[0]) @ closing
    log = _point_log(core.polar_unitary(hol))
    spread = core.expm_skew(-(np.arange(nf) / nf)[:, None, None] * log[None])
    frame = frame @ spread
    if core.max_opnorm(frame @ core.adjoint(frame) - fibers) > tol:
        raise SubprojectionFailure("frame does not reproduce the projection")
    return frame


def rank_one_subprojection(p):
    """Continuous rank-one subprojection of a full projection."""
    frame = projection_frame(p)
    if frame.shape[-1] == 0:
        raise SubprojectionFailure("projection has rank 0")
    col = frame[..., :1]
    fibers = col @ core.adjoint(col)
    return p.with_fibers(fibers) if isinstance(p, AlgebraElement) else fibers


def corner_unitary(p, c):
    """Unitary ``p + (z^c - 1) P_1`` of ``pAp`` with corner class ``c``."""
    c = c.value if isinstance(c, K1Class) else int(c)
    if c == 0:
        return p
    if not p.base.has_k1:
        raise ConfigError(f"{p.base.label()} has trivial K1")
    p1 = rank_one_subprojection(p)
    z = p.base.points() ** c
    return p.with_fibers(p.fibers + (z[:, None, None] - 1) * p1.fibers)
