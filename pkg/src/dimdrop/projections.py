"""Projection pipelines over dimension drop algebras.

Three constructions are implemented on sampled data:

* :func:`lemma34_pipeline` turns two Murray-von Neumann witnesses
  ``u0 in M_m(A)`` and ``u1 in M_n(A)`` (with ``u* (q ⊗ 1) u = p ⊗ 1``) into a
  unitary ``U`` of ``A ⊗ Z_{m,n}`` with ``U* (q ⊗ 1) U = p ⊗ 1``, after a
  Bezout correction that kills the obstructing corner ``K_1`` class;
* :func:`corollary36_complement` completes a partial isometry ``v`` to a
  unitary ``v + v⊥`` in the identity component;
* :func:`theorem39_intertwiner` builds a partial isometry ``V`` of
  ``A ⊗ Z_{m,n}`` with ``V* V = p ⊗ 1`` and ``V V* <= q ⊗ 1`` from
  subequivalence witnesses ``v0``, ``v1``.

Corners ``pAp`` are handled in coordinates: a continuous frame ``F`` with
``F F* = p`` identifies ``pAp`` with a matrix algebra over the same base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import core
from .algebra import AlgebraElement, BaseAlgebra, GridPath, dd_check
from .certificates import CertificateBuilder
from .config import DEFAULT_TOLERANCES
from .errors import (
    ClassMismatch,
    ConfigError,
    DimDropError,
    NotCoprime,
    NotFull,
    PreconditionViolation,
    StageError,
)
from .ktheory import (
    bezout,
    connect_in_u0,
    contract_to_identity,
    corner_compress,
    corner_k1,
    corner_unitary,
    k1_class,
    projection_frame,
    rank_fullness,
)


# ---------------------------------------------------------------- helpers

def _flat_base(base):
    """The same spectrum with ``N = 1``, used for corner coordinates."""
    if base.kind == "circle":
        return BaseAlgebra.circle(1, base.G)
    return BaseAlgebra.scalars() if base.kind == "scalars" else BaseAlgebra.matrices(1)


def _require_full(p, label):
    data = rank_fullness(p)
    if not data.full:
        raise NotFull(f"{label} is not full (rank {data.rank})")
    return data


def _require_close(label, x, y, tol):
    defect = core.max_opnorm(np.asarray(x) - np.asarray(y))
    if defect > tol:
        raise PreconditionViolation(label, defect)
    return defect


def _kron1(fibers, n):
    return core.kron_identity(fibers, n)


def _pad(x, blocks):
    """``x ⊕ 1`` with ``blocks`` further copies of the size of ``x``."""
    return x.with_fibers(core.pad_identity(x.fibers, blocks * x.dim))


def _stage(name, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except StageError:
        raise
    except DimDropError as exc:
        raise StageError(name, exc) from exc


def _sandwich(frame, x):
    """``F* x F`` for stacked frames ``(F, D, r)``."""
    return core.adjoint(frame) @ x @ frame


def _corner_path(x, frame, circle, T):
    """Path ``(T+1, F, D, D)`` from the corner part of ``x`` to the corner unit."""
    y = _sandwich(frame, x)
    path = contract_to_identity(y, circle, T)
    return np.einsum("fir,tfrs,fjs->tfij", frame, path, frame.conj(), optimize=True)


def _round(x):
    return float(f"{x:.6g}")


# ---------------------------------------------------------------- corrected unitary path

@dataclass
class Lemma34Result:
    """Output of :func:`lemma34_pipeline`.

    ``U`` is the unitary of ``A ⊗ Z_{m,n}``; ``corner_classes`` holds the
    classes of the ``p`` and ``1 - p`` corners of ``V`` before correction and
    ``corrected_classes`` those of the corrected ``Ṽ``.
    """

    U: object
    u0_corrected: AlgebraElement
    u1_corrected: AlgebraElement
    bezout: tuple
    corner_classes: list
    corrector_classes: list
    corrected_classes: list
    commutation_defect: float
    conjugation_defect: float
    endpoint_defects: tuple
    certificate: object
    tol: float
    endpoint_tol: float
    corrected: bool = True

    @property
    def passed(self):
        return bool(
            self.certificate.passed
            and self.conjugation_defect <= self.tol
            and max(self.endpoint_defects) <= self.endpoint_tol
        )

    def to_dict(self):
        out = self.certificate.to_dict()
        out.update({
            "corner_classes": list(self.corner_classes),
            "corrector_classes": list(self.corrector_classes),
            "corrected_classes": list(self.corrected_classes),
            "bezout": list(self.bezout),
            "corrected": self.corrected,
            "commutation_defect": self.commutation_defect,
            "conjugation_defect": self.conjugation_defect,
            "endpoint_defects": list(self.endpoint_defects),
            "pass": self.passed,
        })
        return out


def _check_witness(u, p, q, k, tol, label):
    """``u* (q ⊗ 1_k) u = p ⊗ 1_k`` within ``tol``."""
    if u.dim != k * p.dim:
        raise ConfigError(f"{label} must live in M_{k}(A)")
    if not u.is_unitary(tol):
        raise PreconditionViolation(f"{label} unitary", u.unitarity_defect())
    lhs = core.adjoint(u.fibers) @ _kron1(q.fibers, k) @ u.fibers
    return _require_close(f"{label}* (q ⊗ 1) {label} = p ⊗ 1", lhs, _kron1(p.fibers, k), tol)


def _corner_classes(x, P):
    one = AlgebraElement.identity(P.base, P.amp)
    return [corner_k1(corner_compress(x, P), P).value, corner_k1(corner_compress(x, one - P), one - P).value]


def lemma34_pipeline(p, q, u0, u1, m, n, T=256, tol=1e-8, endpoint_tol=1e-10, correct=True):
    """Unitary ``U`` of ``A ⊗ Z_{m,n}`` with ``U* (q ⊗ 1) U = p ⊗ 1``.

    Parameters
    ----------
    p, q : AlgebraElement
        Full projections of ``A`` (amplification 1 over their base).
    u0, u1 : AlgebraElement
        Unitaries of ``M_m(A)`` and ``M_n(A)`` with ``u* (q ⊗ 1) u = p ⊗ 1``.
    m, n : int
        Coprime sizes.
    T : int
        Interval resolution of ``U``.
    correct : bool
        Apply the Bezout correction; with ``correct=False`` a nonzero corner
        class of ``V`` makes the corner stage fail (negative control).

    Raises
    ------
    StageError
        Wrapping ``PreconditionViolation``, ``NotFull``, ``NotCoprime``,
        ``ClassMismatch``, ``UnwrapFailure`` or ``SubprojectionFailure``.
    """
    base = p.base
    mn = m * n

    def preconditions():
        if math.gcd(m, n) != 1:
            raise NotCoprime(m, n)
        _require_full(p, "p")
        _require_full(q, "q")
        _check_witness(u0, p, q, m, tol, "u0")
        _check_witness(u1, p, q, n, tol, "u1")
        return bezout(m, n)

    j, k = _stage("preconditions", preconditions)
    P = p.tensor_identity(mn)
    one = AlgebraElement.identity(base, P.amp)

    def classes():
        V = u1.tensor_identity(m).adjoint() @ u0.tensor_identity(n)
        comm = core.max_opnorm(V.fibers @ P.fibers - P.fibers @ V.fibers)
        if comm > tol:
            raise PreconditionViolation("V commutes with p ⊗ 1", comm)
        return V, comm, _corner_classes(V, P)

    V, comm, before = _stage("corner classes", classes)

    def correction():
        if not correct:
            return u0, u1, [0, 0]
        one_p = AlgebraElement.identity(base, p.amp) - p
        wp = corner_unitary(p, -before[0])
        wq = corner_unitary(one_p, -before[1])
        w = wp + wq
        cls = [corner_k1(wp, p).value, corner_k1(wq, one_p).value]
        return (
            u0 @ _pad(w.power(k), m - 1),
            u1 @ _pad(w.power(-j), n - 1),
            cls,
        )

    v0, v1, corrector = _stage("correction", correction)

    def corrected_classes():
        Vt = v1.tensor_identity(m).adjoint() @ v0.tensor_identity(n)
        after = _corner_classes(Vt, P)
        for c in after:
            if c:
                raise ClassMismatch(c, 0)
        return Vt, after

    Vt, after = _stage("corrected classes", corrected_classes)

    def corner_paths():
        circle = base.has_k1
        fp = projection_frame(P)
        fq = projection_frame(one - P)
        return _corner_path(Vt.fibers, fp, circle, T) + _corner_path(Vt.fibers, fq, circle, T)

    corner = _stage("corner paths", corner_paths)
    U = v1.tensor_identity(m).fibers[None] @ corner
    del corner

    Q = _kron1(q.fibers, mn)
    conj = 0.0
    for start in range(0, T + 1, 16):
        chunk = U[start:start + 16]
        conj = max(conj, core.max_opnorm(core.adjoint(chunk) @ Q @ chunk - P.fibers))
    ends = (
        core.max_opnorm(U[0] - v0.tensor_identity(n).fibers),
        core.max_opnorm(U[-1] - v1.tensor_identity(m).fibers),
    )
    builder = CertificateBuilder(
        "lemma34", {"m": m, "n": n, "T": T, "base": base.label(), "d": p.dim},
        tol=tol, slice_tol=tol, dd=(m, n),
    )
    builder.add(U, validity_defect=conj)
    cert = builder.finish()
    element = _stage("assembly", dd_check, GridPath(base, U), m, n, tol)
    return Lemma34Result(
        U=element,
        u0_corrected=v0,
        u1_corrected=v1,
        bezout=(j, k),
        corner_classes=before,
        corrector_classes=corrector,
        corrected_classes=after,
        commutation_defect=comm,
        conjugation_defect=conj,
        endpoint_defects=ends,
        certificate=cert,
        tol=tol,
        endpoint_tol=endpoint_tol,
        corrected=correct,
    )


def lemma34_negative_control(p, q, u0, u1, m, n, T=256, tol=1e-8):
    """Run the pipeline without the Bezout correction.

    Returns ``{"corner_class": c, "valid_U": bool, "error": str | None}``
    where ``c`` is the ``p``-corner class of the uncorrected ``V``.
    """
    P = p.tensor_identity(m * n)
    V = u1.tensor_identity(m).adjoint() @ u0.tensor_identity(n)
    c = _corner_classes(V, P)[0]
    try:
        result = lemma34_pipeline(p, q, u0, u1, m, n, T=T, tol=tol, correct=False)
    except StageError as exc:
        if not isinstance(exc.cause, ClassMismatch):
            raise
        return {"corner_class": c, "valid_U": False, "error": str(exc)}
    return {"corner_class": c, "valid_U": result.passed, "error": None}


def _commuting_unitary(mask, rng):
    """Random constant unitary preserving the coordinate subspace ``mask``."""
    d = mask.size
    u = np.zeros((d, d), dtype=complex)
    for sel in (mask, ~mask):
        idx = np.flatnonzero(sel)
        if idx.size:
            u[np.ix_(idx, idx)] = core.random_unitary(idx.size, rng)
    return u


def _slot_winding(base, dim, c):
    fibers = np.broadcast_to(np.eye(dim, dtype=complex), (base.n_fibers, dim, dim)).copy()
    fibers[:, 0, 0] = base.points() ** c
    return fibers


def lemma34_fixture(base, d=4, rank=2, winding=1, m=2, n=3, seed=0):
    """Seeded ``(p, q, u0, u1)`` whose ``V`` has corner class ``winding``.

    ``p = diag(1_rank, 0)``, ``q = g p g*`` with a constant seeded unitary
    ``g``, ``u0 = (g ⊗ 1_m) R0 D0`` and ``u1 = (g ⊗ 1_n) R1 D1`` where ``R``
    are constant unitaries commuting with ``p ⊗ 1`` and ``D`` multiply the
    first ``p``-slot by ``z^{c k}`` and ``z^{-c j}`` (``j m + k n = 1``), so the
    corner class of ``V`` is ``c (j m + k n) = c``.
    """
    if d % base.N:
        raise ConfigError(f"d={d} must be a multiple of N={base.N}")
    if not 1 <= rank < d:
        raise ConfigError("need 1 <= rank < d so that p and 1 - p are nonzero")
    if winding and not base.has_k1:
        raise ConfigError(f"{base.label()} has trivial K1; use winding 0")
    j, k = bezout(m, n)
    rng = np.random.default_rng(seed)
    pd = np.zeros(d)
    pd[:rank] = 1.0
    p = AlgebraElement.constant(base, np.diag(pd).astype(complex))
    g = core.random_unitary(d, rng)
    q = AlgebraElement.constant(base, g @ np.diag(pd) @ g.conj().T)

    def witness(size, power):
        mask = np.tile(pd, size) > 0.5
        r = _commuting_unitary(mask, rng)
        fibers = np.kron(np.eye(size), g) @ r @ _slot_winding(base, size * d, power)
        return AlgebraElement(base, fibers)

    u0 = witness(m, winding * k)
    u1 = witness(n, -winding * j)
    return {"p": p, "q": q, "u0": u0, "u1": u1}


# ---------------------------------------------------------------- complements

@dataclass(frozen=True, eq=False)
class PartialIsometryElement:
    """A partial isometry ``v`` with cached ``p = v* v`` and ``q = v v*``."""

    v: AlgebraElement
    tol: float = DEFAULT_TOLERANCES.tol
    p: AlgebraElement = field(init=False)
    q: AlgebraElement = field(init=False)

    def __post_init__(self):
        p = self.v.adjoint() @ self.v
        q = self.v @ self.v.adjoint()
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        for label, x in (("v* v", p), ("v v*", q)):
            if not x.is_projection(self.tol):
                raise PreconditionViolation(f"{label} is a projection", _projection_defect(x))
        _require_close("v p = v", (self.v @ p).fibers, self.v.fibers, self.tol)

    @property
    def base(self):
        return self.v.base

    @property
    def dim(self):
        return self.v.dim


def _projection_defect(x):
    f = x.fibers
    return max(core.max_opnorm(f @ f - f), core.max_opnorm(f - core.adjoint(f)))


def complement_isometry(p, q):
    """Partial isometry ``w`` with ``w* w = p`` and ``w w* = q`` (equal ranks).

    Built from continuous frames: ``w = F_q F_p*``.
    """
    fp = projection_frame(p)
    fq = projection_frame(q)
    if fp.shape[-1] != fq.shape[-1]:
        raise ClassMismatch(fp.shape[-1], fq.shape[-1])
    return p.with_fibers(fq @ core.adjoint(fp))


@dataclass
class Corollary36Result:
    v_perp: AlgebraElement
    path: GridPath
    class_before: int
    class_after: int
    unitarity_defect: float
    path_unitarity_defect: float
    endpoint_defects: tuple
    tol: float

    @property
    def unitary(self):
        return AlgebraElement(self.path.base, self.path.samples[0])

    @property
    def passed(self):
        return bool(
            self.class_after == 0
            and self.unitarity_defect <= self.tol
            and self.path_unitarity_defect <= self.tol
            and max(self.endpoint_defects) <= self.tol
        )

    def to_dict(self):
        return {
            "name": "corollary36",
            "params": {"base": self.path.base.label(), "d": self.path.dim, "T": self.path.T},
            "corner_classes": [self.class_before, self.class_after],
            "unitarity_defect": self.unitarity_defect,
            "path_unitarity_defect": self.path_unitarity_defect,
            "path_step_max": self.path.continuity_modulus(),
            "endpoint_defects": list(self.endpoint_defects),
            "pass": self.passed,
        }


def corollary36_complement(v, w=None, T=256, tol=1e-8):
    """Partial isometry ``v⊥`` with ``v + v⊥`` in the identity component.

    Parameters
    ----------
    v : PartialIsometryElement
    w : AlgebraElement, optional
        Partial isometry with ``w* w = 1 - p`` and ``w w* = 1 - q``; built from
        frames when omitted.
    T : int
        Resolution of the returned path from ``v + v⊥`` to ``1``.
    """
    if not isinstance(v, PartialIsometryElement):
        v = PartialIsometryElement(v, tol)
    one = AlgebraElement.identity(v.base, v.v.amp)
    p_perp, q_perp = one - v.p, one - v.q

    def preconditions():
        _require_full(p_perp, "1 - v* v")
        _require_full(q_perp, "1 - v v*")
        ww = complement_isometry(p_perp, q_perp) if w is None else w
        _require_close("w* w = 1 - p", (ww.adjoint() @ ww).fibers, p_perp.fibers, tol)
        _require_close("w w* = 1 - q", (ww @ ww.adjoint()).fibers, q_perp.fibers, tol)
        return ww

    w = _stage("preconditions", preconditions)

    def complement():
        c = k1_class(v.v + w).value
        u_tilde = v.q + corner_unitary(q_perp, -c)
        v_perp = u_tilde @ w
        total = v.v + v_perp
        after = k1_class(total).value
        if after:
            raise ClassMismatch(after, 0)
        return c, v_perp, total, after

    c, v_perp, total, after = _stage("complement", complement)
    path = _stage("connect", connect_in_u0, total, one, T)
    ends = (
        core.max_opnorm(path.samples[0] - total.fibers),
        core.max_opnorm(path.samples[-1] - one.fibers),
    )
    return Corollary36Result(
        v_perp=v_perp,
        path=path,
        class_before=c,
        class_after=after,
        unitarity_defect=total.unitarity_defect(),
        path_unitarity_defect=path.unitarity_defect(),
        endpoint_defects=ends,
        tol=tol,
    )


def corollary36_fixture(base, d=4, rank=2, winding=1, seed=0):
    """Seeded ``v = g D p`` with ``D = diag(z^c, 1, ...)`` and ``w = g (1 - p)``.

    Then ``v* v = p``, ``v v* = g p g*`` and ``v + w = g D`` has class ``c``.
    """
    if d % base.N:
        raise ConfigError(f"d={d} must be a multiple of N={base.N}")
    if not 1 <= rank < d:
        raise ConfigError("need 1 <= rank < d so that both complements are full")
    if winding and not base.has_k1:
        raise ConfigError(f"{base.label()} has trivial K1; use winding 0")
    rng = np.random.default_rng(seed)
    pd = np.diag((np.arange(d) < rank).astype(complex))
    g = core.random_unitary(d, rng)
    D = _slot_winding(base, d, winding)
    v = AlgebraElement(base, g @ D @ pd)
    w = AlgebraElement.constant(base, g @ (np.eye(d) - pd))
    return {"v": v, "w": w}


# ---------------------------------------------------------------- intertwiner

@dataclass
class Theorem39Result:
    V: object
    isometry_defect: float
    positivity_min_eig: float
    endpoint_defects: tuple
    corner: Corollary36Result
    params: dict
    tol: float

    @property
    def passed(self):
        return bool(
            self.isometry_defect <= self.tol
            and self.positivity_min_eig >= -self.tol
            and max(self.endpoint_defects) <= self.tol
            and self.corner.passed
        )

    def to_dict(self):
        return {
            "name": "theorem39",
            "params": self.params,
            "isometry_defect": self.isometry_defect,
            "positivity_min_eig": self.positivity_min_eig,
            "endpoint_defects": list(self.endpoint_defects),
            "boundary_defects": [self.V.defect_start, self.V.defect_end],
            "corner": self.corner.to_dict(),
            "pass": self.passed,
        }


def _check_subequivalence(v, p, q, k, tol, label):
    """``v* v = p ⊗ 1_k`` and ``v v* <= (q ⊗ 1_{k-1}) ⊕ 0``."""
    if v.dim != k * p.dim:
        raise ConfigError(f"{label} must live in M_{k}(A)")
    _require_close(f"{label}* {label} = p ⊗ 1", (v.adjoint() @ v).fibers, _kron1(p.fibers, k), tol)
    dim = q.dim
    box = np.zeros(v.fibers.shape, dtype=complex)
    if k > 1:
        box[..., : (k - 1) * dim, : (k - 1) * dim] = _kron1(q.fibers, k - 1)
    _require_close(f"range of {label} under (q ⊗ 1) ⊕ 0", box @ v.fibers, v.fibers, tol)


def theorem39_intertwiner(p, q, v0, v1, m, n, T=256, tol=1e-8):
    """Partial isometry ``V`` of ``A ⊗ Z_{m,n}`` with ``V* V = p ⊗ 1``, ``V V* <= q ⊗ 1``.

    ``W = (v1 ⊗ 1_m)(v0 ⊗ 1_n)*`` is a partial isometry of the corner
    ``B = M_{mn}(qAq)``; completing it inside ``B`` gives ``U`` with
    ``W = U W* W``, and ``V_t = U_t (v0 ⊗ 1_n)`` along a path ``U_t`` from
    ``1_B`` to ``U``.
    """
    base = p.base
    mn = m * n

    def preconditions():
        if math.gcd(m, n) != 1:
            raise NotCoprime(m, n)
        _require_full(q, "q")
        _check_subequivalence(v0, p, q, m, tol, "v0")
        _check_subequivalence(v1, p, q, n, tol, "v1")

    _stage("preconditions", preconditions)
    a0 = v0.tensor_identity(n)
    a1 = v1.tensor_identity(m)
    Q = q.tensor_identity(mn)
    frame = _stage("corner frame", projection_frame, Q)
    flat = _flat_base(base)

    def corner():
        W = a1 @ a0.adjoint()
        WB = AlgebraElement(flat, _sandwich(frame, W.fibers))
        return corollary36_complement(PartialIsometryElement(WB, tol), T=T, tol=tol)

    cor = _stage("corner complement", corner)
    UB = cor.path.samples[::-1]
    U = np.einsum("fir,tfrs,fjs->tfij", frame, UB, frame.conj(), optimize=True)
    V = U @ a0.fibers[None]
    del U
    P = _kron1(p.fibers, mn)
    iso = core.max_opnorm(core.adjoint(V) @ V - P)
    gap = Q.fibers[None] - V @ core.adjoint(V)
    gap = 0.5 * (gap + core.adjoint(gap))
    min_eig = float(np.linalg.eigvalsh(gap).min())
    ends = (core.max_opnorm(V[0] - a0.fibers), core.max_opnorm(V[-1] - a1.fibers))
    element = _stage("assembly", dd_check, GridPath(base, V), m, n, tol)
    params = {"m": m, "n": n, "T": T, "base": base.label(), "d": p.dim}
    return Theorem39Result(element, iso, min_eig, ends, cor, params, tol)


def _isometry(rows, cols, rng):
    z = rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))
    qmat, _ = np.linalg.qr(z)
    return qmat


def theorem39_fixture(base, d=4, rank_p=1, rank_q=3, m=2, n=3, seed=0):
    """Seeded ``(p, q, v0, v1)`` satisfying the subequivalence witnesses.

    ``p = diag(1_rank_p, 0)``, ``q = g diag(1_rank_q, 0) g*``, and
    ``v_k = F M E*`` where ``E`` frames ``p ⊗ 1_k``, ``F`` frames
    ``(q ⊗ 1_{k-1}) ⊕ 0`` and ``M`` is a seeded isometry.
    """
    if d % base.N:
        raise ConfigError(f"d={d} must be a multiple of N={base.N}")
    if not (0 <= rank_p <= d and 1 <= rank_q <= d):
        raise ConfigError("ranks out of range")
    for k in (m, n):
        if rank_p * k > rank_q * (k - 1):
            raise ConfigError(f"rank_p * {k} exceeds rank_q * {k - 1}; no witness exists")
    rng = np.random.default_rng(seed)
    pd = np.diag((np.arange(d) < rank_p).astype(complex))
    g = core.random_unitary(d, rng)
    gq = g[:, :rank_q]
    p = AlgebraElement.constant(base, pd)
    q = AlgebraElement.constant(base, gq @ gq.conj().T)

    def witness(k):
        e = np.kron(np.eye(k), np.eye(d)[:, :rank_p])
        f = np.zeros((k * d, (k - 1) * rank_q), dtype=complex)
        f[: (k - 1) * d] = np.kron(np.eye(k - 1), gq)
        mat = _isometry((k - 1) * rank_q, k * rank_p, rng) if rank_p else np.zeros(((k - 1) * rank_q, 0))
        return AlgebraElement.constant(base, f @ mat @ e.conj().T)

    return {"p": p, "q": q, "v0": witness(m), "v1": witness(n)}
