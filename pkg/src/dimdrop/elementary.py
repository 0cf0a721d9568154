"""Elementary maps, their compositions, and homotopies between them.

A *path sequence* of degree ``n`` is a list of paths ``W_1, ..., W_n`` in
``SU_n`` with ``W_j(0) = 1`` and ``W_j(1)* e_{jj} W_j(1) = e_{11}``.  It defines
the elementary map

    W(u; t) = prod_j (1 + (u - 1) ⊗ W_j(t)* e_{jj} W_j(t)),

taken in ascending ``j``, which sends a unitary ``u`` of ``M_d(A)`` to a path
from ``u ⊗ 1_n`` (at ``t = 0``) to ``u^n ⊕ 1_{n-1}`` (at ``t = 1``).

``H_{n,j}`` denotes the set of ``w`` in ``SU_n`` with ``w* e_{jj} w = e_{11}``;
it is the translate ``v · H_{n,1}`` of ``H_{n,1} = {diag(det(w)*, w)}`` by the
signed transposition ``v`` returned by :func:`hnj_sample`.
"""

from __future__ import annotations

import numpy as np

from . import core, loops
from .algebra import AlgebraElement, GridPath, dd_check
from .certificates import CertificateBuilder
from .config import DEFAULT_TOLERANCES
from .errors import (
    BranchFailure,
    DimensionMismatch,
    NotInHnj,
    NotUnitary,
    SizeMismatch,
    StageError,
)


def _unit_row_projections(samples, j):
    """``W* e_{jj} W`` for a stack of matrices ``W`` (``j`` 0-based)."""
    row = samples[..., j, :]
    return row.conj()[..., :, None] * row[..., None, :]


class PathSequence:
    """``n`` sampled paths in ``SU_n``; ``samples`` has shape ``(n, T+1, n, n)``.

    Off-grid times are evaluated by geodesic interpolation between neighbouring
    samples, which is exact for one-parameter subgroups such as the standard
    rotations.
    """

    def __init__(self, samples):
        samples = np.array(samples, dtype=complex)
        if samples.ndim != 4 or samples.shape[0] != samples.shape[2] or samples.shape[2] != samples.shape[3]:
            raise DimensionMismatch(f"path sequence needs shape (n, T+1, n, n), got {samples.shape}")
        samples.flags.writeable = False
        self.samples = samples
        self._increments = None

    @property
    def n(self):
        return self.samples.shape[0]

    @property
    def T(self):
        return self.samples.shape[1] - 1

    def path(self, j):
        """The ``j``-th path (1-based, as ``W_j``)."""
        return self.samples[j - 1]

    def projections(self):
        """``P_j(t) = W_j(t)* e_{jj} W_j(t)``, shape ``(n, T+1, n, n)``."""
        return np.stack([_unit_row_projections(self.samples[j], j) for j in range(self.n)])

    def _logs(self):
        if self._increments is None:
            cur = self.samples[:, :-1]
            nxt = self.samples[:, 1:]
            self._increments = core.unitary_log(core.adjoint(cur) @ nxt, tol=1e-8)
        return self._increments

    def at(self, taus):
        """Samples at arbitrary times ``taus`` in ``[0, 1]``: ``(n, K, n, n)``."""
        taus = np.clip(np.atleast_1d(np.asarray(taus, dtype=float)), 0.0, 1.0)
        pos = taus * self.T
        idx = np.rint(pos).astype(int)
        on_grid = np.abs(pos - idx) < 1e-12
        out = self.samples[:, idx].copy()
        off = ~on_grid
        if np.any(off):
            lo = np.minimum(np.floor(pos[off]).astype(int), self.T - 1)
            frac = pos[off] - lo
            logs = self._logs()[:, lo]
            out[:, off] = self.samples[:, lo] @ core.expm_skew(frac[None, :, None, None] * logs)
        return out

    def defects(self):
        """Worst violations of the sequence laws, as a dict."""
        n = self.n
        eye = np.eye(n)
        start = core.max_opnorm(self.samples[:, 0] - eye)
        end = max(
            core.max_opnorm(_unit_row_projections(self.samples[j, -1], j) - core.matrix_unit(1, 1, n))
            for j in range(n)
        )
        det = float(np.abs(np.linalg.det(self.samples) - 1).max())
        unit = core.max_unitarity_defect(self.samples)
        return {"start": start, "endpoint_law": end, "det": det, "unitarity": unit}

    def max_defect(self):
        return max(self.defects().values())

    def is_valid(self, tol=1e-8):
        return self.max_defect() <= tol

    def conjugated(self, h):
        """``t -> h* W_j(t) h`` for every ``j``."""
        h = np.asarray(h, dtype=complex)
        return PathSequence(core.adjoint(h) @ self.samples @ h)


def _givens(n, j, angles):
    out = np.broadcast_to(np.eye(n, dtype=complex), angles.shape + (n, n)).copy()
    c, s = np.cos(angles), np.sin(angles)
    out[..., 0, 0] = c
    out[..., 0, j] = s
    out[..., j, 0] = -s
    out[..., j, j] = c
    return out


def standard_path_sequence(n, T=256):
    """``W_1 = 1`` and ``W_j`` the rotation by ``pi t / 2`` in the ``(1, j)`` plane."""
    if n < 1:
        raise DimensionMismatch("degree n must be positive")
    angles = np.pi / 2 * np.arange(T + 1) / T
    samples = np.empty((n, T + 1, n, n), dtype=complex)
    samples[0] = np.eye(n)
    for j in range(1, n):
        samples[j] = _givens(n, j, angles)
    return PathSequence(samples)


def product_formula(u, rows):
    """``prod_j (1 + (u - 1) ⊗ P_j)`` in ascending ``j``, with ``P_j = conj(w_j) w_j^T``.

    ``u`` has shape ``(F, D, D)`` (shared by all times) or ``(K, F, D, D)``
    (one per time); ``rows`` has shape ``(n, K, n)`` and holds the ``j``-th row
    ``w_j`` of ``W_j(t)``, so that ``P_j = W_j* e_{jj} W_j``.  Each factor is a
    rank-``D`` update, applied without forming it.  The result has shape
    ``(K, F, nD, nD)``.
    """
    u = np.asarray(u, dtype=complex)
    rows = np.asarray(rows, dtype=complex)
    f, d = u.shape[-3], u.shape[-1]
    n, k = rows.shape[0], rows.shape[1]
    x = u - np.eye(d)
    if x.ndim == 3:
        x = x[None]
    out = np.broadcast_to(np.eye(n * d, dtype=complex), (k, f, n * d, n * d)).copy()
    blocks = out.reshape(k, f, n * d, n, d)
    for w in rows:
        wc = w.conj()
        y = blocks[:, :, :, 0, :] * wc[:, 0, None, None, None]
        for a in range(1, n):
            y += blocks[:, :, :, a, :] * wc[:, a, None, None, None]
        y = y @ x
        for b in range(n):
            blocks[:, :, :, b, :] += w[:, b, None, None, None] * y
    return out


class ElementaryMap:
    """The elementary map of a :class:`PathSequence`."""

    def __init__(self, seq):
        self.seq = seq
        self._proj = None

    @property
    def n(self):
        return self.seq.n

    @property
    def T(self):
        return self.seq.T

    def rows(self, indices=None, taus=None):
        """Rows ``w_j(t)`` (the ``j``-th row of ``W_j(t)``), shape ``(n, K, n)``."""
        if taus is not None:
            at = self.seq.at(taus)
        else:
            at = self.seq.samples if indices is None else self.seq.samples[:, np.atleast_1d(indices)]
        j = np.arange(self.n)
        return at[j, :, j, :]

    def fibers(self, u, indices=None, taus=None):
        """Evaluate on fibers ``u`` ``(F, D, D)`` at grid indices or at times ``taus``."""
        return product_formula(u, self.rows(indices, taus))

    def __call__(self, u, t=None):
        """``W(u; t)`` at grid index ``t`` (an element) or the whole path."""
        _check_unitary(u)
        if t is None:
            return GridPath(u.base, self.fibers(u.fibers))
        return AlgebraElement(u.base, self.fibers(u.fibers, indices=t)[0])

    def dd_element(self, u, boundary_tol=DEFAULT_TOLERANCES.boundary_tol):
        """``W(u)`` as an element of ``M_d(A) ⊗ Z_{1,n}``."""
        return dd_check(self(u), 1, self.n, boundary_tol)


def _check_unitary(u, tol=DEFAULT_TOLERANCES.tol):
    if not u.is_unitary(tol):
        raise NotUnitary(u.unitarity_defect(), tol)


def elementary_eval(E, u, t):
    """``W(u; t)`` for the map ``E`` at grid index ``t``."""
    return E(u, t)


def shrink_family(E, u, steps=64, tol=DEFAULT_TOLERANCES.tol, keep=False):
    """Certificate for ``H(s, t) = W(u; s t)``, from the constant ``u ⊗ 1_n`` to ``W(u)``."""
    _check_unitary(u, tol)
    ts = np.linspace(0.0, 1.0, E.T + 1)
    builder = CertificateBuilder(
        "shrink", {"n": E.n, "T": E.T, "steps": steps}, tol=tol,
        dd=(1, E.n), winding=u.base.has_k1, keep=keep,
    )
    builder.stage("shrink")
    for k in range(steps + 1):
        builder.add(E.fibers(u.fibers, taus=ts * k / steps))
    start = np.broadcast_to(u.tensor_identity(E.n).fibers, (E.T + 1,) + (u.base.n_fibers, E.n * u.dim, E.n * u.dim))
    return builder.finish(start=start, end=E.fibers(u.fibers))


# ---------------------------------------------------------------- H_{n,j}

def hnj_sample(n, j):
    """``1_n - (e_11 + e_jj) + (e_1j - e_j1)`` (the identity for ``j = 1``)."""
    if j == 1:
        return core.identity(n)
    e = core.matrix_unit
    return core.identity(n) - (e(1, 1, n) + e(j, j, n)) + (e(1, j, n) - e(j, 1, n))


def hnj_defect(n, j, w):
    w = np.asarray(w, dtype=complex)
    law = core.max_opnorm(_unit_row_projections(w, j - 1) - core.matrix_unit(1, 1, n))
    det = float(np.abs(np.linalg.det(w) - 1).max())
    return max(law, det, core.max_unitarity_defect(w))


def hnj_membership(n, j, w, tol=DEFAULT_TOLERANCES.tol):
    return hnj_defect(n, j, w) <= tol


class HnjCurve:
    """A path in ``H_{n,j}`` between two members, evaluated at any ``tau``.

    Translated into ``H_{n,1}``, the lower-right ``U_{n-1}`` blocks are joined by
    a geodesic (or, if that hits the branch cut, by two geodesics through the
    identity) and the corner entry compensates the determinant.
    """

    def __init__(self, n, j, w0, w1, tol=1e-8, branch_margin=DEFAULT_TOLERANCES.branch_margin):
        for w in (w0, w1):
            if not hnj_membership(n, j, w, tol):
                raise NotInHnj(f"matrix is not in H_({n},{j}) (defect {hnj_defect(n, j, w):.3e})")
        self.n, self.j = n, j
        self.w0 = np.asarray(w0, dtype=complex)
        self.w1 = np.asarray(w1, dtype=complex)
        self.v = hnj_sample(n, j)
        a0 = (self.v.conj().T @ self.w0)[1:, 1:]
        a1 = (self.v.conj().T @ self.w1)[1:, 1:]
        self.a0 = a0
        eye = np.eye(n - 1)
        try:
            self.pieces = [(0.0, 1.0, a0, core.unitary_log(a0.conj().T @ a1, tol, branch_margin))]
            self.route = "geodesic"
        except BranchFailure:
            try:
                self.pieces = [
                    (0.0, 0.5, a0, core.unitary_log(a0.conj().T, tol, branch_margin)),
                    (0.5, 1.0, eye, core.unitary_log(a1, tol, branch_margin)),
                ]
                self.route = "waypoint"
            except BranchFailure:
                # both routes meet -1: any logarithm still gives a minimal geodesic
                self.pieces = [(0.0, 1.0, a0, core.unitary_log_any(a0.conj().T @ a1))]
                self.route = "geodesic_at_cut"

    def __call__(self, taus):
        taus = np.atleast_1d(np.asarray(taus, dtype=float))
        n = self.n
        blocks = np.empty(taus.shape + (n - 1, n - 1), dtype=complex)
        for lo, hi, base, log in self.pieces:
            sel = (taus >= lo) & (taus <= hi)
            local = (taus[sel] - lo) / (hi - lo)
            blocks[sel] = base @ core.expm_skew(local[:, None, None] * log)
        out = np.zeros(taus.shape + (n, n), dtype=complex)
        out[..., 0, 0] = np.conj(np.linalg.det(blocks)) if n > 1 else 1.0
        out[..., 1:, 1:] = blocks
        out = self.v @ out
        out[taus == 0.0] = self.w0
        out[taus == 1.0] = self.w1
        return out


def hnj_connect(n, j, w0, w1, T=256):
    """Sampled path ``(T+1, n, n)`` from ``w0`` to ``w1`` inside ``H_{n,j}``."""
    return HnjCurve(n, j, w0, w1)(np.linspace(0.0, 1.0, T + 1))


# ---------------------------------------------------------------- relative homotopies

def rel_endpoint_homotopy(P, Q, steps=64, tol=1e-8, keep=True, total=None):
    """Homotopy rel endpoints from the path ``P`` to ``Q`` (arrays ``(T+1, d, d)``).

    ``H(s, t) = P(t) C_{1-s}(t)`` where ``C`` contracts the based loop
    ``P(t)* Q(t)`` to the identity (see :mod:`dimdrop.loops`).  For
    special-unitary paths every slice stays special unitary.
    """
    P = np.asarray(P, dtype=complex)
    Q = np.asarray(Q, dtype=complex)
    if P.shape != Q.shape:
        raise DimensionMismatch("paths must share resolution and dimension")
    gap = max(core.max_opnorm(P[0] - Q[0]), core.max_opnorm(P[-1] - Q[-1]))
    if gap > tol:
        raise DimensionMismatch(f"paths do not share endpoints (gap {gap:.3e})")
    contraction = loops.LoopContraction(core.adjoint(P) @ Q, closed=False)
    schedule = contraction.schedule(total=total, steps=None if total else steps)
    builder = CertificateBuilder("rel_endpoint", {"T": P.shape[0] - 1, "slices": len(schedule)},
                                 tol=tol, keep=keep)
    builder.stage("contract")
    for stage, r in reversed(schedule):
        h = P @ contraction.at(stage, r)
        edge = max(core.max_opnorm(h[0] - P[0]), core.max_opnorm(h[-1] - P[-1]))
        builder.add(h, validity_defect=edge)
    return builder.finish(start=P, end=Q, extra={"windings": contraction.windings.tolist()})


class ElementaryHomotopy:
    """A path of path sequences from ``E.seq`` to ``F.seq``.

    For each ``j`` two stages are run.  *Append*: the path
    ``P_sigma(t) = E_j(t) E_j(1)* c_j(sigma t)`` where ``c_j`` joins
    ``E_j(1)`` to ``F_j(1)`` inside ``H_{n,j}``; every slice ends in ``H_{n,j}``.
    *Contract*: a homotopy rel endpoints from ``P_1`` to ``F_j``.
    """

    def __init__(self, E, F, steps=64):
        e_seq = E.seq if isinstance(E, ElementaryMap) else E
        f_seq = F.seq if isinstance(F, ElementaryMap) else F
        if e_seq.n != f_seq.n or e_seq.T != f_seq.T:
            raise SizeMismatch("elementary maps must share degree and resolution")
        self.E, self.F = e_seq, f_seq
        self.n, self.T = e_seq.n, e_seq.T
        self.steps = steps
        ts = np.linspace(0.0, 1.0, self.T + 1)
        self.ts = ts
        self.curves, self.bases, self.contractions = [], [], []
        for j in range(self.n):
            try:
                curve = HnjCurve(self.n, j + 1, e_seq.samples[j, -1], f_seq.samples[j, -1])
                base = e_seq.samples[j] @ e_seq.samples[j, -1].conj().T
                p1 = base @ curve(ts)
                contraction = loops.LoopContraction(core.adjoint(p1) @ f_seq.samples[j], closed=False)
            except Exception as exc:  # tag the failing path
                raise StageError(f"elementary_homotopy[j={j + 1}]", exc) from exc
            self.curves.append(curve)
            self.bases.append(base)
            self.contractions.append((p1, contraction))
        depth = max(len(c.stage_names) for _, c in self.contractions)
        self.n_contract = steps * depth
        self.schedules = [c.schedule(total=self.n_contract) for _, c in self.contractions]

    @property
    def n_slices(self):
        return self.steps + 1 + self.n_contract + 1

    def stage_of(self, k):
        return "append" if k <= self.steps else "contract"

    def slice(self, k):
        """The ``k``-th path sequence, ``k = 0 .. n_slices - 1``."""
        out = np.empty((self.n, self.T + 1, self.n, self.n), dtype=complex)
        if k <= self.steps:
            sigma = k / self.steps
            for j in range(self.n):
                out[j] = self.bases[j] @ self.curves[j](self.ts * sigma)
            if k == 0:
                out = np.array(self.E.samples)
        else:
            i = k - self.steps - 1
            for j in range(self.n):
                p1, contraction = self.contractions[j]
                stage, r = self.schedules[j][self.n_contract - i]
                out[j] = p1 @ contraction.at(stage, r)
        return PathSequence(out)

    def slices(self):
        for k in range(self.n_slices):
            yield self.stage_of(k), self.slice(k)


def elementary_homotopy(E, F, steps=64, tol=1e-8, slice_tol=1e-8, keep=False, jump_budget=None):
    """Path of path sequences from ``E`` to ``F`` with its certificate.

    Returns ``(family, certificate)``; every slice is checked against the
    sequence laws (start at 1, endpoint law, determinant, unitarity).
    """
    family = ElementaryHomotopy(E, F, steps)
    builder = CertificateBuilder(
        "elementary_homotopy", {"n": family.n, "T": family.T, "steps": steps},
        tol=tol, slice_tol=slice_tol, keep=keep, jump_budget=jump_budget, endpoint_tol=1e-10,
    )
    current = None
    for stage, seq in family.slices():
        if stage != current:
            builder.stage(stage)
            current = stage
        builder.add(np.swapaxes(seq.samples, 0, 1), validity_defect=seq.max_defect())
    cert = builder.finish(
        start=np.swapaxes(family.E.samples, 0, 1), end=np.swapaxes(family.F.samples, 0, 1)
    )
    return family, cert


def induced_certificate(family, u, tol=1e-8, keep=False):
    """Certificate for ``(s, t) -> W_s(u; t)`` where ``W_s`` runs through ``family``.

    Each path sequence of an :class:`ElementaryHomotopy` gives an elementary
    map; evaluated on ``u`` these form a homotopy in ``M_d(A) ⊗ Z_{1,n}``.
    """
    _check_unitary(u, tol)
    builder = CertificateBuilder(
        "induced_homotopy", {"n": family.n, "T": family.T, "base": u.base.label()},
        tol=tol, dd=(1, family.n), winding=u.base.has_k1, keep=keep,
    )
    current = None
    for stage, seq in family.slices():
        if stage != current:
            builder.stage(stage)
            current = stage
        builder.add(ElementaryMap(seq).fibers(u.fibers))
    return builder.finish(start=ElementaryMap(family.E).fibers(u.fibers),
                          end=ElementaryMap(family.F).fibers(u.fibers))


# ---------------------------------------------------------------- composition

def compose_sequences(V, W):
    """Path sequence of degree ``mn`` with paths ``V_i ⊗ W_j``.

    The path with composite index ``l = j m + i`` (``j`` from ``W``, ``i`` from
    ``V``) is ``V_i(t) ⊗ W_j(t)``; ascending ``l`` runs lexicographically in
    ``(j, i)``, matching the nesting of ``W(V(u; t); t)`` under the
    Kronecker convention where the second factor is the outer index.
    """
    v = V.seq if isinstance(V, ElementaryMap) else V
    w = W.seq if isinstance(W, ElementaryMap) else W
    if v.T != w.T:
        raise SizeMismatch("sequences must share the resolution T")
    m, n = v.n, w.n
    out = np.empty((m * n, v.T + 1, m * n, m * n), dtype=complex)
    for j in range(n):
        for i in range(m):
            out[j * m + i] = core.tensor_product(v.samples[i], w.samples[j])
    return PathSequence(out)


class ComposedMap:
    """``gamma(u; t) = W(V(u; t); t)`` with both of its evaluations."""

    def __init__(self, V, W):
        self.V = V if isinstance(V, ElementaryMap) else ElementaryMap(V)
        self.W = W if isinstance(W, ElementaryMap) else ElementaryMap(W)
        self.product = ElementaryMap(compose_sequences(self.V, self.W))

    @property
    def degree(self):
        return self.product.n

    @property
    def T(self):
        return self.product.T

    def direct(self, u, indices=None):
        """Nested evaluation ``W(V(u; t); t)``, shape ``(K, F, mnD, mnD)``."""
        u = np.asarray(u)
        inner = self.V.fibers(u, indices=indices)
        return product_formula(inner, self.W.rows(indices))

    def agreement(self, u):
        """Largest difference between the product formula and the nested evaluation."""
        return core.max_opnorm(self.product.fibers(u) - self.direct(u))


def gamma_compose(V, W):
    if not isinstance(V, (ElementaryMap, PathSequence)) or not isinstance(W, (ElementaryMap, PathSequence)):
        raise SizeMismatch("gamma_compose expects elementary maps")
    return ComposedMap(V, W)


def shear_slice(composed, u, s, indices=None):
    """``Gamma_s(u; t) = W(V(u; s + t - s t); t)`` at grid indices ``indices``."""
    T = composed.T
    idx = np.arange(T + 1) if indices is None else np.atleast_1d(indices)
    ts = idx / T
    inner = composed.V.fibers(u, taus=s + ts - s * ts)
    return product_formula(inner, composed.W.rows(idx))


def gamma_shear(V, W, u, steps=64, tol=DEFAULT_TOLERANCES.tol, keep=False):
    """Certificate for the shear family from ``gamma(u)`` to ``W(u^m ⊕ 1_{m-1})``.

    ``extra['top_edge_variation']`` is the largest change of ``Gamma_s(u; 1)``
    along ``s``; it vanishes up to rounding.
    """
    composed = V if isinstance(V, ComposedMap) else gamma_compose(V, W)
    fibers = u.fibers
    m = composed.V.n
    builder = CertificateBuilder(
        "gamma_shear", {"m": m, "n": composed.W.n, "T": composed.T, "steps": steps},
        tol=tol, dd=(1, composed.W.n), winding=u.base.has_k1, keep=keep,
    )
    builder.stage("shear")
    top0 = None
    top_var = 0.0
    for k in range(steps + 1):
        sl = shear_slice(composed, fibers, k / steps)
        if top0 is None:
            top0 = sl[-1].copy()
        top_var = max(top_var, core.max_opnorm(sl[-1] - top0))
        builder.add(sl)
    power = core.pad_identity(np.linalg.matrix_power(fibers, m), (m - 1) * u.dim)
    end = composed.W.fibers(power)
    return builder.finish(start=composed.direct(fibers), end=end,
                          extra={"top_edge_variation": top_var})
