"""Continuous logarithms along sampled unitary paths and loop contraction.

``track_log`` follows the eigen-decomposition of a sequence of unitaries,
matching eigenvectors between neighbouring samples and lifting each phase to
the branch nearest its predecessor.  ``null_homotopy`` uses the lift to
contract a loop of unitaries to the identity:

1. straighten: ``exp((1 - r) L(θ) + r · 2πiθ K)`` where ``L`` is the tracked
   logarithm and ``2πi K = L(end) - L(start)`` measures how far the lift fails
   to close up (``K`` has integer eigenvalues);
2. merge: the diagonal loop ``exp(2πiθ K)`` is contracted by rotating the
   integer eigen-windings into a single slot with the two-by-two rotation
   trick ``diag(x, 1) R_r* diag(1, y) R_r``.  Their sum is the determinant
   winding, which must vanish.

When every eigen-phase closes up on its own (``K = 0``) only the first stage
is present and it reduces to ``exp((1 - r) L(θ))``.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import core
from .errors import ClassMismatch, ConfigError, UnwrapFailure

CLUSTER_TOL = 1e-7
JUMP_LIMIT = np.pi / 2


def _wrap(x):
    return (x + np.pi) % (2 * np.pi) - np.pi


def _clusters(phases, tol):
    """Group ascending phases whose circular distance is below ``tol``."""
    d = len(phases)
    if d == 0:
        return []
    groups = [[0]]
    for i in range(1, d):
        if abs(_wrap(phases[i] - phases[i - 1])) < tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    if len(groups) > 1 and abs(_wrap(phases[0] - phases[-1])) < tol:
        groups[0] = groups.pop() + groups[0]
    return groups


def _step(u, prev_vecs, prev_lifts, index, cluster_tol, jump_limit):
    phases, vecs = core.eig_unitary(u)
    groups = _clusters(phases, cluster_tol)
    overlap = np.abs(prev_vecs.conj().T @ vecs) ** 2
    slots = []
    weights = np.empty((len(prev_lifts), len(phases)))
    col = 0
    for gi, members in enumerate(groups):
        w = overlap[:, members].sum(axis=1)
        for _ in members:
            weights[:, col] = w
            slots.append(gi)
            col += 1
    rows, cols = linear_sum_assignment(-weights)
    owner = {gi: [] for gi in range(len(groups))}
    for r, c in zip(rows, cols):
        owner[slots[c]].append(r)
    new_vecs = np.empty_like(prev_vecs)
    for gi, members in enumerate(groups):
        tracks = owner[gi]
        basis = vecs[:, members]
        proj = basis @ (basis.conj().T @ prev_vecs[:, tracks])
        new_vecs[:, tracks] = core.polar_unitary(proj)
    rayleigh = np.einsum("ij,ik,kj->j", new_vecs.conj(), u, new_vecs)
    step = _wrap(np.angle(rayleigh) - prev_lifts)
    worst = float(np.abs(step).max()) if step.size else 0.0
    if worst >= jump_limit:
        raise UnwrapFailure(
            f"eigen-phase jump {worst:.3f} >= {jump_limit:.3f} at sample {index}", index, worst
        )
    return new_vecs, prev_lifts + step


def _track(samples, closed, cluster_tol, jump_limit):
    k, d = samples.shape[0], samples.shape[-1]
    lifts = np.empty((k, d))
    vecs = np.empty((k, d, d), dtype=complex)
    lifts[0], vecs[0] = core.eig_unitary(samples[0])
    for i in range(1, k):
        vecs[i], lifts[i] = _step(samples[i], vecs[i - 1], lifts[i - 1], i, cluster_tol, jump_limit)
    end = None
    if closed:
        end = _step(samples[0], vecs[-1], lifts[-1], k, cluster_tol, jump_limit)
    return lifts, vecs, end


def _refine(samples, closed):
    nxt = np.roll(samples, -1, axis=0) if closed else samples[1:]
    cur = samples if closed else samples[:-1]
    mids = cur @ core.expm_skew(0.5 * core.unitary_log(core.adjoint(cur) @ nxt, tol=1e-6))
    out = np.empty((cur.shape[0] * 2 + (0 if closed else 1),) + samples.shape[1:], dtype=complex)
    out[0::2] = samples
    out[1::2] = mids
    return out


def track_log(samples, closed=False, cluster_tol=CLUSTER_TOL, jump_limit=JUMP_LIMIT):
    """Lift a sampled path (or loop) of unitaries to a continuous logarithm.

    Returns ``(lifts, vecs, end)`` where ``lifts[i]`` are the phases carried by
    the eigenvector columns ``vecs[i]``; for closed loops ``end`` holds the
    ``(vecs, lifts)`` reached on returning to sample 0.  On an ambiguous step the
    path is refined once by geodesic midpoints before giving up.
    """
    samples = np.asarray(samples, dtype=complex)
    try:
        return _track(samples, closed, cluster_tol, jump_limit)
    except UnwrapFailure:
        fine = _refine(samples, closed)
    lifts, vecs, end = _track(fine, closed, cluster_tol, jump_limit)
    return lifts[0::2], vecs[0::2], end


def log_from_lifts(vecs, lifts):
    return (vecs * (1j * lifts)[..., None, :]) @ core.adjoint(vecs)


def _integer_part(delta):
    """Integer-eigenvalue Hermitian ``K`` with ``delta ≈ 2πi K``."""
    herm = delta / (2j * np.pi)
    herm = 0.5 * (herm + herm.conj().T)
    w, q = np.linalg.eigh(herm)
    ints = np.rint(w)
    if w.size and np.abs(w - ints).max() > 1e-6:
        raise UnwrapFailure(f"lift mismatch is not an integer multiple of 2πi ({np.abs(w - ints).max():.2e})")
    return ints.astype(int), q


def _split(total, parts):
    if total < parts:
        raise ConfigError(f"resolution {total} too small for {parts} stages")
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]])


class LoopContraction:
    """Stages of a contraction of a sampled loop to the identity.

    Attributes
    ----------
    windings : ndarray of int
        Integer eigen-windings ``K`` (zero when the tracked logarithm closes).
    stage_names : list of str
    """

    def __init__(self, samples, closed):
        samples = np.asarray(samples, dtype=complex)
        self.samples = samples
        self.closed = closed
        k, d = samples.shape[0], samples.shape[-1]
        lifts, vecs, end = track_log(samples, closed=closed)
        logs = log_from_lifts(vecs, lifts)
        if closed:
            end_log = log_from_lifts(end[0], end[1])
            self.theta = np.arange(k) / k
            start_log = logs[0]
        else:
            end_log = logs[-1]
            self.theta = np.arange(k) / (k - 1)
            start_log = np.zeros((d, d), dtype=complex)
            logs[0] = start_log
        self.windings, self.basis = _integer_part(end_log - start_log)
        if not closed:
            logs[-1] = self._k_matrix()
        self.logs = logs
        self.det_winding = int(self.windings.sum())
        active = [i for i, w in enumerate(self.windings) if w != 0]
        self.merges = []
        if len(active) > 1:
            self.merges = [(active[0], other) for other in active[1:]]
        self.stage_names = ["straighten"] + [f"merge{i + 1}" for i in range(len(self.merges))]

    def _k_matrix(self):
        return (self.basis * (2j * np.pi * self.windings)) @ self.basis.conj().T

    def _straighten(self, r):
        tk = self.theta[:, None, None] * self._k_matrix()
        return core.expm_skew((1 - r) * self.logs + r * tk)

    def _merge(self, index, r):
        anchor, other = self.merges[index]
        d = self.samples.shape[-1]
        exps = self.windings.astype(float).copy()
        for a, b in self.merges[:index]:
            exps[a] += exps[b]
            exps[b] = 0.0
        phase = np.exp(2j * np.pi * self.theta[:, None] * exps[None, :])
        k = len(self.theta)
        diag = np.zeros((k, d, d), dtype=complex)
        diag[:, np.arange(d), np.arange(d)] = phase
        rot = _rotation(np.pi * r / 2)
        block_x = np.zeros((k, 2, 2), dtype=complex)
        block_x[:, 0, 0] = phase[:, anchor]
        block_x[:, 1, 1] = 1.0
        block_y = np.zeros_like(block_x)
        block_y[:, 0, 0] = 1.0
        block_y[:, 1, 1] = phase[:, other]
        idx = np.array([anchor, other])
        diag[:, idx[:, None], idx[None, :]] = block_x @ rot.T @ block_y @ rot
        return self.basis @ diag @ self.basis.conj().T

    def at(self, stage, r):
        """Slice ``(K, d, d)`` of stage ``stage`` at parameter ``r`` in ``[0, 1]``."""
        if stage == 0:
            return self._straighten(r)
        return self._merge(stage - 1, r)

    def schedule(self, total=None, steps=None):
        """``(stage, r)`` pairs of the concatenated family, loop first, identity last."""
        if self.det_winding != 0:
            raise ClassMismatch(self.det_winding, 0)
        n = len(self.stage_names)
        sizes = [steps] * n if steps is not None else _split(total, n)
        out = [(0, 0.0)]
        for stage, size in enumerate(sizes):
            out.extend((stage, i / size) for i in range(1, size + 1))
        return out

    def family(self, total=None, steps=None):
        """Concatenated stages from the loop (first slice) to the identity."""
        return np.stack([self.at(st, r) for st, r in self.schedule(total, steps)])


def null_homotopy(samples, closed, total=None, steps=None):
    """Family ``(S+1, K, d, d)`` contracting a loop of unitaries to the identity.

    ``closed=True`` treats ``samples`` as a free loop on the circle grid;
    ``closed=False`` as a based loop on ``[0, 1]`` whose first and last samples
    are the identity.  Give either the total resolution or steps per stage.
    """
    return LoopContraction(samples, closed).family(total=total, steps=steps)
