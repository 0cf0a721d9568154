"""Basic maps into dimension-drop algebras and the homotopies around them.

For ``u`` a unitary of ``M_k(A)`` the basic map is

    eta(u) = W_0(u^m ⊕ 1_{m-k}) * W_1(u^n ⊕ 1_{n-k})

with ``W_0`` an elementary map of degree ``n`` over ``M_m(A)`` and ``W_1`` one
of degree ``m`` over ``M_n(A)``.  :func:`eta_iota_certificate` deforms a basic
map with ``k = 1`` into the constant embedding ``u ⊗ 1`` in three stages:

shear
    the two halves are replaced by composed elementary maps ``gamma_0``,
    ``gamma_1`` of degree ``mn``;
deform
    the path sequence of ``gamma_1`` is deformed into that of ``gamma_0``;
shrink
    ``gamma * gamma`` is shrunk to the constant path by ``t -> s t``.

:func:`diagram_certificate` checks both triangles of the square formed by
``mu_k``, ``eta`` and the embeddings.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import core
from .algebra import AlgebraElement, star_concat
from .certificates import CertificateBuilder
from .config import DEFAULT_TOLERANCES
from .elementary import (
    ElementaryHomotopy,
    ElementaryMap,
    gamma_compose,
    shear_slice,
    standard_path_sequence,
)
from .errors import BranchFailure, ConfigError, NotCoprime, NotUnitary, StageError


@dataclass
class BasicMapSpec:
    """Data of a basic map: sizes and the two auxiliary elementary maps."""

    k: int
    m: int
    n: int
    W0: ElementaryMap
    W1: ElementaryMap

    def __post_init__(self):
        if min(self.k, self.m, self.n) < 1:
            raise ConfigError("k, m, n must be positive")
        if self.m < self.k or self.n < self.k:
            raise ConfigError(f"need m >= k and n >= k, got k={self.k}, m={self.m}, n={self.n}")
        if self.W0.n != self.n or self.W1.n != self.m:
            raise ConfigError("W0 must have degree n and W1 degree m")
        if self.W0.T != self.W1.T:
            raise ConfigError("W0 and W1 must share the resolution T")
        if not self.coprime:
            warnings.warn(f"gcd({self.m}, {self.n}) != 1: Z_{{m,n}} is not prime", stacklevel=2)

    @classmethod
    def standard(cls, k, m, n, T=256):
        return cls(k, m, n, ElementaryMap(standard_path_sequence(n, T)),
                   ElementaryMap(standard_path_sequence(m, T)))

    @property
    def T(self):
        return self.W0.T

    @property
    def coprime(self):
        return math.gcd(self.m, self.n) == 1

    def require_coprime(self):
        if not self.coprime:
            raise NotCoprime(self.m, self.n)

    def to_dict(self):
        return {"k": self.k, "m": self.m, "n": self.n, "T": self.T}


def _inputs(u_fibers, k, m, n):
    """``(u^m ⊕ 1_{m-k}, u^n ⊕ 1_{n-k})`` for fibers of ``M_k(A)``."""
    d = u_fibers.shape[-1]
    if d % k:
        raise ConfigError(f"fiber size {d} is not a multiple of k={k}")
    unit = d // k
    x0 = core.pad_identity(np.linalg.matrix_power(u_fibers, m), (m - k) * unit)
    x1 = core.pad_identity(np.linalg.matrix_power(u_fibers, n), (n - k) * unit)
    return x0, x1


def _star_halves(f_even, g_even):
    """Concatenate ``f`` (even samples, forward) with ``g`` (even samples, backward)."""
    return np.concatenate([f_even, g_even[::-1][1:]], axis=0)


def basic_map_eval(spec, u, glue_tol=DEFAULT_TOLERANCES.glue_tol,
                   boundary_tol=DEFAULT_TOLERANCES.boundary_tol):
    """``eta(u)`` as an element of ``A ⊗ Z_{m,n}``."""
    if not u.is_unitary():
        raise NotUnitary(u.unitarity_defect(), DEFAULT_TOLERANCES.tol)
    x0, x1 = _inputs(u.fibers, spec.k, spec.m, spec.n)
    f = spec.W0.dd_element(AlgebraElement(u.base, x0), boundary_tol)
    g = spec.W1.dd_element(AlgebraElement(u.base, x1), boundary_tol)
    return star_concat(f, g, glue_tol, boundary_tol)


def _eta_fibers(spec, u_fibers, even):
    x0, x1 = _inputs(u_fibers, spec.k, spec.m, spec.n)
    return _star_halves(spec.W0.fibers(x0, indices=even), spec.W1.fibers(x1, indices=even))


def _even(T):
    if T % 2:
        raise ConfigError(f"resolution T must be even, got {T}")
    return np.arange(0, T + 1, 2)


def _glue(f_even, g_even):
    return core.max_opnorm(f_even[-1] - g_even[-1])


def eta_iota_stages(spec, u_fibers, builder, steps=64):
    """Feed the three stages deforming ``eta(u)`` into ``u ⊗ 1_{mn}`` to ``builder``."""
    if spec.k != 1:
        raise ConfigError("the eta ~ iota homotopy needs k = 1")
    m, n, T = spec.m, spec.n, spec.T
    even = _even(T)
    ts = even / T
    c0 = gamma_compose(standard_path_sequence(m, T), spec.W0)
    c1 = gamma_compose(standard_path_sequence(n, T), spec.W1)

    def emit(f_even, g_even, extra=0.0):
        builder.add(_star_halves(f_even, g_even), validity_defect=max(_glue(f_even, g_even), extra))

    stage = "shear"
    try:
        builder.stage(stage)
        for i in range(steps + 1):
            s = 1.0 - i / steps
            emit(shear_slice(c0, u_fibers, s, even), shear_slice(c1, u_fibers, s, even))
        stage = "deform"
        builder.stage(stage)
        gamma0 = c0.product.fibers(u_fibers, indices=even)
        family = ElementaryHomotopy(c1.product.seq, c0.product.seq, steps)
        for _, seq in family.slices():
            g = ElementaryMap(seq).fibers(u_fibers, indices=even)
            emit(gamma0, g, extra=seq.max_defect())
        stage = "shrink"
        builder.stage(stage)
        for i in range(steps + 1):
            s = 1.0 - i / steps
            half = c0.product.fibers(u_fibers, taus=s * ts)
            emit(half, half)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(stage, exc) from exc


def _iota_fibers(u_fibers, mn, T):
    return np.broadcast_to(core.kron_identity(u_fibers, mn), (T + 1,) + (u_fibers.shape[0],) + (mn * u_fibers.shape[-1],) * 2)


def eta_iota_certificate(spec, u, steps=64, tol=1e-8, boundary_tol=1e-8, keep=False,
                         name="eta_iota"):
    """Certified homotopy from ``eta(u)`` to ``iota(u) = u ⊗ 1_{mn}`` (``k = 1``)."""
    spec.require_coprime()
    builder = CertificateBuilder(
        name, {**spec.to_dict(), "base": u.base.label(), "steps": steps},
        tol=tol, slice_tol=boundary_tol, dd=(spec.m, spec.n), winding=u.base.has_k1,
        keep=keep, endpoint_tol=tol,
    )
    eta_iota_stages(spec, u.fibers, builder, steps)
    start = _eta_fibers(spec, u.fibers, _even(spec.T))
    return builder.finish(start=start, end=_iota_fibers(u.fibers, spec.m * spec.n, spec.T))


# ---------------------------------------------------------------- the flip

def swap_matrix(k):
    """The flip ``e ⊗ f -> f ⊗ e`` on ``C^k ⊗ C^k``."""
    s = np.zeros((k * k, k * k), dtype=complex)
    for a in range(k):
        for b in range(k):
            s[b * k + a, a * k + b] = 1.0
    return s


@dataclass
class FlipUntwist:
    """The flip unitary ``S`` on ``M_k ⊗ M_k ⊗ A``, a path ``S_r`` from ``S`` to 1,
    and ``Psi_r(v) = S_r (v ⊕ 1_{k-1}) S_r*``."""

    k: int
    inner: int
    S: np.ndarray
    waypoint: bool

    def path(self, r):
        """``S_r`` for scalar or array ``r`` (with the inner identity)."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        kk = self.k * self.k
        if self.k == 1:
            base = np.broadcast_to(np.eye(1, dtype=complex), r.shape + (1, 1))
        elif not self.waypoint:
            base = core.unitary_geodesic(self.S, np.eye(kk), r)
        else:
            mid = 1j * np.eye(kk)
            base = np.empty(r.shape + (kk, kk), dtype=complex)
            lo = r <= 0.5
            if np.any(lo):
                base[lo] = core.unitary_geodesic(self.S, mid, 2 * r[lo])
            if np.any(~lo):
                base[~lo] = core.unitary_geodesic(mid, np.eye(kk), 2 * r[~lo] - 1)
        return core.tensor_product(np.eye(self.inner), base)

    def full_swap(self):
        return core.tensor_product(np.eye(self.inner), self.S)

    def psi(self, x):
        """Conjugation by the flip on fibers of ``M_k(M_k(A))``."""
        s = self.full_swap()
        return s @ x @ s.conj().T

    def Psi(self, v, r=0.0):
        """``Psi_r(v)`` on fibers of ``B = M_k(A)``."""
        s = self.path(r)[0]
        x = core.pad_identity(v, (self.k - 1) * self.k * self.inner)
        return s @ x @ s.conj().T


def flip_untwist(k, inner=1):
    """Flip data for ``M_k(B)`` with ``B = M_k(A)`` and ``A``-fibers of size ``inner``."""
    if k < 1:
        raise ConfigError("k must be positive")
    S = swap_matrix(k)
    waypoint = False
    if k > 1:
        try:
            core.unitary_log(S)
        except BranchFailure:
            waypoint = True
    return FlipUntwist(k, inner, S, waypoint)


def identify_amplification(x, k, mn):
    """Move the ``M_k`` amplification index inside the ``M_{mn}`` index.

    ``x`` has fibers of ``M_k(M_{mn}(A))`` with index order ``(c, J, a)``; the
    result uses ``(J, c, a)``, i.e. ``(a ⊗ f) ⊗ c -> (a ⊗ c) ⊗ f``.
    """
    x = np.asarray(x)
    d = x.shape[-1] // (k * mn)
    lead = x.shape[:-2]
    y = x.reshape(lead + (k, mn, d, k, mn, d))
    nl = len(lead)
    axes = tuple(range(nl)) + tuple(nl + i for i in (1, 0, 2, 4, 3, 5))
    return y.transpose(axes).reshape(x.shape)


# ---------------------------------------------------------------- diagram

def demo_unitary(base, amp=1, winding=1, seed=0):
    """Seeded unitary of ``M_amp(A)``; over the circle it has the given winding.

    Circle version: ``g0 · diag(z^w, 1, ...) · exp(cos θ X + sin θ Y)`` with
    ``g0`` random and ``X, Y`` random skew-Hermitian, ``z = e^{iθ}``.
    """
    rng = np.random.default_rng(seed)
    d = amp * base.N
    g0 = core.random_unitary(d, rng)
    if not base.has_k1:
        return AlgebraElement.constant(base, g0)
    x = core.random_skew_hermitian(d, rng)
    y = core.random_skew_hermitian(d, rng)
    theta = 2 * np.pi * np.arange(base.G) / base.G
    spin = core.expm_skew(np.cos(theta)[:, None, None] * x + np.sin(theta)[:, None, None] * y)
    diag = np.broadcast_to(np.eye(d, dtype=complex), (base.G, d, d)).copy()
    diag[:, 0, 0] = base.points() ** winding
    return AlgebraElement(base, g0 @ diag @ spin)


@dataclass
class DiagramReport:
    upper_left: object
    lower_right: object
    recognition_defect: float
    identification_defect: float
    seconds: float
    tol: float = 1e-8

    @property
    def passed(self):
        return bool(
            self.upper_left.passed
            and self.lower_right.passed
            and self.recognition_defect <= self.tol
            and self.identification_defect <= self.tol
        )

    def to_dict(self):
        return {
            "upper_left": self.upper_left.to_dict(),
            "lower_right": self.lower_right.to_dict(),
            "recognition_defect": self.recognition_defect,
            "identification_defect": self.identification_defect,
            "pass": self.passed,
        }


def diagram_certificate(base, k, m, n, u=None, v=None, T=256, steps=64, tol=1e-8,
                        boundary_tol=1e-8, seed=0):
    """Certify both triangles of the ``mu_k`` / ``eta`` / embedding square.

    Upper-left: ``eta ∘ mu_k`` coincides with a basic map with ``k = 1``, which
    is deformed into ``iota``.  Lower-right: after moving the amplification
    index, ``mu_k(eta(v))`` equals the basic map over ``B = M_k(A)`` built from
    ``Psi(v)``; the flip path turns ``Psi`` into ``mu_k``, and the resulting
    basic map with ``k = 1`` over ``B`` is deformed into ``v ⊗ 1``.
    """
    start = time.perf_counter()
    if math.gcd(m, n) != 1:
        raise NotCoprime(m, n)
    spec = BasicMapSpec.standard(k, m, n, T)
    spec1 = BasicMapSpec.standard(1, m, n, T)
    if u is None:
        u = demo_unitary(base, 1, winding=1, seed=seed)
    if v is None:
        v = demo_unitary(base, k, winding=1, seed=seed + 1)
    even = _even(T)
    mn = m * n

    # upper-left: eta(mu_k(u)) is the basic map with k = 1
    recognition = core.max_opnorm(
        _eta_fibers(spec, core.pad_identity(u.fibers, (k - 1) * u.dim), even)
        - _eta_fibers(spec1, u.fibers, even)
    )
    upper = eta_iota_certificate(spec1, u, steps, tol, boundary_tol, name="upper_left")
    upper.extra["recognition_defect"] = recognition

    # lower-right over B = M_k(A)
    inner = v.dim // k
    flip = flip_untwist(k, inner)
    mu_eta = core.pad_identity(_eta_fibers(spec, v.fibers, even), (k - 1) * mn * inner)
    identified = identify_amplification(mu_eta, k, mn)

    builder = CertificateBuilder(
        "lower_right", {"k": k, "m": m, "n": n, "T": T, "base": base.label(), "steps": steps},
        tol=tol, slice_tol=boundary_tol, dd=(m, n), winding=base.has_k1, endpoint_tol=tol,
    )
    specB = BasicMapSpec.standard(k, m, n, T)
    try:
        builder.stage("flip")
        for i in range(steps + 1):
            psi = flip.Psi(v.fibers, i / steps)
            x0 = core.pad_identity(np.linalg.matrix_power(psi, m), (m - k) * k * inner)
            x1 = core.pad_identity(np.linalg.matrix_power(psi, n), (n - k) * k * inner)
            f = specB.W0.fibers(x0, indices=even)
            g = specB.W1.fibers(x1, indices=even)
            builder.add(_star_halves(f, g), validity_defect=_glue(f, g))
    except Exception as exc:
        raise StageError("flip", exc) from exc
    flip_start = builder._first
    identification = core.max_opnorm(identified - flip_start)
    eta_iota_stages(spec1, v.fibers, builder, steps)
    lower = builder.finish(start=identified, end=_iota_fibers(v.fibers, mn, T))
    lower.extra["identification_defect"] = identification
    return DiagramReport(upper, lower, recognition, identification, time.perf_counter() - start, tol)
