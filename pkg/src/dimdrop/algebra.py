"""Sampled matrix-valued functions and dimension-drop algebras.

Three concrete unital base algebras are supported: the scalars, a full matrix
algebra ``M_N``, and loops ``C(S^1, M_N)`` sampled at ``G`` equally spaced
points ``z_g = exp(2 pi i g / G)``.  An element of ``M_d(A)`` is stored as a
stack of fibers of shape ``(F, d*N, d*N)`` where ``F`` is 1 for a point base
and ``G`` for the circle.

A :class:`GridPath` samples a function ``[0, 1] -> M_D(A)`` at ``t = i / T``.
A :class:`DimensionDropElement` is a path whose endpoints have the block
forms ``a ⊗ 1_n`` and ``b ⊗ 1_m`` that define ``Z_{m,n}(A)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from . import core
from .config import DEFAULT_TOLERANCES
from .errors import BoundaryViolation, ConfigError, DimensionMismatch, GlueMismatch


@dataclass(frozen=True)
class BaseAlgebra:
    kind: str
    N: int = 1
    G: int = 1

    def __post_init__(self):
        if self.kind not in ("scalars", "matrices", "circle"):
            raise ConfigError(f"unknown base kind {self.kind!r}")
        if self.N < 1:
            raise ConfigError("fiber size N must be positive")
        if self.kind == "scalars" and self.N != 1:
            raise ConfigError("the scalar base has N = 1")
        if self.kind == "circle" and self.G < 2:
            raise ConfigError("circle grid needs G >= 2")
        if self.kind != "circle" and self.G != 1:
            object.__setattr__(self, "G", 1)

    @classmethod
    def scalars(cls):
        return cls("scalars")

    @classmethod
    def matrices(cls, N):
        return cls("matrices", N)

    @classmethod
    def circle(cls, N=1, G=256):
        return cls("circle", N, G)

    @classmethod
    def parse(cls, text, G=256):
        """Parse ``scalars``, ``matrices:N``, ``circle:N`` or ``circle:N:G``."""
        parts = text.strip().lower().split(":")
        try:
            if parts[0] == "scalars" and len(parts) == 1:
                return cls.scalars()
            if parts[0] == "matrices" and len(parts) == 2:
                return cls.matrices(int(parts[1]))
            if parts[0] == "circle" and len(parts) in (1, 2, 3):
                N = int(parts[1]) if len(parts) > 1 else 1
                g = int(parts[2]) if len(parts) > 2 else G
                return cls.circle(N, g)
        except ValueError:
            pass
        raise ConfigError(f"cannot parse base {text!r}")

    @property
    def n_fibers(self):
        return self.G if self.kind == "circle" else 1

    @property
    def has_k1(self):
        return self.kind == "circle"

    def points(self):
        """Sample points of the spectrum (the circle grid, or ``[1]``)."""
        if self.kind == "circle":
            return np.exp(2j * np.pi * np.arange(self.G) / self.G)
        return np.ones(1, dtype=complex)

    def label(self):
        if self.kind == "scalars":
            return "scalars"
        if self.kind == "matrices":
            return f"matrices:{self.N}"
        return f"circle:{self.N}:{self.G}"

    def to_dict(self):
        return {"kind": self.kind, "N": self.N, "G": self.G}


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    """An element of ``M_amp(A)`` stored fiberwise, shape ``(F, D, D)``."""

    base: BaseAlgebra
    fibers: np.ndarray

    def __post_init__(self):
        fibers = _frozen(self.fibers)
        if fibers.ndim == 2:
            fibers = _frozen(fibers[None])
        if fibers.ndim != 3 or fibers.shape[1] != fibers.shape[2]:
            raise DimensionMismatch(f"fibers must have shape (F, D, D), got {fibers.shape}")
        if fibers.shape[0] != self.base.n_fibers:
            raise DimensionMismatch(
                f"{self.base.label()} needs {self.base.n_fibers} fibers, got {fibers.shape[0]}"
            )
        if fibers.shape[1] % self.base.N:
            raise DimensionMismatch(f"fiber size {fibers.shape[1]} not a multiple of N={self.base.N}")
        object.__setattr__(self, "fibers", fibers)

    @property
    def dim(self):
        return self.fibers.shape[-1]

    @property
    def amp(self):
        return self.dim // self.base.N

    @classmethod
    def identity(cls, base, amp=1):
        d = amp * base.N
        return cls(base, np.broadcast_to(np.eye(d), (base.n_fibers, d, d)))

    @classmethod
    def constant(cls, base, matrix):
        matrix = np.asarray(matrix, dtype=complex)
        return cls(base, np.broadcast_to(matrix, (base.n_fibers,) + matrix.shape))

    @classmethod
    def from_function(cls, base, func):
        """Evaluate ``func(z)`` (a square matrix) at every sample point."""
        return cls(base, np.stack([np.atleast_2d(func(z)) for z in base.points()]))

    def with_fibers(self, fibers):
        return AlgebraElement(self.base, fibers)

    def __matmul__(self, other):
        _same_base(self, other)
        return self.with_fibers(self.fibers @ other.fibers)

    def __add__(self, other):
        _same_base(self, other)
        return self.with_fibers(self.fibers + other.fibers)

    def __sub__(self, other):
        _same_base(self, other)
        return self.with_fibers(self.fibers - other.fibers)

    def adjoint(self):
        return self.with_fibers(core.adjoint(self.fibers))

    def power(self, k):
        """Integer power of a unitary element (negative powers use the adjoint)."""
        x = self.fibers if k >= 0 else core.adjoint(self.fibers)
        return self.with_fibers(np.linalg.matrix_power(x, abs(k)))

    def tensor_identity(self, n):
        """``x ⊗ 1_n`` in ``M_n(M_amp(A))``."""
        return self.with_fibers(core.kron_identity(self.fibers, n))

    def oplus_identity(self, k):
        """``x ⊕ 1_k`` where ``1_k`` is the unit of ``M_k(A)``."""
        return self.with_fibers(core.pad_identity(self.fibers, k * self.base.N))

    def unitarity_defect(self):
        return core.max_unitarity_defect(self.fibers)

    def is_unitary(self, tol=DEFAULT_TOLERANCES.tol):
        return self.unitarity_defect() <= tol

    def is_projection(self, tol=DEFAULT_TOLERANCES.tol):
        return core.is_projection(self.fibers, tol)

    def is_partial_isometry(self, tol=DEFAULT_TOLERANCES.tol):
        return core.is_partial_isometry(self.fibers, tol)

    def distance(self, other):
        """Sup over fibers of the operator-norm distance."""
        _same_base(self, other)
        return core.max_opnorm(self.fibers - other.fibers)

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "amp": self.amp,
            "fibers": _pairs(self.fibers),
        }

    @classmethod
    def from_dict(cls, data):
        base = BaseAlgebra(**data["base"])
        d = data["amp"] * base.N
        arr = _unpairs(data["fibers"], (base.n_fibers, d, d))
        return cls(base, arr)


def _same_base(x, y):
    if x.base != y.base:
        raise DimensionMismatch(f"bases differ: {x.base.label()} vs {y.base.label()}")
    if x.dim != y.dim:
        raise DimensionMismatch(f"dimensions differ: {x.dim} vs {y.dim}")


def _pairs(arr):
    flat = np.asarray(arr).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _unpairs(pairs, shape):
    arr = np.asarray(pairs, dtype=float)
    if arr.shape != (math.prod(shape), 2):
        raise DimensionMismatch(f"expected {math.prod(shape)} [re, im] pairs, got {arr.shape}")
    return (arr[:, 0] + 1j * arr[:, 1]).reshape(shape)


@dataclass(frozen=True, eq=False)
class GridPath:
    """A path sampled at ``t = i / T`` for ``i = 0..T``; samples ``(T+1, F, D, D)``."""

    base: BaseAlgebra
    samples: np.ndarray

    def __post_init__(self):
        samples = _frozen(self.samples)
        if samples.ndim != 4 or samples.shape[0] < 2 or samples.shape[2] != samples.shape[3]:
            raise DimensionMismatch(f"samples must have shape (T+1, F, D, D), got {samples.shape}")
        if samples.shape[1] != self.base.n_fibers:
            raise DimensionMismatch("fiber count does not match the base")
        object.__setattr__(self, "samples", samples)

    @property
    def T(self):
        return self.samples.shape[0] - 1

    @property
    def dim(self):
        return self.samples.shape[-1]

    def sample(self, i):
        return AlgebraElement(self.base, self.samples[i])

    @classmethod
    def constant(cls, element, T):
        return cls(element.base, np.broadcast_to(element.fibers, (T + 1,) + element.fibers.shape))

    @classmethod
    def from_elements(cls, elements):
        elements = list(elements)
        return cls(elements[0].base, np.stack([e.fibers for e in elements]))

    def step_jumps(self):
        """``||sample(i+1) - sample(i)||`` for each ``i`` (sup over fibers)."""
        diff = np.diff(self.samples, axis=0)
        return core.opnorm(diff).max(axis=-1)

    def continuity_modulus(self):
        return core.max_opnorm(np.diff(self.samples, axis=0))

    def unitarity_defect(self):
        return core.max_unitarity_defect(self.samples)

    def to_dict(self):
        return {
            "base": self.base.to_dict(),
            "amp": self.dim // self.base.N,
            "T": self.T,
            "fibers": _pairs(self.samples),
        }

    @classmethod
    def from_dict(cls, data):
        base = BaseAlgebra(**data["base"])
        d = data["amp"] * base.N
        arr = _unpairs(data["fibers"], (data["T"] + 1, base.n_fibers, d, d))
        return cls(base, arr)


def dumps(obj):
    """Serialize an :class:`AlgebraElement` or :class:`GridPath` to JSON."""
    return json.dumps(obj.to_dict())


def loads(text):
    data = json.loads(text)
    if "T" in data:
        return GridPath.from_dict(data)
    return AlgebraElement.from_dict(data)


@dataclass(frozen=True, eq=False)
class DimensionDropElement:
    """A path in ``M_{mn}(M_amp(A))`` satisfying the ``Z_{m,n}`` boundary conditions."""

    path: GridPath
    m: int
    n: int
    recovered_a: AlgebraElement
    recovered_b: AlgebraElement
    defect_start: float
    defect_end: float

    @property
    def base(self):
        return self.path.base

    @property
    def T(self):
        return self.path.T

    @property
    def inner_dim(self):
        return self.path.dim // (self.m * self.n)

    def sample(self, i):
        return self.path.sample(i)


def boundary_defects(samples, m, n):
    """Endpoint defects of a sampled path ``(T+1, F, D, D)`` as a ``Z_{m,n}`` element.

    ``f(0)`` must equal ``a ⊗ 1_n`` with ``a`` read from the first diagonal
    block of size ``D/n``; ``f(1)`` must equal ``b ⊗ 1_m`` likewise.  The first
    block is compared against every other block, so a single corrupted block is
    detected.
    """
    samples = np.asarray(samples)
    d = samples.shape[-1]
    if d % (m * n):
        raise DimensionMismatch(f"dimension {d} not divisible by m*n = {m * n}")
    start, end = samples[0], samples[-1]
    a = start[..., : d // n, : d // n]
    b = end[..., : d // m, : d // m]
    d0 = core.max_opnorm(start - core.kron_identity(a, n))
    d1 = core.max_opnorm(end - core.kron_identity(b, m))
    return d0, d1


def dd_check(f, m, n, boundary_tol=DEFAULT_TOLERANCES.boundary_tol):
    """Validate ``f`` as an element of ``Z_{m,n}(A)`` and recover its endpoints."""
    d = f.dim
    if d % (m * n):
        raise DimensionMismatch(f"dimension {d} not divisible by m*n = {m * n}")
    d0, d1 = boundary_defects(f.samples, m, n)
    if d0 > boundary_tol:
        raise BoundaryViolation(0, d0)
    if d1 > boundary_tol:
        raise BoundaryViolation(1, d1)
    a = AlgebraElement(f.base, f.samples[0][:, : d // n, : d // n])
    b = AlgebraElement(f.base, f.samples[-1][:, : d // m, : d // m])
    return DimensionDropElement(f, m, n, a, b, d0, d1)


def iota_embed(u, m, n, T):
    """The constant path ``t -> u ⊗ 1_{mn}``."""
    path = GridPath.constant(u.tensor_identity(m * n), T)
    return dd_check(path, m, n, boundary_tol=0.0)


def mu_k(u, k):
    """``u ⊕ 1_{k-1}`` in ``M_k`` over the algebra of ``u``."""
    if k < 1:
        raise ConfigError("k must be positive")
    return u.oplus_identity(k - 1)


def star_samples(f, g):
    """Index-arithmetic concatenation of sampled paths of equal even resolution.

    Sample ``i <= T/2`` reads ``f`` at index ``2i``; sample ``i >= T/2`` reads
    ``g`` at index ``2T - 2i``.  The glue sample ``T/2`` is ``f``'s last sample.
    """
    f = np.asarray(f)
    g = np.asarray(g)
    T = f.shape[0] - 1
    if g.shape[0] - 1 != T:
        raise DimensionMismatch("paths must share the resolution T")
    if T % 2:
        raise ConfigError(f"star concatenation needs an even resolution, got T={T}")
    first = f[0::2]
    second = g[::-2][1:] if T else g[:0]
    return np.concatenate([first, second[: T // 2]], axis=0)


def star_concat(f, g, glue_tol=DEFAULT_TOLERANCES.glue_tol,
                boundary_tol=DEFAULT_TOLERANCES.boundary_tol):
    """``f * g``: run ``f`` forward on ``[0, 1/2]`` and ``g`` backward on ``[1/2, 1]``.

    ``f`` lies in ``M_m(A) ⊗ Z_{1,n}`` and ``g`` in ``M_n(A) ⊗ Z_{1,m}`` (both
    given as :class:`DimensionDropElement` with first index 1); the result lies
    in ``A ⊗ Z_{m,n}``.
    """
    if f.m != 1 or g.m != 1:
        raise DimensionMismatch("star_concat expects elements of Z_{1,n} and Z_{1,m}")
    n, m = f.n, g.n
    if f.path.dim != g.path.dim or f.path.dim % (m * n):
        raise DimensionMismatch("incompatible dimensions for concatenation")
    if f.base != g.base:
        raise DimensionMismatch("bases differ")
    if f.T % 2:
        raise ConfigError(f"star concatenation needs an even resolution, got T={f.T}")
    glue = core.max_opnorm(f.path.samples[-1] - g.path.samples[-1])
    if glue > glue_tol:
        raise GlueMismatch(glue)
    samples = star_samples(f.path.samples, g.path.samples)
    return dd_check(GridPath(f.base, samples), m, n, boundary_tol)
