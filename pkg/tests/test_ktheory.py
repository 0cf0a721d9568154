import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dimdrop import core
from dimdrop.algebra import AlgebraElement, BaseAlgebra, mu_k
from dimdrop.basic import demo_unitary
from dimdrop.errors import (
    ClassMismatch,
    NotCoprime,
    NotCornerUnitary,
    NyquistViolation,
    RankJump,
)
from dimdrop.ktheory import (
    K1Class,
    bezout,
    connect_in_u0,
    corner_compress,
    corner_k1,
    corner_unitary,
    det_winding,
    k1_class,
    k1_representative,
    projection_frame,
    rank_fullness,
    rank_one_subprojection,
)

CIRCLE = BaseAlgebra.circle(1, 64)


def z_points(G):
    return np.exp(2j * np.pi * np.arange(G) / G)


def test_det_winding_examples():
    G = 64
    z = z_points(G)
    assert det_winding(np.broadcast_to(np.eye(2, dtype=complex), (G, 2, 2))) == 0
    loop = np.broadcast_to(np.eye(2, dtype=complex), (G, 2, 2)).copy()
    loop[:, 0, 0] = z
    assert det_winding(loop) == 1
    assert det_winding(z.conj()[:, None, None] * np.eye(2)) == -2


def test_det_winding_nyquist():
    z = z_points(8)
    with pytest.raises(NyquistViolation):
        det_winding((z ** 4)[:, None, None])


@pytest.mark.parametrize("c", range(-3, 4))
def test_k1_round_trip(c):
    assert k1_class(k1_representative(CIRCLE, c, d=2)) == K1Class((c,))


def test_point_bases_have_empty_class():
    for base in (BaseAlgebra.scalars(), BaseAlgebra.matrices(3)):
        u = demo_unitary(base, 2, winding=0, seed=0)
        assert k1_class(u) == K1Class() and k1_class(u).is_zero
        assert k1_representative(base, 0, 2).distance(AlgebraElement.identity(base, 2)) == 0


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(0, 1000))
def test_k1_additive_under_products(a, b, seed):
    u = demo_unitary(CIRCLE, 2, winding=a, seed=seed)
    v = demo_unitary(CIRCLE, 2, winding=b, seed=seed + 1)
    assert k1_class(u @ v) == k1_class(u) + k1_class(v)
    assert k1_class(u.adjoint()) == -k1_class(u)
    assert k1_class(mu_k(u, 3)) == k1_class(u)
    s = AlgebraElement(CIRCLE, core.direct_sum(u.fibers, v.fibers))
    assert k1_class(s) == k1_class(u) + k1_class(v)


def test_connect_in_u0_constant_and_general():
    u = demo_unitary(CIRCLE, 2, winding=1, seed=3)
    path = connect_in_u0(u, u, 16)
    assert path.continuity_modulus() < 1e-12
    theta = 2 * np.pi * np.sin(2 * np.pi * np.arange(64) / 64)
    fibers = np.broadcast_to(np.eye(2, dtype=complex), (64, 2, 2)).copy()
    fibers[:, 0, 0] = np.exp(1j * theta)
    v = AlgebraElement(CIRCLE, fibers)
    one = AlgebraElement.identity(CIRCLE, 2)
    path = connect_in_u0(one, v, 64)
    assert path.unitarity_defect() < 1e-10
    np.testing.assert_array_equal(path.samples[0], one.fibers)
    np.testing.assert_array_equal(path.samples[-1], v.fibers)
    w = demo_unitary(CIRCLE, 2, winding=0, seed=8)
    path = connect_in_u0(u, u @ w, 64)
    assert path.unitarity_defect() < 1e-10 and path.continuity_modulus() < 0.5


def test_connect_in_u0_class_mismatch():
    with pytest.raises(ClassMismatch):
        connect_in_u0(AlgebraElement.identity(CIRCLE, 1), k1_representative(CIRCLE, 1), 8)


def test_rank_fullness_examples():
    zero = AlgebraElement(CIRCLE, np.zeros((64, 3, 3), dtype=complex))
    assert rank_fullness(zero).rank == 0 and not rank_fullness(zero).full
    p = AlgebraElement(CIRCLE, np.broadcast_to(np.diag([1, 1, 0]).astype(complex), (64, 3, 3)))
    assert rank_fullness(p).rank == 2 and rank_fullness(p).full
    g = demo_unitary(CIRCLE, 2, winding=1, seed=0)
    e = np.diag([1, 0]).astype(complex)
    twisted = g.with_fibers(g.fibers @ e @ core.adjoint(g.fibers))
    assert rank_fullness(twisted).rank == 1


def test_rank_jump():
    fibers = np.zeros((64, 2, 2), dtype=complex)
    fibers[:32, 0, 0] = 1
    with pytest.raises(RankJump):
        rank_fullness(AlgebraElement(CIRCLE, fibers))


def test_bezout_examples():
    assert bezout(2, 3) == (-1, 1)
    assert bezout(1, 7) == (1, 0)
    with pytest.raises(NotCoprime):
        bezout(4, 6)


@given(st.integers(1, 200), st.integers(1, 200))
def test_bezout_identity(m, n):
    if math.gcd(m, n) != 1:
        with pytest.raises(NotCoprime):
            bezout(m, n)
        return
    j, k = bezout(m, n)
    assert j * m + k * n == 1
    assert abs(j) <= n


def test_corner_examples():
    base = CIRCLE
    one = AlgebraElement.identity(base, 3)
    x = demo_unitary(base, 3, winding=0, seed=1)
    assert corner_compress(x, one).distance(x) < 1e-15
    p = AlgebraElement(base, np.broadcast_to(np.diag([1, 1, 0]).astype(complex), (64, 3, 3)))
    assert corner_k1(p, p).is_zero
    for c in (-2, 1, 3):
        assert corner_k1(corner_unitary(p, c), p) == K1Class((c,))
    with pytest.raises(NotCornerUnitary):
        corner_k1(one, p)


def test_twisted_corner_and_frame():
    g = demo_unitary(CIRCLE, 3, winding=1, seed=4)
    e = np.diag([1, 1, 0]).astype(complex)
    p = g.with_fibers(g.fibers @ e @ core.adjoint(g.fibers))
    frame = projection_frame(p)
    np.testing.assert_allclose(frame @ core.adjoint(frame), p.fibers, atol=1e-10)
    assert core.max_opnorm(np.diff(frame, axis=0)) < 0.5
    p1 = rank_one_subprojection(p)
    assert p1.is_projection(1e-10)
    assert core.max_opnorm(p1.fibers @ p.fibers - p1.fibers) < 1e-10
    assert corner_k1(corner_unitary(p, -1), p) == K1Class((-1,))
