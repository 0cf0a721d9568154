import numpy as np
import pytest
from hypothesis import given, strategies as st

from dimdrop import core
from dimdrop.algebra import (
    AlgebraElement,
    BaseAlgebra,
    GridPath,
    dd_check,
    dumps,
    iota_embed,
    loads,
    mu_k,
    star_samples,
)
from dimdrop.basic import demo_unitary
from dimdrop.errors import BoundaryViolation, ConfigError, DimensionMismatch

BASES = [BaseAlgebra.scalars(), BaseAlgebra.matrices(2), BaseAlgebra.circle(1, 16)]


@pytest.mark.parametrize("text, label", [
    ("scalars", "scalars"),
    ("matrices:3", "matrices:3"),
    ("circle:1", "circle:1:256"),
    ("circle:2:64", "circle:2:64"),
])
def test_parse_labels(text, label):
    assert BaseAlgebra.parse(text).label() == label


@pytest.mark.parametrize("text", ["torus", "matrices", "circle:x", "scalars:2"])
def test_parse_rejects(text):
    with pytest.raises(ConfigError):
        BaseAlgebra.parse(text)


def test_circle_points_are_roots_of_unity():
    z = BaseAlgebra.circle(1, 8).points()
    np.testing.assert_allclose(z ** 8, np.ones(8), atol=1e-12)


@pytest.mark.parametrize("base", BASES, ids=lambda b: b.label())
def test_element_arithmetic(base):
    u = demo_unitary(base, 2, winding=0, seed=1)
    one = AlgebraElement.identity(base, 2)
    assert (u @ u.adjoint()).distance(one) < 1e-12
    assert u.is_unitary()
    assert (u.power(3) @ u.power(-3)).distance(one) < 1e-12
    assert (u + u - u).distance(u) < 1e-14
    assert u.tensor_identity(3).dim == 3 * u.dim
    assert u.oplus_identity(2).amp == u.amp + 2


def test_element_rejects_wrong_fiber_count():
    with pytest.raises(DimensionMismatch):
        AlgebraElement(BaseAlgebra.circle(1, 8), np.zeros((4, 2, 2)))
    with pytest.raises(DimensionMismatch):
        AlgebraElement(BaseAlgebra.matrices(2), np.zeros((1, 3, 3)))


def test_json_round_trip():
    base = BaseAlgebra.circle(1, 8)
    u = demo_unitary(base, 2, winding=1, seed=3)
    back = loads(dumps(u))
    assert back.base == base and back.distance(u) == 0.0
    path = GridPath.constant(u, 4)
    back = loads(dumps(path))
    assert isinstance(back, GridPath) and np.array_equal(back.samples, path.samples)


def test_grid_path_modulus():
    base = BaseAlgebra.scalars()
    ts = np.linspace(0, 1, 5)
    path = GridPath(base, np.exp(1j * ts)[:, None, None, None])
    assert path.continuity_modulus() == pytest.approx(abs(np.exp(0.25j) - 1))
    assert path.unitarity_defect() < 1e-14


@pytest.mark.parametrize("m, n", [(2, 3), (3, 2), (1, 4)])
def test_iota_is_dd_valid(m, n):
    u = demo_unitary(BaseAlgebra.circle(1, 16), 1, winding=1, seed=0)
    f = iota_embed(u, m, n, 8)
    assert f.defect_start == 0.0 and f.defect_end == 0.0
    assert f.recovered_a.distance(u.tensor_identity(m)) == 0.0
    assert f.recovered_b.distance(u.tensor_identity(n)) == 0.0


def test_dd_check_detects_one_corrupted_block():
    u = demo_unitary(BaseAlgebra.matrices(2), 1, winding=0, seed=0)
    samples = np.array(iota_embed(u, 2, 3, 4).path.samples)
    samples[0, :, -1, -1] += 1e-3
    with pytest.raises(BoundaryViolation) as info:
        dd_check(GridPath(u.base, samples), 2, 3)
    assert info.value.endpoint == 0


def test_dd_check_dimension():
    path = GridPath(BaseAlgebra.scalars(), np.ones((3, 1, 5, 5)))
    with pytest.raises(DimensionMismatch):
        dd_check(path, 2, 3)


def test_mu_k_pads_with_identity():
    u = demo_unitary(BaseAlgebra.scalars(), 1, winding=0, seed=2)
    v = mu_k(u, 3)
    np.testing.assert_allclose(v.fibers[0], np.diag([u.fibers[0, 0, 0], 1, 1]))
    with pytest.raises(ConfigError):
        mu_k(u, 0)


@given(st.integers(1, 6))
def test_star_samples_index_arithmetic(half):
    T = 2 * half
    f = np.arange(T + 1)[:, None, None, None] * np.ones((1, 1, 1, 1))
    g = 100 + np.arange(T + 1)[:, None, None, None] * np.ones((1, 1, 1, 1))
    out = star_samples(f, g)[:, 0, 0, 0]
    assert out.shape == (T + 1,)
    for i in range(T + 1):
        expected = 2 * i if i <= T // 2 else 100 + 2 * T - 2 * i
        assert out[i] == expected


def test_star_samples_needs_even_resolution():
    with pytest.raises(ConfigError):
        star_samples(np.zeros((4, 1, 1, 1)), np.zeros((4, 1, 1, 1)))


def test_kron_identity_element_matches_core():
    u = demo_unitary(BaseAlgebra.circle(1, 8), 2, winding=1, seed=5)
    np.testing.assert_array_equal(u.tensor_identity(2).fibers, core.kron_identity(u.fibers, 2))
