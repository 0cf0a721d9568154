import numpy as np
import pytest

from dimdrop import core
from dimdrop.algebra import BaseAlgebra
from dimdrop.basic import (
    BasicMapSpec,
    basic_map_eval,
    demo_unitary,
    diagram_certificate,
    eta_iota_certificate,
    flip_untwist,
    identify_amplification,
    swap_matrix,
)
from dimdrop.errors import ConfigError, NotCoprime
from dimdrop.ktheory import det_winding


@pytest.mark.parametrize("k, m, n", [(1, 2, 3), (2, 2, 3), (1, 1, 4)])
def test_basic_map_boundary(k, m, n):
    spec = BasicMapSpec.standard(k, m, n, T=16)
    u = demo_unitary(BaseAlgebra.circle(1, 32), k, winding=1, seed=0)
    f = basic_map_eval(spec, u)
    um = core.pad_identity(np.linalg.matrix_power(u.fibers, m), (m - k) * u.dim // k)
    un = core.pad_identity(np.linalg.matrix_power(u.fibers, n), (n - k) * u.dim // k)
    np.testing.assert_allclose(f.recovered_a.fibers, um, atol=1e-12)
    np.testing.assert_allclose(f.recovered_b.fibers, un, atol=1e-12)
    np.testing.assert_allclose(f.path.samples[0], core.kron_identity(um, n), atol=1e-12)
    np.testing.assert_allclose(f.path.samples[-1], core.kron_identity(un, m), atol=1e-12)


def test_basic_spec_validation():
    with pytest.raises(ConfigError):
        BasicMapSpec.standard(3, 2, 3)
    with pytest.warns(UserWarning):
        spec = BasicMapSpec.standard(1, 2, 4, T=8)
    with pytest.raises(NotCoprime):
        spec.require_coprime()


def test_eta_iota_winding_is_mn_times_input():
    spec = BasicMapSpec.standard(1, 2, 3, T=32)
    u = demo_unitary(BaseAlgebra.circle(1, 64), 1, winding=1, seed=0)
    cert = eta_iota_certificate(spec, u, steps=8)
    assert cert.passed, cert.to_dict()
    assert cert.winding_values() == [6]
    assert cert.winding_constant


def test_swap_and_flip_path():
    s = swap_matrix(2)
    e0, e1 = np.eye(2)
    np.testing.assert_array_equal(s @ np.kron(e0, e1), np.kron(e1, e0))
    flip = flip_untwist(3, inner=2)
    np.testing.assert_allclose(flip.path(0.0)[0], flip.full_swap(), atol=1e-12)
    np.testing.assert_allclose(flip.path(1.0)[0], np.eye(18), atol=1e-12)
    path = flip.path(np.linspace(0, 1, 33))
    assert core.max_unitarity_defect(path) < 1e-12


def test_identify_amplification_is_permutation_conjugation():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(2 * 6 * 2,) * 2)
    y = identify_amplification(x, 2, 6)
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(y)), np.sort(np.linalg.eigvals(x)), atol=1e-9)
    np.testing.assert_allclose(identify_amplification(np.eye(24), 2, 6), np.eye(24))


@pytest.mark.parametrize("base", [BaseAlgebra.scalars(), BaseAlgebra.circle(1, 32)], ids=str)
def test_diagram_small(base):
    report = diagram_certificate(base, 2, 2, 3, T=16, steps=4)
    assert report.passed, report.to_dict()
    assert report.recognition_defect < 1e-12 and report.identification_defect < 1e-12


def test_diagram_not_coprime():
    with pytest.raises(NotCoprime):
        diagram_certificate(BaseAlgebra.scalars(), 2, 4, 6, T=8, steps=2)


def test_demo_unitary_winding():
    for w in (-2, 0, 3):
        u = demo_unitary(BaseAlgebra.circle(2, 64), 2, winding=w, seed=w + 5)
        assert u.is_unitary(1e-12) and det_winding(u) == w
