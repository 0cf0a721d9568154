import numpy as np
import pytest

from dimdrop.certificates import CertificateBuilder


def circle_loop(G, w, phase=0.0):
    z = np.exp(2j * np.pi * np.arange(G) / G)
    return (np.exp(1j * phase) * z ** w)[:, None, None]


def test_constant_family_passes():
    b = CertificateBuilder("c", {"x": 1}, tol=1e-9, winding=True)
    for s in range(5):
        b.add(circle_loop(16, 1, 0.01 * s)[None])
    cert = b.finish(start=circle_loop(16, 1)[None])
    assert cert.passed
    assert cert.winding_values() == [1]
    assert cert.max_step_jump_s == pytest.approx(abs(np.exp(0.01j) - 1))
    d = cert.to_dict()
    assert d["pass"] and d["winding_constant_in_s"] and d["params"] == {"x": 1}


def test_winding_change_fails():
    b = CertificateBuilder("c", winding=True)
    b.add(circle_loop(16, 1)[None])
    b.add(circle_loop(16, 2)[None])
    cert = b.finish()
    assert cert.winding_constant is False and not cert.passed


def test_nyquist_violation_recorded():
    b = CertificateBuilder("c", winding=True)
    b.add(circle_loop(8, 4)[None])
    cert = b.finish()
    assert cert.winding_error and not cert.passed


def test_non_unitary_and_endpoint_failures():
    b = CertificateBuilder("c", tol=1e-9)
    b.add(np.full((2, 1, 1, 1), 1.1 + 0j))
    assert not b.finish().passed
    b = CertificateBuilder("c", tol=1e-9)
    b.add(np.ones((2, 1, 1, 1), dtype=complex))
    assert not b.finish(end=-np.ones((2, 1, 1, 1))).passed


def test_stage_join_and_budget():
    b = CertificateBuilder("c", jump_budget=0.1)
    b.stage("a").add(np.ones((1, 1, 1, 1), dtype=complex))
    b.stage("b").add(np.exp(0.5j) * np.ones((1, 1, 1, 1)))
    cert = b.finish()
    assert cert.max_join_defect == pytest.approx(abs(np.exp(0.5j) - 1))
    assert not cert.passed
    assert [s["name"] for s in cert.to_dict()["stages"]] == ["a", "b"]


def test_slice_validity_and_keep():
    b = CertificateBuilder("c", slice_tol=1e-9, keep=True)
    b.add(np.ones((1, 1, 1, 1), dtype=complex), validity_defect=1e-3)
    cert = b.finish()
    assert not cert.slices_valid and len(cert.slices) == 1
