import numpy as np
import pytest

from dimdrop import core
from dimdrop.errors import ClassMismatch
from dimdrop.loops import LoopContraction, log_from_lifts, null_homotopy, track_log


def loop(G, exps, seed=0):
    """``g diag(z^e) g*`` with a fixed random ``g``."""
    z = np.exp(2j * np.pi * np.arange(G) / G)
    g = core.random_unitary(len(exps), np.random.default_rng(seed))
    diag = np.zeros((G, len(exps), len(exps)), dtype=complex)
    diag[:, np.arange(len(exps)), np.arange(len(exps))] = z[:, None] ** np.array(exps)
    return g @ diag @ g.conj().T


def test_track_log_reproduces_samples():
    samples = loop(32, [1, -1, 0])
    lifts, vecs, _ = track_log(samples, closed=True)
    np.testing.assert_allclose(core.expm_skew(log_from_lifts(vecs, lifts)), samples, atol=1e-10)


@pytest.mark.parametrize("exps, stages", [([0, 0], 1), ([1, -1], 2), ([2, -1, -1], 3)])
def test_null_homotopy_contracts(exps, stages):
    samples = loop(48, exps)
    lc = LoopContraction(samples, closed=True)
    assert len(lc.stage_names) == stages
    fam = lc.family(steps=16)
    np.testing.assert_allclose(fam[0], samples, atol=1e-10)
    np.testing.assert_allclose(fam[-1], np.broadcast_to(np.eye(len(exps)), samples.shape), atol=1e-10)
    assert core.max_unitarity_defect(fam) < 1e-10
    assert core.max_opnorm(np.diff(fam, axis=0)) < 0.5
    dets = np.linalg.det(fam)
    steps = np.angle(np.roll(dets, -1, axis=1) / dets).sum(axis=1) / (2 * np.pi)
    np.testing.assert_allclose(steps, 0, atol=1e-8)


def test_nonzero_winding_is_refused():
    with pytest.raises(ClassMismatch):
        null_homotopy(loop(32, [1, 0]), closed=True, steps=4)


def test_based_loop_on_interval():
    ts = np.linspace(0, 1, 33)
    k = np.diag([1.0, -1.0])
    samples = core.expm_skew(2j * np.pi * ts[:, None, None] * k)
    fam = null_homotopy(samples, closed=False, total=32)
    np.testing.assert_allclose(fam[-1], np.broadcast_to(np.eye(2), samples.shape), atol=1e-10)
    np.testing.assert_allclose(fam[:, 0], np.broadcast_to(np.eye(2), fam[:, 0].shape), atol=1e-10)
    np.testing.assert_allclose(fam[:, -1], np.broadcast_to(np.eye(2), fam[:, -1].shape), atol=1e-10)
