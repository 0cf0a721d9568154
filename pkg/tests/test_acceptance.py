"""Acceptance suite: one test per criterion, each printing a pass/fail line.

Certificates over circle bases from criteria 2, 4 and 5 are built once in
module-scoped fixtures and reused by the K1-invariance check.
"""

import json
import subprocess
import sys
import time

import numpy as np
import pytest

from dimdrop import core
from dimdrop.algebra import BaseAlgebra, dd_check
from dimdrop.basic import BasicMapSpec, basic_map_eval, demo_unitary, diagram_certificate, eta_iota_certificate
from dimdrop.elementary import (
    ElementaryMap,
    elementary_homotopy,
    gamma_compose,
    gamma_shear,
    induced_certificate,
    standard_path_sequence,
)
from dimdrop.ktheory import det_winding, det_windings
from dimdrop.projections import (
    lemma34_fixture,
    lemma34_negative_control,
    lemma34_pipeline,
    theorem39_fixture,
    theorem39_intertwiner,
)

T = 256
DIAGRAM_T = 128
DIAGRAM_STEPS = 64


# ---------------------------------------------------------------- shared runs

@pytest.fixture(scope="module")
def sequence_homotopies():
    """Elementary homotopies from the standard sequence to a conjugated variant."""
    runs = {}
    for n in (2, 3):
        E = standard_path_sequence(n, T)
        phases = np.exp(1j * np.array([0.7, -0.3, -0.4][:n]))
        phases[-1] = 1 / np.prod(phases[:-1])
        F = E.conjugated(np.diag(phases))
        stage_jump = max(core.max_opnorm(np.diff(seq.samples, axis=1)) for seq in (E, F))
        start = time.perf_counter()
        family, cert = elementary_homotopy(E, F, steps=128, jump_budget=16 * stage_jump)
        runs[n] = (E, F, family, cert, time.perf_counter() - start)
    return runs


@pytest.fixture(scope="module")
def induced_homotopies(sequence_homotopies):
    """The same homotopies evaluated on a winding-one loop."""
    u = demo_unitary(BaseAlgebra.circle(1, 64), 1, winding=1, seed=0)
    return {n: induced_certificate(run[2], u) for n, run in sequence_homotopies.items()}


@pytest.fixture(scope="module")
def eta_iota_run():
    base = BaseAlgebra.circle(1, 256)
    u = demo_unitary(base, 1, winding=1, seed=0)
    spec = BasicMapSpec.standard(1, 2, 3, T)
    cert = eta_iota_certificate(spec, u, steps=64)
    return u, spec, cert


@pytest.fixture(scope="module")
def diagram_runs():
    runs = {}
    for base in (BaseAlgebra.scalars(), BaseAlgebra.circle(1, 128)):
        start = time.perf_counter()
        report = diagram_certificate(base, 2, 2, 3, T=DIAGRAM_T, steps=DIAGRAM_STEPS)
        runs[base.label()] = (report, time.perf_counter() - start)
    return runs


# ---------------------------------------------------------------- criteria

def test_criterion_1_elementary_endpoints(criterion):
    start = time.perf_counter()
    worst = 0.0
    for base in (BaseAlgebra.scalars(), BaseAlgebra.matrices(2), BaseAlgebra.circle(1, 256)):
        for n in (2, 3, 5):
            E = ElementaryMap(standard_path_sequence(n, T))
            for seed in range(10):
                u = demo_unitary(base, 1, winding=seed % 3 - 1 if base.has_k1 else 0, seed=seed)
                ends = E.fibers(u.fibers, indices=[0, T])
                target1 = core.pad_identity(np.linalg.matrix_power(u.fibers, n), (n - 1) * u.dim)
                worst = max(worst,
                            core.max_opnorm(ends[0] - u.tensor_identity(n).fibers),
                            core.max_opnorm(ends[1] - target1))
    seconds = time.perf_counter() - start
    ok = worst <= 1e-12 and seconds < 10
    criterion(1, ok, f"max endpoint defect {worst:.2e}, {seconds:.1f} s")
    assert worst <= 1e-12
    assert seconds < 10


def test_criterion_2_elementary_homotopy(criterion, sequence_homotopies):
    details, ok = [], True
    for n, (E, F, family, cert, seconds) in sequence_homotopies.items():
        slices_ok = cert.max_boundary_defect <= 1e-8 and cert.slices_valid
        ends_ok = cert.start_defect <= 1e-10 and cert.end_defect <= 1e-10
        jump = max(cert.max_step_jump_s, cert.max_step_jump_t)
        ok &= slices_ok and ends_ok and cert.within_budget and cert.passed and seconds < 30
        details.append(f"n={n}: slice defect {cert.max_boundary_defect:.1e}, "
                       f"jump {jump:.3f} <= {cert.jump_budget:.3f}, {seconds:.1f} s")
    criterion(2, ok, "; ".join(details))
    assert ok


def test_criterion_3_composition(criterion):
    base = BaseAlgebra.circle(1, 64)
    u = demo_unitary(base, 1, winding=1, seed=3)
    agree, top = 0.0, 0.0
    for m, n in ((2, 3), (3, 4)):
        composed = gamma_compose(standard_path_sequence(m, T), standard_path_sequence(n, T))
        agree = max(agree, composed.agreement(u.fibers))
        cert = gamma_shear(composed, None, u, steps=16)
        top = max(top, cert.extra["top_edge_variation"])
    ok = agree <= 1e-9 and top <= 1e-10
    criterion(3, ok, f"agreement {agree:.2e}, top edge variation {top:.2e}")
    assert agree <= 1e-9
    assert top <= 1e-10


def test_criterion_4_eta_iota(criterion, eta_iota_run):
    u, spec, cert = eta_iota_run
    eta = basic_map_eval(spec, u)
    windings = det_windings(eta.path.samples)
    target = spec.m * spec.n * det_winding(u)
    ok = (cert.passed and cert.max_unitarity_defect <= 1e-8 and cert.slices_valid
          and bool(np.all(windings == target)))
    criterion(4, ok, f"unitarity {cert.max_unitarity_defect:.1e}, windings {sorted(set(windings.tolist()))}"
                     f" (expected {target})")
    assert cert.passed and cert.slices_valid
    assert cert.max_unitarity_defect <= 1e-8
    assert np.all(windings == 6)


def test_criterion_5_diagram(criterion, diagram_runs):
    total = sum(seconds for _, seconds in diagram_runs.values())
    ok, details = total < 300, []
    for label, (report, seconds) in diagram_runs.items():
        up, low = report.upper_left, report.lower_right
        worst = max(up.max_unitarity_defect, low.max_unitarity_defect,
                    up.max_boundary_defect, low.max_boundary_defect,
                    report.recognition_defect, report.identification_defect,
                    up.start_defect, up.end_defect, low.start_defect, low.end_defect)
        ok &= report.passed and worst <= 1e-7
        details.append(f"{label}: worst defect {worst:.1e}, {seconds:.0f} s")
    criterion(5, ok, "; ".join(details) + f"; total {total:.0f} s")
    assert ok


def _oracle_winding(loop):
    """Phase of the eigenvalue product, unwrapped around the closed loop."""
    dets = np.prod(np.linalg.eigvals(loop), axis=-1)
    phase = np.unwrap(np.angle(np.append(dets, dets[:1])))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


def test_criterion_6_winding_oracle(criterion):
    rng = np.random.default_rng(2024)
    windings = rng.permutation(np.resize(np.arange(-3, 4), 20))
    mismatches = []
    for seed, w in enumerate(windings):
        amp = 1 + seed % 3
        loop = demo_unitary(BaseAlgebra.circle(1, 256), amp, winding=int(w), seed=seed).fibers
        oracle = _oracle_winding(loop)
        if not (det_winding(loop) == oracle == w):
            mismatches.append((seed, int(w), det_winding(loop), oracle))
    criterion(6, not mismatches, f"20 loops, windings {sorted(set(windings.tolist()))}, mismatches {mismatches}")
    assert not mismatches


def test_criterion_7_unitary_equivalence(criterion):
    base = BaseAlgebra.circle(1, 128)
    fx = lemma34_fixture(base, d=4, rank=2, winding=1, m=2, n=3, seed=0)
    res = lemma34_pipeline(fx["p"], fx["q"], fx["u0"], fx["u1"], 2, 3, T=T)
    dd_check(res.U.path, 2, 3, 1e-10)
    control = lemma34_negative_control(fx["p"], fx["q"], fx["u0"], fx["u1"], 2, 3, T=T)
    ok = (res.passed and res.conjugation_defect <= 1e-8 and max(res.endpoint_defects) <= 1e-10
          and control["corner_class"] == 1 and control["valid_U"] is False)
    criterion(7, ok, f"conjugation {res.conjugation_defect:.1e}, endpoints {max(res.endpoint_defects):.1e}, "
                     f"negative control class {control['corner_class']}, valid U {control['valid_U']}")
    assert res.passed
    assert res.conjugation_defect <= 1e-8
    assert max(res.endpoint_defects) <= 1e-10
    assert control["corner_class"] == 1 and control["valid_U"] is False


def test_criterion_8_intertwiner(criterion):
    fx = theorem39_fixture(BaseAlgebra.matrices(1), d=4, rank_p=1, rank_q=3, m=2, n=3, seed=0)
    res = theorem39_intertwiner(fx["p"], fx["q"], fx["v0"], fx["v1"], 2, 3, T=T)
    ok = res.isometry_defect <= 1e-8 and res.positivity_min_eig >= -1e-8
    criterion(8, ok, f"isometry {res.isometry_defect:.1e}, min eigenvalue {res.positivity_min_eig:.1e}")
    assert res.isometry_defect <= 1e-8
    assert res.positivity_min_eig >= -1e-8


def test_criterion_9_k1_invariance(criterion, induced_homotopies, eta_iota_run, diagram_runs):
    certs = {f"elementary n={n}": c for n, c in induced_homotopies.items()}
    certs["eta_iota"] = eta_iota_run[2]
    report = diagram_runs["circle:1:128"][0]
    certs["diagram upper_left"] = report.upper_left
    certs["diagram lower_right"] = report.lower_right
    verdicts = {name: (c.windings is not None and c.winding_constant is True) for name, c in certs.items()}
    ok = all(verdicts.values())
    values = {name: c.winding_values() for name, c in certs.items()}
    criterion(9, ok, f"winding values {values}")
    assert ok, verdicts


COMMANDS = [
    ["demo-lemma34", "--grid-t", "32", "--grid-g", "64"],
    ["certify-diagram", "--k", "2", "--base", "scalars", "--grid-t", "16", "--grid-s", "4"],
]


def test_criterion_10_determinism(criterion, tmp_path):
    details, ok = [], True
    for argv in COMMANDS:
        outputs = []
        for i in range(2):
            out = tmp_path / f"{argv[0]}.{i}.json"
            subprocess.run([sys.executable, "-m", "dimdrop", *argv, "--seed", "5", "--out", str(out)],
                           check=True)
            outputs.append(out.read_bytes())
        same = outputs[0] == outputs[1]
        ok &= same and json.loads(outputs[0])["pass"]
        details.append(f"{argv[0]}: {len(outputs[0])} bytes, identical {same}")
    criterion(10, ok, "; ".join(details))
    assert ok
