"""Homotopy certificates: numerical verdicts on sampled unitary families.

A family ``H(s, t)`` is fed to a :class:`CertificateBuilder` one ``s``-slice at
a time (an array whose first axis is ``t``), so large families never have to
be held in memory.  Slices are grouped into named stages; the builder keeps,
per stage, the worst unitarity defect, the worst slice-validity defect
(boundary conditions, path-sequence laws, ...), the largest step between
neighbouring samples in ``s`` and in ``t``, and the mismatch at the join with
the previous stage.  Over circle bases it also records the determinant
winding of every sample ``H(s, t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import core
from .algebra import boundary_defects
from .errors import NyquistViolation
from .ktheory import det_windings


@dataclass
class StageRecord:
    name: str
    n_slices: int = 0
    max_unitarity_defect: float = 0.0
    max_boundary_defect: float = 0.0
    max_step_jump_s: float = 0.0
    max_step_jump_t: float = 0.0
    join_defect: float = 0.0
    slices_valid: bool = True
    endpoints_ok: bool = True

    def to_dict(self):
        return {
            "name": self.name,
            "n_slices": self.n_slices,
            "max_unitarity_defect": self.max_unitarity_defect,
            "max_boundary_defect": self.max_boundary_defect,
            "max_step_jump_s": self.max_step_jump_s,
            "max_step_jump_t": self.max_step_jump_t,
            "join_defect": self.join_defect,
            "endpoints_ok": self.endpoints_ok,
            "slices_valid": self.slices_valid,
        }


@dataclass
class HomotopyCertificate:
    """Verdicts for a sampled family; ``passed`` combines all of them."""

    name: str
    params: dict
    stages: list
    tol: float
    slice_tol: float
    start_defect: float = 0.0
    end_defect: float = 0.0
    endpoint_tol: float = 1e-9
    windings: np.ndarray | None = None
    winding_error: str | None = None
    jump_budget: float | None = None
    slices: list | None = None
    extra: dict = field(default_factory=dict)

    @property
    def max_unitarity_defect(self):
        return max((s.max_unitarity_defect for s in self.stages), default=0.0)

    @property
    def max_boundary_defect(self):
        return max((s.max_boundary_defect for s in self.stages), default=0.0)

    @property
    def max_step_jump_s(self):
        return max((s.max_step_jump_s for s in self.stages), default=0.0)

    @property
    def max_step_jump_t(self):
        return max((s.max_step_jump_t for s in self.stages), default=0.0)

    @property
    def max_join_defect(self):
        return max((s.join_defect for s in self.stages), default=0.0)

    @property
    def endpoints_ok(self):
        return self.start_defect <= self.endpoint_tol and self.end_defect <= self.endpoint_tol

    @property
    def slices_valid(self):
        return all(s.slices_valid for s in self.stages)

    @property
    def winding_constant(self):
        """Each fixed-``t`` winding is constant in ``s`` (None without windings)."""
        if self.winding_error:
            return False
        if self.windings is None:
            return None
        return bool(np.all(self.windings == self.windings[:1]))

    @property
    def within_budget(self):
        if self.jump_budget is None:
            return True
        return max(self.max_step_jump_s, self.max_step_jump_t) <= self.jump_budget

    @property
    def passed(self):
        return bool(
            self.max_unitarity_defect <= self.tol
            and self.max_join_defect <= self.tol
            and self.endpoints_ok
            and self.slices_valid
            and self.within_budget
            and self.winding_constant is not False
        )

    def winding_values(self):
        if self.windings is None:
            return []
        return sorted({int(w) for w in np.unique(self.windings)})

    def to_dict(self):
        out = {
            "name": self.name,
            "params": self.params,
            "stages": [s.to_dict() for s in self.stages],
            "max_unitarity_defect": self.max_unitarity_defect,
            "max_boundary_defect": self.max_boundary_defect,
            "max_step_jump_s": self.max_step_jump_s,
            "max_step_jump_t": self.max_step_jump_t,
            "start_defect": self.start_defect,
            "end_defect": self.end_defect,
            "endpoints_ok": self.endpoints_ok,
            "slices_valid": self.slices_valid,
            "pass": self.passed,
        }
        if self.jump_budget is not None:
            out["jump_budget"] = self.jump_budget
        if self.windings is not None or self.winding_error:
            out["winding_constant_in_s"] = self.winding_constant
            out["winding_values"] = self.winding_values()
        out.update(self.extra)
        return out


class CertificateBuilder:
    """Streams ``s``-slices of a family into a :class:`HomotopyCertificate`.

    Parameters
    ----------
    name, params
        Recorded verbatim.
    tol : float
        Bound for unitarity defects and stage joins.
    slice_tol : float
        Bound for per-slice validity defects.
    dd : tuple (m, n), optional
        Check every slice as an element of ``Z_{m,n}`` (boundary defects).
    winding : bool
        Record the determinant winding of each ``(s, t)`` sample; slices must
        then have shape ``(T+1, G, D, D)`` with ``G`` the circle grid.
    keep : bool
        Keep copies of the slices on the certificate.
    """

    def __init__(self, name, params=None, tol=1e-9, slice_tol=1e-9, dd=None,
                 winding=False, keep=False, jump_budget=None, endpoint_tol=None):
        self.name = name
        self.params = dict(params or {})
        self.tol = tol
        self.slice_tol = slice_tol
        self.dd = dd
        self.winding = winding
        self.keep = keep
        self.jump_budget = jump_budget
        self.endpoint_tol = tol if endpoint_tol is None else endpoint_tol
        self.stages = []
        self._first = None
        self._prev = None
        self._fresh_stage = False
        self._windings = []
        self._winding_error = None
        self._slices = [] if keep else None

    def stage(self, name):
        self.stages.append(StageRecord(name))
        self._fresh_stage = True
        return self

    def add(self, samples, validity_defect=None):
        """Record one ``s``-slice (first axis ``t``)."""
        samples = np.asarray(samples)
        if not self.stages:
            self.stage("main")
        rec = self.stages[-1]
        rec.n_slices += 1
        rec.max_unitarity_defect = max(rec.max_unitarity_defect, core.max_unitarity_defect(samples))
        defect = 0.0
        if self.dd is not None:
            defect = max(boundary_defects(samples, *self.dd))
        if validity_defect is not None:
            defect = max(defect, float(validity_defect))
        rec.max_boundary_defect = max(rec.max_boundary_defect, defect)
        if defect > self.slice_tol:
            rec.slices_valid = False
        if samples.shape[0] > 1:
            rec.max_step_jump_t = max(rec.max_step_jump_t, core.max_opnorm(np.diff(samples, axis=0)))
        if self._prev is not None:
            gap = core.max_opnorm(samples - self._prev)
            if self._fresh_stage and len(self.stages) > 1 and rec.n_slices == 1:
                rec.join_defect = max(rec.join_defect, gap)
            else:
                rec.max_step_jump_s = max(rec.max_step_jump_s, gap)
        self._fresh_stage = False
        if self.winding and self._winding_error is None:
            try:
                self._windings.append(det_windings(samples))
            except NyquistViolation as exc:
                self._winding_error = str(exc)
        if self._first is None:
            self._first = samples.copy()
        if self._slices is not None:
            self._slices.append(samples.copy())
        self._prev = samples
        return self

    def finish(self, start=None, end=None, extra=None):
        """Close the certificate; ``start``/``end`` are the expected end slices."""
        d0 = 0.0 if start is None else core.max_opnorm(self._first - np.asarray(start))
        d1 = 0.0 if end is None else core.max_opnorm(self._prev - np.asarray(end))
        windings = np.array(self._windings) if self.winding and self._windings else None
        if self.stages:
            self.stages[0].endpoints_ok = d0 <= self.endpoint_tol
            self.stages[-1].endpoints_ok = self.stages[-1].endpoints_ok and d1 <= self.endpoint_tol
        return HomotopyCertificate(
            name=self.name,
            params=self.params,
            stages=self.stages,
            tol=self.tol,
            slice_tol=self.slice_tol,
            start_defect=float(d0),
            end_defect=float(d1),
            endpoint_tol=self.endpoint_tol,
            windings=windings,
            winding_error=self._winding_error,
            jump_budget=self.jump_budget,
            slices=self._slices,
            extra=dict(extra or {}),
        )
