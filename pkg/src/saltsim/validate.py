"""Model validation: mass checks, gradient checks, and the decoupling verdict.

The decoupling verdict probes the three clauses of the limb-decoupling
structure numerically:

  1. the mass matrix is block diagonal over the declared body/limb blocks;
  2. each constraint, its restitution coefficient, and each limb's effort rows
     depend only on their own limb block (plus the body, for the effort);
  3. the body effort rows are additive over the limbs (vanishing mixed
     differences between any two limbs).

Dependency probes use wide central differences (step 1e-3) so that a genuine
zero dependency measures as an exact zero rather than round-off noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateMass
from .model import ModelSpec, State, mass_cholesky

GRAD_TOL = 1e-6
_PROBE_STEP = 1e-3
_ZERO_TOL = 1e-12
_EFFORT_TOL = 1e-9


@dataclass(frozen=True)
class ClauseVerdict:
    passed: bool
    worst: float
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    model: str
    mass_symmetric: bool
    mass_positive_definite: bool
    max_symmetry_defect: float
    gradients_ok: bool
    max_gradient_error: float
    restitution_nonnegative: bool
    decoupling_declared: bool
    clause_block_mass: Optional[ClauseVerdict] = None
    clause_locality: Optional[ClauseVerdict] = None
    clause_additivity: Optional[ClauseVerdict] = None
    notes: tuple[str, ...] = field(default_factory=tuple)

    @property
    def decoupled(self) -> Optional[bool]:
        if not self.decoupling_declared:
            return None
        return (
            self.clause_block_mass.passed
            and self.clause_locality.passed
            and self.clause_additivity.passed
        )

    @property
    def passed(self) -> bool:
        ok = (
            self.mass_symmetric
            and self.mass_positive_definite
            and self.gradients_ok
            and self.restitution_nonnegative
        )
        if self.decoupling_declared:
            ok = ok and bool(self.decoupled)
        return ok


def _probe_states(model: ModelSpec, around: Optional[State], count: int) -> list[tuple]:
    rng = np.random.default_rng(12345)
    q0 = around.q if around is not None else np.zeros(model.d)
    v0 = around.v if around is not None else np.zeros(model.d)
    probes = [(q0.copy(), v0.copy())]
    for _ in range(count - 1):
        probes.append((
            q0 + 0.3 * rng.standard_normal(model.d),
            v0 + 0.3 * rng.standard_normal(model.d),
        ))
    return probes


def _central(fn, x, i, step=_PROBE_STEP):
    e = np.zeros_like(x)
    e[i] = step
    return (np.asarray(fn(x + e), float) - np.asarray(fn(x - e), float)) / (2.0 * step)


def validate_model(model: ModelSpec, around: Optional[State] = None,
                   n_probes: int = 6, h_fd: float = 1e-6) -> ValidationReport:
    """Run every model-level check at a deterministic set of probe states."""
    probes = _probe_states(model, around, n_probes)
    notes: list[str] = []

    sym_defect = 0.0
    sym_ok = True
    pd_ok = True
    for q, _ in probes:
        M = model.mass_at(q)
        scale = 1.0 + float(np.max(np.abs(M)))
        sym_defect = max(sym_defect, float(np.max(np.abs(M - M.T))) / scale)
        try:
            mass_cholesky(model, q)
        except DegenerateMass as exc:
            pd_ok = False
            notes.append(str(exc))
    sym_ok = sym_defect <= 1e-12

    grad_err = 0.0
    for q, _ in probes:
        for j in range(model.n):
            supplied = model.constraint_grad(j, q, h_fd)
            fd = np.array([
                float(_central(lambda x: model.constraint_value(j, x), q, i, 10 * h_fd))
                for i in range(model.d)
            ])
            mixed = np.max(np.abs(supplied - fd) / (1.0 + np.abs(fd)))
            grad_err = max(grad_err, float(mixed))
    grads_ok = grad_err <= GRAD_TOL

    gamma_ok = all(
        model.restitution_at(j, q, v) >= 0.0
        for q, v in probes
        for j in range(model.n)
    )

    if model.decoupling is None:
        return ValidationReport(
            model.name or "unnamed", sym_ok, pd_ok, sym_defect, grads_ok, grad_err,
            gamma_ok, decoupling_declared=False, notes=tuple(notes),
        )

    dec = model.decoupling
    blocks = dec.blocks()
    body = set(dec.body)

    # clause 1: block-diagonal mass over the declared partition
    worst_off = 0.0
    for q, _ in probes:
        M = model.mass_at(q)
        mask = np.zeros((model.d, model.d), dtype=bool)
        for blk in blocks:
            mask[np.ix_(list(blk), list(blk))] = True
        off = np.abs(M[~mask])
        if off.size:
            worst_off = max(worst_off, float(np.max(off)) / (1.0 + float(np.max(np.abs(M)))))
    clause1 = ClauseVerdict(worst_off <= _ZERO_TOL, worst_off,
                            "max off-block mass entry (scaled)")

    # clause 2: per-limb locality of constraints, restitution, and limb effort rows
    worst_local = 0.0
    for q, v in probes:
        for j, limb in enumerate(dec.limbs):
            limb = set(limb)
            outside = [i for i in range(model.d) if i not in limb]
            for i in outside:
                da = _central(lambda x: model.constraint_value(j, x), q, i)
                worst_local = max(worst_local, abs(float(da)))
            for i in outside:
                dg_q = _central(lambda x: model.restitution_at(j, x, v), q, i)
                dg_v = _central(lambda w: model.restitution_at(j, q, w), v, i)
                worst_local = max(worst_local, abs(float(dg_q)), abs(float(dg_v)))
    clause2_constraints = worst_local

    worst_effort = 0.0
    for q, v in probes:
        for j, limb in enumerate(dec.limbs):
            allowed = body | set(limb)
            rows = list(limb)
            outside = [i for i in range(model.d) if i not in allowed]
            for i in outside:
                df_q = _central(lambda x: model.effort_at(x, v), q, i)[rows]
                df_v = _central(lambda w: model.effort_at(q, w), v, i)[rows]
                worst_effort = max(worst_effort, float(np.max(np.abs(df_q))),
                                   float(np.max(np.abs(df_v))))
    worst2 = max(clause2_constraints, worst_effort)
    clause2 = ClauseVerdict(
        clause2_constraints <= _ZERO_TOL and worst_effort <= _EFFORT_TOL,
        worst2,
        "max off-block sensitivity of constraints / restitution / limb effort",
    )

    # clause 3: body effort additive over limbs (mixed differences vanish)
    worst_mix = 0.0
    rows = list(dec.body)
    if rows:
        for q, v in probes:
            for a in range(model.n):
                for b in range(a + 1, model.n):
                    ia, ib = dec.limbs[a][0], dec.limbs[b][0]
                    for vec, other in ((q, v), (v, q)):
                        qa = vec.copy(); qa[ia] += _PROBE_STEP
                        qb = vec.copy(); qb[ib] += _PROBE_STEP
                        qab = qa.copy(); qab[ib] += _PROBE_STEP
                        if vec is q:
                            mixed = (model.effort_at(qab, v) - model.effort_at(qa, v)
                                     - model.effort_at(qb, v) + model.effort_at(q, v))
                        else:
                            mixed = (model.effort_at(q, qab) - model.effort_at(q, qa)
                                     - model.effort_at(q, qb) + model.effort_at(q, v))
                        worst_mix = max(worst_mix, float(np.max(np.abs(mixed[rows]))))
    clause3 = ClauseVerdict(worst_mix <= _EFFORT_TOL, worst_mix,
                            "max mixed limb-pair difference of the body effort")

    return ValidationReport(
        model.name or "unnamed", sym_ok, pd_ok, sym_defect, grads_ok, grad_err,
        gamma_ok, decoupling_declared=True,
        clause_block_mass=clause1, clause_locality=clause2, clause_additivity=clause3,
        notes=tuple(notes),
    )


def report_dict(report: ValidationReport) -> dict:
    """JSON-ready representation of a validation report."""
    out = {
        "model": report.model,
        "mass_symmetric": report.mass_symmetric,
        "mass_positive_definite": report.mass_positive_definite,
        "max_symmetry_defect": report.max_symmetry_defect,
        "gradients_ok": report.gradients_ok,
        "max_gradient_error": report.max_gradient_error,
        "restitution_nonnegative": report.restitution_nonnegative,
        "decoupling_declared": report.decoupling_declared,
        "passed": report.passed,
    }
    if report.decoupling_declared:
        out["decoupled"] = report.decoupled
        out["clauses"] = {
            name: {"passed": cv.passed, "worst": cv.worst, "detail": cv.detail}
            for name, cv in (
                ("1_block_diagonal_mass", report.clause_block_mass),
                ("2_limb_locality", report.clause_locality),
                ("3_body_effort_additivity", report.clause_additivity),
            )
        }
    if report.notes:
        out["notes"] = list(report.notes)
    return out
