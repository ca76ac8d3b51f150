"""Coupling maximization over circuit elements at fixed mode frequency and E_C.

The search maximizes the fundamental-mode coupling ratio g_0 / w_0 while
holding the fundamental mode frequency, the transmon charging energy, the
ground capacitance ``c_0`` and the coupling capacitance ``c_q`` fixed.  Two of
the equality constraints are eliminated in closed form, which keeps the
derivative-free search two-dimensional:

* the chain eigenvectors do not depend on the junction inductance, so the
  loaded mode frequency scales exactly as 1/sqrt(l_j); the frequency target
  is met by rescaling ``l_j`` after a single reference diagonalization;
* the transmon's total capacitance is ``c_q + c_s - c_q^2 (C_chain^-1)[0,0]``
  with the chain block independent of ``c_s``, so the charging-energy target
  fixes ``c_s`` linearly.

The remaining free variables are ``c_j`` and ``c_e`` (simplex descent) and the
junction count ``n`` (small integer sweep).  The input capacitance ``c_i``
does not enter the closed-system quantization and is carried through
unchanged.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize

from .circuit import CircuitSpec, build_matrices
from .constants import CONSTANTS, FF, GHZ, NH
from .modes import SystemParams, derive_parameters

DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "n": (50, 300),
    "l_j": (0.5, 5.0),      # nH
    "c_j": (5.0, 60.0),     # fF
    "c_i": (1.0, 100.0),    # fF
    "c_e": (1.0, 150.0),    # fF
    "c_s": (10.0, 150.0),   # fF
}


@dataclass(frozen=True)
class OptimizationProblem:
    """Fixed targets, fixed capacitances and search bounds."""

    omega0_target: float                  # rad/s
    e_c_target: float                     # rad/s
    c_0: float                            # fF
    c_q: float                            # fF
    ej_over_ec: float = 50.0
    bounds: Dict[str, Tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_BOUNDS))
    penalty_weight: float = 100.0
    restarts: int = 8
    seed: int = 0
    n_sweep: int = 5                      # integer junction-count candidates

    def __post_init__(self):
        if self.omega0_target <= 0 or self.e_c_target <= 0:
            raise ValueError("targets must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.c_0 < 0 or self.c_q < 0:
            raise ValueError("capacitances must be non-negative")
        for key in DEFAULT_BOUNDS:
            if key not in self.bounds:
                raise ValueError(f"missing bound for {key}")
            lo, hi = self.bounds[key]
            if not lo <= hi:
                raise ValueError(f"empty bound for {key}")


@dataclass
class OptimizationResult:
    """Best point of a coupling search with its audit trail."""

    best_spec: Optional[CircuitSpec]
    best_params: Optional[SystemParams]
    objective: float
    constraint_residuals: Dict[str, float]
    trace: List[dict]
    feasible: bool

    def to_row(self) -> dict:
        s = self.best_spec
        r = self.constraint_residuals
        return {
            "g0_over_w0": self.objective,
            "n": s.n_junctions if s else "",
            "l_j_nH": s.l_j if s else "",
            "c_j_fF": s.c_j if s else "",
            "c_i_fF": s.c_i if s else "",
            "c_e_fF": s.c_e if s else "",
            "c_s_fF": s.c_s if s else "",
            "resid_w0": r.get("omega0", np.nan),
            "resid_ec": r.get("e_c", np.nan),
        }


def _chain_corner_inverse(spec: CircuitSpec) -> float:
    """(C_chain^-1)[0, 0] of the closed-system chain block [1/F]."""
    mats = build_matrices(spec, include_input_cap=False)
    cap_b, _ = mats.array_block()
    # first column of the inverse via a linear solve
    e0 = np.zeros(cap_b.shape[0])
    e0[0] = 1.0
    return float(sla.solve(cap_b, e0, assume_a="pos")[0])


def solve_shunt_capacitance(spec: CircuitSpec, e_c_target: float) -> float:
    """Shunt capacitance meeting the charging-energy target [fF].

    Uses C_qb = c_q + c_s - c_q^2 (C_chain^-1)[0,0] and
    E_C = e^2 / (2 hbar C_qb); the chain block does not involve ``c_s``.
    """
    c_total = CONSTANTS.e ** 2 / (2.0 * CONSTANTS.hbar * e_c_target)
    corner = _chain_corner_inverse(spec)
    c_q = spec.c_q * FF
    return (c_total - c_q + c_q ** 2 * corner) / FF


def solve_junction_inductance(spec: CircuitSpec, omega0_target: float) -> float:
    """Junction inductance meeting the mode-frequency target [nH].

    The chain eigenvectors are independent of ``l_j`` (the inductance matrix
    is proportional to 1/l_j), so the loaded fundamental frequency scales
    exactly as 1/sqrt(l_j).
    """
    ref = derive_parameters(spec, n_report=1)[3]
    return spec.l_j * (ref.mode_freq[0] / omega0_target) ** 2


def _evaluate(problem: OptimizationProblem, n: int, c_j: float, c_e: float,
              c_i: float, fast: bool = False) -> dict:
    """Closed-form constraint elimination plus pipeline evaluation.

    With ``fast`` the circuit is diagonalized once at a reference inductance
    and the objective at the rescaled inductance is obtained from the exact
    scaling laws (eigenvectors independent of ``l_j``; w_0 ~ 1/sqrt(l_j);
    g_0 / w_0 ~ l_j^(1/4)).  The slow path re-derives everything from the
    final CircuitSpec and is used to report optima.
    """
    b = problem.bounds
    penalty = 0.0

    def clamp(val, key):
        nonlocal penalty
        lo, hi = b[key]
        clipped = min(max(val, lo), hi)
        if val != clipped:
            penalty += ((val - clipped) / max(hi - lo, 1e-12)) ** 2
        return clipped

    c_j = clamp(c_j, "c_j")
    c_e = clamp(c_e, "c_e")

    base = CircuitSpec(
        n_junctions=n, l_j=1.0, c_j=c_j, c_0=problem.c_0, c_q=problem.c_q,
        c_s=50.0, c_i=c_i, c_e=c_e,
        e_j_transmon=problem.ej_over_ec * problem.e_c_target / GHZ)

    c_s = clamp(solve_shunt_capacitance(base, problem.e_c_target), "c_s")
    base = CircuitSpec(**{**base.__dict__, "c_s": c_s})

    ref = derive_parameters(base, n_report=1)[3]
    if ref.coupling.size == 0 or ref.mode_freq.size == 0:
        raise ValueError("no retained chain mode; junction count too small")
    l_j = clamp(base.l_j * (ref.mode_freq[0] / problem.omega0_target) ** 2,
                "l_j")
    spec = CircuitSpec(**{**base.__dict__, "l_j": l_j})

    if fast:
        scale = np.sqrt(base.l_j / l_j)      # frequency rescaling factor
        w0 = ref.mode_freq[0] * scale
        objective = (ref.coupling[0] / ref.mode_freq[0]) / np.sqrt(scale)
        resid_w0 = abs(w0 - problem.omega0_target) / problem.omega0_target
        resid_ec = abs(ref.e_c - problem.e_c_target) / problem.e_c_target
        params = None
    else:
        params = derive_parameters(spec, n_report=3)[3]
        objective = (params.coupling[0] / params.mode_freq[0]
                     if params.coupling.size else 0.0)
        resid_w0 = abs(params.mode_freq[0] - problem.omega0_target) \
            / problem.omega0_target
        resid_ec = abs(params.e_c - problem.e_c_target) / problem.e_c_target
    penalty += problem.penalty_weight * (resid_w0 ** 2 + resid_ec ** 2)
    return {
        "spec": spec, "params": params, "objective": float(objective),
        "penalized": float(objective) - penalty,
        "resid_w0": float(resid_w0), "resid_ec": float(resid_ec),
    }


def optimize_coupling(problem: OptimizationProblem) -> OptimizationResult:
    """Maximize g_0 / w_0 with simplex descent over (c_j, c_e) per junction
    count, best of ``problem.restarts`` seeded random starts."""
    rng = np.random.default_rng(problem.seed)
    b = problem.bounds
    n_lo, n_hi = int(b["n"][0]), int(b["n"][1])
    n_values = sorted(set(
        int(round(x)) for x in np.linspace(n_lo, n_hi, problem.n_sweep)))
    c_i = 0.5 * (b["c_i"][0] + b["c_i"][1])

    trace: List[dict] = []
    best: Optional[dict] = None

    if problem.c_q == 0.0:
        # decoupled qubit: objective is identically zero
        ev = _evaluate(problem, n_values[0],
                       0.5 * sum(b["c_j"]), 0.5 * sum(b["c_e"]), c_i)
        trace.append({"n": n_values[0], "objective": ev["objective"],
                      "restart": 0})
        return OptimizationResult(
            best_spec=ev["spec"], best_params=ev["params"],
            objective=ev["objective"],
            constraint_residuals={"omega0": ev["resid_w0"],
                                  "e_c": ev["resid_ec"]},
            trace=trace, feasible=ev["resid_w0"] < 1e-3
            and ev["resid_ec"] < 1e-3)

    for restart in range(problem.restarts):
        x0 = np.array([rng.uniform(*b["c_j"]), rng.uniform(*b["c_e"])])
        for n in n_values:
            def negobj(x, n=n):
                return -_evaluate(problem, n, x[0], x[1], c_i,
                                  fast=True)["penalized"]
            res = minimize(negobj, x0, method="Nelder-Mead",
                           options={"maxiter": 80, "xatol": 1e-3,
                                    "fatol": 1e-9})
            ev = _evaluate(problem, n, res.x[0], res.x[1], c_i)
            trace.append({"restart": restart, "n": n,
                          "c_j": float(res.x[0]), "c_e": float(res.x[1]),
                          "objective": ev["objective"],
                          "penalized": ev["penalized"],
                          "evals": int(res.nfev)})
            if best is None or ev["penalized"] > best["penalized"]:
                best = ev

    assert best is not None
    feasible = best["resid_w0"] < 1e-3 and best["resid_ec"] < 1e-3
    return OptimizationResult(
        best_spec=best["spec"], best_params=best["params"],
        objective=best["objective"],
        constraint_residuals={"omega0": best["resid_w0"],
                              "e_c": best["resid_ec"]},
        trace=trace, feasible=feasible)


@dataclass
class SweepResultGrid:
    """Per-cell optimization results over (c_q, c_0) with a smoothed copy."""

    cq_values: np.ndarray
    c0_values: np.ndarray
    results: List[List[OptimizationResult]]   # [i_c0][j_cq]
    smoothed: np.ndarray                      # running max along c_q

    def objective_grid(self) -> np.ndarray:
        return np.array([[r.objective for r in row] for row in self.results])

    def to_csv(self, path: str) -> None:
        cols = ["c_q_fF", "c_0_fF", "g0_over_w0", "g0_over_w0_smoothed",
                "n", "l_j_nH", "c_j_fF", "c_i_fF", "c_e_fF", "c_s_fF",
                "resid_w0", "resid_ec"]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(cols)
            for i, c0 in enumerate(self.c0_values):
                for j, cq in enumerate(self.cq_values):
                    row = self.results[i][j].to_row()
                    writer.writerow([
                        f"{cq:.6g}", f"{c0:.6g}",
                        f"{row['g0_over_w0']:.8g}",
                        f"{self.smoothed[i, j]:.8g}",
                        row["n"], row["l_j_nH"], row["c_j_fF"],
                        row["c_i_fF"], row["c_e_fF"], row["c_s_fF"],
                        f"{row['resid_w0']:.3g}", f"{row['resid_ec']:.3g}"])


def sweep_cq(problem: OptimizationProblem, cq_values: Sequence[float],
             c0_values: Sequence[float]) -> SweepResultGrid:
    """Independent coupling optimizations on a (c_q, c_0) grid.

    Cells that fail to satisfy the constraints are kept in the grid with
    their best residuals; the sweep continues.  The smoothed copy is the
    running maximum along increasing ``c_q`` (the trend diagnostic).
    """
    cq = np.asarray(list(cq_values), dtype=float)
    c0 = np.asarray(list(c0_values), dtype=float)
    if cq.size == 0 or c0.size == 0:
        raise ValueError("sweep grids must be nonempty")
    results: List[List[OptimizationResult]] = []
    for i, c0_val in enumerate(c0):
        row: List[OptimizationResult] = []
        for j, cq_val in enumerate(cq):
            sub = OptimizationProblem(
                omega0_target=problem.omega0_target,
                e_c_target=problem.e_c_target,
                c_0=float(c0_val), c_q=float(cq_val),
                ej_over_ec=problem.ej_over_ec,
                bounds=dict(problem.bounds),
                penalty_weight=problem.penalty_weight,
                restarts=problem.restarts,
                seed=problem.seed + 1000 * i + j,
                n_sweep=problem.n_sweep)
            try:
                row.append(optimize_coupling(sub))
            except (ValueError, np.linalg.LinAlgError) as exc:
                row.append(OptimizationResult(
                    best_spec=None, best_params=None, objective=np.nan,
                    constraint_residuals={"error": np.nan},
                    trace=[{"error": str(exc)}], feasible=False))
        results.append(row)
    grid = np.array([[r.objective for r in row] for row in results])
    smoothed = np.fmax.accumulate(grid, axis=1)
    return SweepResultGrid(cq_values=cq, c0_values=c0, results=results,
                           smoothed=smoothed)
