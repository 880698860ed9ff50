"""AC power flow: bus admittance matrix and a Newton-Raphson solver.

Every bus except the slack carries a fixed complex power injection (loads
and static generators both hold their power factor), so the problem is a
pure PQ power flow.  The solver works in polar coordinates:

    S_i = V_i * conj( sum_j Y_ij V_j )

with the mismatch function

    f(theta, Vm) = [ Re(S_calc - S_spec)_pq ; Im(S_calc - S_spec)_pq ]

driven to zero by Newton steps ``J dx = f``, where the Jacobian blocks are
the standard partial derivatives of the complex power flow equations with
respect to voltage angle and magnitude:

    dS/dVa = j * diag(V) * conj( diag(I) - Y diag(V) )
    dS/dVm = diag(V) * conj( Y diag(V/|V|) ) + conj(diag(I)) diag(V/|V|)

Buses with no in-service path to the slack form de-energized islands; they
are excluded from the equations and reported with zero voltage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import GridModelError
from .model import GridModel, Line, Transformer

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 20


def _branch_admittances(branch: Line | Transformer) -> tuple[complex, complex, complex, complex]:
    """Per-branch two-port admittance terms (y_ff, y_ft, y_tf, y_tt).

    Lines use the symmetric Pi model with half the charging susceptance at
    each end.  Transformers place the off-nominal ratio on the LV side, so
    with ``rho = ratio`` the no-load LV voltage is ``rho * V_hv``:

        y_ff = ys * rho^2,  y_ft = y_tf = -ys * rho,  y_tt = ys
    """
    ys = 1.0 / complex(branch.r_pu, branch.x_pu)
    if isinstance(branch, Line):
        shunt = 0.5j * branch.b_pu
        return ys + shunt, -ys, -ys, ys + shunt
    rho = branch.ratio
    return ys * rho * rho, -ys * rho, -ys * rho, ys


def build_admittance(model: GridModel) -> tuple[np.ndarray, dict[str, int]]:
    """Dense bus admittance matrix over all buses, plus the id -> row map.

    Out-of-service branches (or branches with an out-of-service endpoint)
    contribute nothing, which is how disconnected islands arise.
    """
    order = sorted(model.buses)
    index = {bus_id: i for i, bus_id in enumerate(order)}
    n = len(order)
    ybus = np.zeros((n, n), dtype=complex)
    for branch in model.branches():
        if not branch.in_service:
            continue
        f_id, t_id = model.branch_buses(branch)
        if not (model.buses[f_id].in_service and model.buses[t_id].in_service):
            continue
        f, t = index[f_id], index[t_id]
        yff, yft, ytf, ytt = _branch_admittances(branch)
        ybus[f, f] += yff
        ybus[f, t] += yft
        ybus[t, f] += ytf
        ybus[t, t] += ytt
    return ybus, index


def energized_buses(model: GridModel) -> set[str]:
    """Buses with an in-service branch path to the slack (slack included)."""
    adjacency: dict[str, list[str]] = {b: [] for b in model.buses}
    for branch in model.branches():
        if not branch.in_service:
            continue
        f, t = model.branch_buses(branch)
        if model.buses[f].in_service and model.buses[t].in_service:
            adjacency[f].append(t)
            adjacency[t].append(f)
    seen = {model.slack_bus}
    stack = [model.slack_bus]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


@dataclass(frozen=True)
class BranchFlow:
    s_from_pu: complex
    s_to_pu: complex
    loading: float  # max(|s_from|, |s_to|) / s_max


@dataclass
class PowerFlowSolution:
    converged: bool
    iterations: int
    v_mag: dict[str, float] = field(default_factory=dict)  # pu, 0.0 when dead
    v_ang: dict[str, float] = field(default_factory=dict)  # rad
    dead_buses: tuple[str, ...] = ()
    branch_flows: dict[str, BranchFlow] = field(default_factory=dict)
    slack_s_pu: complex = 0j

    def max_loading(self) -> float:
        if not self.branch_flows:
            return 0.0
        return max(f.loading for f in self.branch_flows.values())


def specified_injections(model: GridModel, index: dict[str, int]) -> np.ndarray:
    """Complex power set points per bus (generation positive), pu."""
    s_spec = np.zeros(len(index), dtype=complex)
    for inj in model.injections.values():
        if inj.in_service and model.buses[inj.bus].in_service:
            s_spec[index[inj.bus]] += inj.s_pu()
    return s_spec


def solve(
    model: GridModel,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> PowerFlowSolution:
    """Newton-Raphson power flow from a flat start (1.0 pu, 0 rad).

    Returns a solution for every bus id: de-energized buses read 0.0 pu.
    Non-convergence (including a singular Jacobian) is reported through
    ``converged=False`` rather than an exception; structural problems in the
    model raise :class:`GridModelError` instead.
    """
    model.validate()
    ybus, index = build_admittance(model)
    live = energized_buses(model)
    live_idx = np.array(sorted(index[b] for b in live), dtype=int)
    sub = np.ix_(live_idx, live_idx)
    y = ybus[sub]
    s_spec = specified_injections(model, index)[live_idx]

    slack_pos = int(np.searchsorted(live_idx, index[model.slack_bus]))
    n = len(live_idx)
    pq = np.array([i for i in range(n) if i != slack_pos], dtype=int)
    npq = len(pq)

    vm = np.ones(n)
    va = np.zeros(n)
    converged = npq == 0
    iterations = 0

    while not converged and iterations < max_iter:
        iterations += 1
        v = vm * np.exp(1j * va)
        ibus = y @ v
        mis = v * np.conj(ibus) - s_spec
        f = np.concatenate([mis[pq].real, mis[pq].imag])
        if np.max(np.abs(f)) < tol:
            converged = True
            break

        diag_v = np.diag(v)
        diag_i = np.diag(ibus)
        diag_vnorm = np.diag(v / vm)
        ds_dva = 1j * diag_v @ np.conj(diag_i - y @ diag_v)
        ds_dvm = diag_v @ np.conj(y @ diag_vnorm) + np.conj(diag_i) @ diag_vnorm

        j11 = ds_dva[np.ix_(pq, pq)].real
        j12 = ds_dvm[np.ix_(pq, pq)].real
        j21 = ds_dva[np.ix_(pq, pq)].imag
        j22 = ds_dvm[np.ix_(pq, pq)].imag
        jac = np.block([[j11, j12], [j21, j22]])
        try:
            dx = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(dx)):
            break
        va[pq] -= dx[:npq]
        vm[pq] -= dx[npq:]
        if np.any(vm <= 0.0):
            break

    solution = PowerFlowSolution(converged=converged, iterations=iterations)
    pos_of = {int(g): k for k, g in enumerate(live_idx)}
    for bus_id in sorted(index):
        g = index[bus_id]
        if bus_id in live:
            # When unconverged these are the last iterate: present but untrusted.
            solution.v_mag[bus_id] = float(vm[pos_of[g]])
            solution.v_ang[bus_id] = float(va[pos_of[g]])
        else:
            solution.v_mag[bus_id] = 0.0
            solution.v_ang[bus_id] = 0.0
    solution.dead_buses = tuple(sorted(set(index) - live))

    if converged:
        v_full = np.zeros(len(index), dtype=complex)
        for bus_id in live:
            g = index[bus_id]
            solution_v = solution.v_mag[bus_id] * np.exp(1j * solution.v_ang[bus_id])
            v_full[g] = solution_v
        for branch in sorted(model.branches(), key=model.branch_id):
            if not branch.in_service:
                continue
            f_id, t_id = model.branch_buses(branch)
            if f_id not in live or t_id not in live:
                continue
            yff, yft, ytf, ytt = _branch_admittances(branch)
            vf, vt = v_full[index[f_id]], v_full[index[t_id]]
            s_from = vf * np.conj(yff * vf + yft * vt)
            s_to = vt * np.conj(ytf * vf + ytt * vt)
            solution.branch_flows[model.branch_id(branch)] = BranchFlow(
                s_from_pu=complex(s_from),
                s_to_pu=complex(s_to),
                loading=float(max(abs(s_from), abs(s_to)) / branch.s_max_pu),
            )
        g = index[model.slack_bus]
        slack_v = v_full[g]
        slack_current = (ybus @ v_full)[g]
        solution.slack_s_pu = complex(slack_v * np.conj(slack_current))
    return solution
