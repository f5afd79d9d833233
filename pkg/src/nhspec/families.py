"""Continuous dependence on the mollification scale.

The members of an epsilon family start from the same data cut off at
``|k| <= 1/eps`` and run with the same cutoff in the equations. They are
advanced in lockstep so that pairwise ``H^s`` differences can be taken at
every diagnostic time without storing trajectories.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import EvolutionConfig, StateBundle, _rk4, band_mask, check_finite, rhs_stacked


@dataclass
class EpsTable:
    eps: list[float]
    s: list[float]
    times: list[float]
    sup_diff: dict[float, list[float]]  # s -> sup_t |V^{eps_i} - V^{eps_{i+1}}|_{H^s}, i = 0..m-2

    def decreasing(self, s: float, strict: bool = True) -> bool:
        col = self.sup_diff[s]
        pairs = zip(col, col[1:])
        return all(b < a for a, b in pairs) if strict else all(b <= a for a, b in pairs)

    def rows(self) -> list[dict]:
        out = []
        for i in range(len(self.eps) - 1):
            row = {"eps": self.eps[i], "eps_next": self.eps[i + 1]}
            for s in self.s:
                row[f"sup_diff_H{s:g}"] = self.sup_diff[s][i]
            out.append(row)
        return out


def _hs_distance(grid, A: np.ndarray, B: np.ndarray, s: float) -> float:
    w = (1.0 + grid.kmag**2) ** s
    return float(np.sqrt(grid.volume * np.sum(w * np.abs(A - B) ** 2)))


def eps_family(state: StateBundle, config: EvolutionConfig, eps_list, s_list=(2.0,),
               every: int | None = None) -> EpsTable:
    """Run one member per ``eps`` from ``state`` and tabulate successive differences.

    ``eps_list`` must hold at least three strictly decreasing values.
    """
    eps_list = [float(e) for e in eps_list]
    if len(eps_list) < 3:
        raise ValueError("an epsilon family needs at least three members")
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps values must be strictly decreasing")
    g = state.grid
    every = config.diagnostics_every if every is None else every
    masks = [band_mask(g, e, config.dealias) for e in eps_list]
    W0 = state.stacked()
    members = [np.where(m, W0, 0.0) for m in masks]
    fns = [(lambda w, m=m: rhs_stacked(g, w, state.A, m)) for m in masks]
    s_list = [float(s) for s in s_list]
    sup = {s: [0.0] * (len(eps_list) - 1) for s in s_list}
    times = []

    def record(t):
        times.append(t)
        for s in s_list:
            for i in range(len(members) - 1):
                sup[s][i] = max(sup[s][i], _hs_distance(g, members[i], members[i + 1], s))

    record(state.t)
    for n in range(1, config.nsteps + 1):
        members = [_rk4(f, W, config.dt)[0] for f, W in zip(fns, members)]
        t = state.t + n * config.dt
        if n % every == 0 or n == config.nsteps:
            for W in members:
                check_finite(state.with_stacked(W, t))
            record(t)
    return EpsTable(eps_list, s_list, times, sup)
