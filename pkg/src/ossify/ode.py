"""Pointwise logistic updates for osteoblast and bone volume fractions.

The growth factor is frozen at the old time level while the logistic barrier
is treated implicitly, which gives a closed-form update that respects the
bounds 0 <= y <= cap exactly and never needs a nonlinear solve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import materials
from .diffusion import POSITIVITY_EPS, MoleculeState
from .materials import ParameterSet


@dataclass
class TissueState:
    """Nodal osteoblast density c and bone volume fraction b."""

    c: np.ndarray
    b: np.ndarray

    @classmethod
    def initial(cls, n_nodes: int) -> "TissueState":
        return cls(c=np.zeros(n_nodes), b=np.zeros(n_nodes))


def logistic_step(y_n, rate, cap, dt: float):
    """One implicit-barrier step of y' = rate * (1 - y/cap).

    Closed form of the implicit Euler equation; monotone in time and bounded
    by the cap: y_n <= y_{n+1} <= cap.  Accepts scalars or arrays.
    """
    y_n = np.asarray(y_n, dtype=float)
    rate = np.asarray(rate, dtype=float)
    cap = np.asarray(cap, dtype=float)
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if np.any(rate < 0):
        raise ValueError("negative growth rate")
    if np.any(cap <= 0):
        raise ValueError("cap must be positive")
    if np.any(y_n < 0) or np.any(y_n > cap):
        raise ValueError("state outside [0, cap]")
    out = (y_n + dt * rate) / (1.0 + dt * rate / cap)
    # the exact update satisfies the barriers; clip away the last-ulp rounding
    out = np.clip(out, y_n, cap)
    return float(out) if out.ndim == 0 else out


def _clamped_molecules(molecules: MoleculeState) -> np.ndarray:
    """Molecule values floored at zero; genuinely negative values are an error."""
    a = molecules.a
    if np.any(a < -POSITIVITY_EPS):
        bad = np.argwhere(a < -POSITIVITY_EPS)
        i, node = bad[0]
        raise ValueError(
            f"molecule {i + 1} is negative beyond tolerance at node {node}: "
            f"{a[i, node]:.3e}")
    return np.maximum(a, 0.0)


def cell_step(state: TissueState, molecules: MoleculeState, rho_field: np.ndarray,
              params: ParameterSet, dt: float,
              active: np.ndarray | None = None) -> TissueState:
    """Advance the osteoblast density; b is carried over unchanged.

    The rate H(a, c, b) is evaluated at the incoming state.  Nodes outside
    `active` (e.g. inside the fixateur) are frozen.
    """
    a = _clamped_molecules(molecules)
    cap = 1.0 - np.asarray(rho_field, dtype=float)
    rate = materials.H_eval(a, state.c, state.b, params)
    rate = np.broadcast_to(rate, state.c.shape).copy()
    if active is not None:
        rate[~active] = 0.0
    try:
        c_next = logistic_step(state.c, rate, cap, dt)
    except ValueError as err:
        raise ValueError(f"cell update failed: {err}") from err
    return TissueState(c=c_next, b=state.b.copy())


def bone_step(state: TissueState, molecules: MoleculeState, rho_field: np.ndarray,
              params: ParameterSet, dt: float,
              active: np.ndarray | None = None) -> TissueState:
    """Advance the bone density using the incoming (old-time) osteoblast field."""
    a = _clamped_molecules(molecules)
    cap = 1.0 - np.asarray(rho_field, dtype=float)
    rate = materials.K_eval(a, state.c, state.b, params)
    rate = np.broadcast_to(rate, state.b.shape).copy()
    if active is not None:
        rate[~active] = 0.0
    try:
        b_next = logistic_step(state.b, rate, cap, dt)
    except ValueError as err:
        raise ValueError(f"bone update failed: {err}") from err
    return TissueState(c=state.c.copy(), b=b_next)
