"""Exact-target power control for the mutually interfering access links.

Requiring every user's SINR to equal its target turns the coupled SINR
inequalities into a square linear system in the stacked user powers (the
targets are active at the minimum-power point).  A realization is infeasible
when that system is near-singular, yields a negative power, or violates a
per-cell power budget.
"""

from dataclasses import dataclass

import numpy as np

# reciprocal condition number below which the system counts as singular
SINGULARITY_RCOND = 1e-12


@dataclass(frozen=True)
class AccessSolution:
    """Power-control outcome; power/SINR fields are None when infeasible."""

    powers_w: np.ndarray | None
    sinr: np.ndarray | None
    per_cell_power_w: np.ndarray | None
    feasible: bool


def ue_offsets(channels):
    """Start index of each cell's users in the stacked power vector."""
    counts = channels.ue_counts
    return np.concatenate(([0], np.cumsum(counts)))


def build_sinr_system(channels, sinr_targets, noise_w):
    """Linear system A v = b expressing SINR-equals-target for every user.

    Row u (user n of cell m): the serving gain divided by the target on the
    diagonal, minus the same-cell serving gain for the cell's other users,
    minus the cross gain from node j for every user of every other cell j.
    The right-hand side is the noise power.
    """
    gains = channels.access_gain_sq
    m = len(gains)
    offsets = ue_offsets(channels)
    n_total = int(offsets[-1])
    targets = np.asarray(sinr_targets, dtype=float)
    if targets.shape != (n_total,):
        raise ValueError(f"expected {n_total} SINR targets, got shape {targets.shape}")
    if np.any(targets <= 0):
        raise ValueError("SINR targets must be positive")
    noise_w = float(noise_w)
    if noise_w <= 0:
        raise ValueError("noise power must be positive")

    a = np.zeros((n_total, n_total))
    for cell in range(m):
        block = gains[cell]  # (M, N_cell)
        serving = block[cell]
        if np.any(serving <= 0):
            raise ValueError(f"cell {cell} has a user with zero serving gain")
        for n in range(block.shape[1]):
            row = offsets[cell] + n
            for src in range(m):
                a[row, offsets[src]:offsets[src + 1]] = -block[src, n]
            a[row, row] = serving[n] / targets[row]
    return a, np.full(n_total, noise_w)


def _per_cell_sums(channels, powers):
    offsets = ue_offsets(channels)
    return np.array([
        powers[offsets[m]:offsets[m + 1]].sum() for m in range(len(channels.access_gain_sq))
    ])


def eval_access_sinr(channels, powers_w, noise_w):
    """SINR of every user under the given stacked powers (direct evaluation)."""
    gains = channels.access_gain_sq
    offsets = ue_offsets(channels)
    powers = np.asarray(powers_w, dtype=float)
    if powers.shape != (int(offsets[-1]),):
        raise ValueError(f"expected {int(offsets[-1])} powers, got shape {powers.shape}")
    if np.any(powers < 0):
        raise ValueError("powers must be nonnegative")
    cell_sums = _per_cell_sums(channels, powers)

    out = np.zeros_like(powers)
    for cell in range(len(gains)):
        block = gains[cell]
        own = powers[offsets[cell]:offsets[cell + 1]]
        total_rx = block.T @ cell_sums            # every cell's full power at each user
        own_full = block[cell] * cell_sums[cell]
        signal = block[cell] * own
        intra = own_full - signal
        inter = total_rx - own_full
        out[offsets[cell]:offsets[cell + 1]] = signal / (intra + inter + noise_w)
    return out


def eval_access_rates(channels, powers_w, noise_w):
    """Achievable rate log(1 + SINR) of every user, in nats."""
    return np.log1p(eval_access_sinr(channels, powers_w, noise_w))


def solve_power_control(channels, sinr_targets, budgets_w, noise_w):
    """Minimum powers meeting every SINR target, or an infeasible verdict.

    Users with a zero target are assigned zero power and dropped from the
    linear system (they neither need nor cause interference). Infeasibility
    (singular system, negative component, budget violation) is a returned
    state, never an exception.
    """
    targets = np.asarray(sinr_targets, dtype=float)
    offsets = ue_offsets(channels)
    n_total = int(offsets[-1])
    if targets.shape != (n_total,):
        raise ValueError(f"expected {n_total} SINR targets, got shape {targets.shape}")
    if np.any(targets < 0):
        raise ValueError("SINR targets must be nonnegative")
    budgets = np.asarray(budgets_w, dtype=float)
    if budgets.shape != (len(channels.access_gain_sq),):
        raise ValueError("budgets must hold one entry per cell")

    active = targets > 0
    powers = np.zeros(n_total)
    if np.any(active):
        reduced, red_targets = _reduced_system_inputs(channels, targets, active)
        a, b = build_sinr_system(reduced, red_targets, noise_w)
        with np.errstate(divide="ignore", invalid="ignore"):
            svals = np.linalg.svd(a, compute_uv=False)
        if svals[0] == 0.0 or not np.isfinite(svals[0]) or svals[-1] / svals[0] < SINGULARITY_RCOND:
            return AccessSolution(None, None, None, False)
        try:
            solution = np.linalg.solve(a, b)
        except np.linalg.LinAlgError:
            return AccessSolution(None, None, None, False)
        if not np.all(np.isfinite(solution)) or np.any(solution < 0):
            return AccessSolution(None, None, None, False)
        powers[active] = solution

    per_cell = _per_cell_sums(channels, powers)
    if np.any(per_cell > budgets):
        return AccessSolution(None, None, None, False)
    sinr = eval_access_sinr(channels, powers, noise_w)
    return AccessSolution(powers, sinr, per_cell, True)


def _reduced_system_inputs(channels, targets, active):
    """Restrict channels/targets to users with positive targets."""
    if np.all(active):
        return channels, targets
    from .scenario import ChannelRealization

    offsets = ue_offsets(channels)
    gains = []
    red_targets = []
    for cell, block in enumerate(channels.access_gain_sq):
        mask = active[offsets[cell]:offsets[cell + 1]]
        gains.append(block[:, mask])
        red_targets.append(targets[offsets[cell]:offsets[cell + 1]][mask])
    reduced = ChannelRealization(channels.backhaul, tuple(gains))
    return reduced, np.concatenate(red_targets) if red_targets else np.zeros(0)
