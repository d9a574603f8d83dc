"""End-to-end solver for one network realization.

The minimum-power operating point decouples: each node's backhaul link must
carry exactly the sum of its users' required rates, which fixes the per-node
backhaul targets independently of the access powers, and the access links
are then solved on their own.  The system is in outage when either part is
infeasible, and an outage realization transmits nothing.
"""

from dataclasses import dataclass

import numpy as np

from .access import AccessSolution, solve_power_control
from .backhaul import solve_backhaul, zfbf_solve

SCHEMES = ("dpc", "zfbf")


@dataclass(frozen=True)
class RateRequirements:
    """User rate requirements and the per-node aggregates derived from them."""

    per_ue_nats: np.ndarray
    per_cell_nats: np.ndarray

    @classmethod
    def from_scenario(cls, scenario):
        return cls(scenario.per_ue_rate_nats(), scenario.per_cell_rate_nats())

    @property
    def total_nats(self):
        return float(self.per_cell_nats.sum())

    @property
    def ratios(self):
        """Per-node share of the total required rate (sums to one)."""
        total = self.total_nats
        if total <= 0:
            raise ValueError("rate ratios are undefined when the total rate is zero")
        return self.per_cell_nats / total


def proportional_ratios(per_ue_rates_by_cell):
    """Per-node rate shares from per-user requirements, one sequence per cell.

    Every user rate must be positive and every cell nonempty; the result is
    each cell's rate sum divided by the network total.
    """
    sums = []
    for i, cell_rates in enumerate(per_ue_rates_by_cell):
        rates = np.asarray(list(cell_rates), dtype=float)
        if rates.size == 0:
            raise ValueError(f"cell {i} has no users")
        if np.any(rates <= 0):
            raise ValueError(f"cell {i} has a nonpositive user rate")
        sums.append(rates.sum())
    sums = np.array(sums)
    return sums / sums.sum()


@dataclass(frozen=True)
class TrialOutcome:
    """Joint result for one realization under one backhaul scheme."""

    backhaul: object
    access: AccessSolution
    system_outage: bool
    total_power_w: float
    scheme: str


def solve_instance(scenario, channels, scheme="dpc", order=None, order_strategy="auto"):
    """Solve one realization end to end and classify the outcome.

    scheme 'dpc' uses the sequential-encoding optimum, 'zfbf' the
    zero-forcing baseline; both face identical access links. The reported
    total power is zero for outage realizations (nothing is transmitted).
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}, expected one of {SCHEMES}")
    if channels.num_cells != scenario.num_cells or channels.ue_counts != scenario.ue_counts:
        raise ValueError("channel realization does not match the scenario layout")
    if channels.backhaul.shape[1] != scenario.num_antennas:
        raise ValueError("channel realization does not match the antenna count")

    reqs = RateRequirements.from_scenario(scenario)
    noise = scenario.noise_power_w

    gamma = np.expm1(reqs.per_ue_nats)
    access = solve_power_control(channels, gamma, scenario.scbs_budgets_w(), noise)

    if scheme == "dpc":
        backhaul = solve_backhaul(
            channels.backhaul,
            reqs.per_cell_nats,
            noise,
            scenario.gateway_power_budget_w,
            order=order,
            order_strategy=order_strategy,
            frame_share=scenario.backhaul_frame_share,
        )
    else:
        backhaul = zfbf_solve(
            channels.backhaul,
            reqs.per_cell_nats,
            noise,
            scenario.gateway_power_budget_w,
            frame_share=scenario.backhaul_frame_share,
        )

    outage = not (backhaul.feasible and access.feasible)
    if outage:
        total = 0.0
    else:
        total = backhaul.total_power_w + float(access.powers_w.sum())
    return TrialOutcome(
        backhaul=backhaul,
        access=access,
        system_outage=outage,
        total_power_w=total,
        scheme=scheme,
    )
