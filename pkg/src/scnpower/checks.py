"""Self-contained verification routines.

Every check re-derives the expected behaviour through a route that is
independent of the solver under test: scalar rank-one identities instead of
matrix factorizations, exhaustive grids instead of recursions, determinant
ratios instead of quadratic forms.  The CLI selftest runs all of them; the
test suite reuses the grid oracles at acceptance scale.
"""

import numpy as np

from . import backhaul, numerics
from .access import eval_access_sinr, solve_power_control
from .scenario import ChannelRealization

GRID_REL_STEP = 1e-4     # grid step as a fraction of the per-axis solution scale
GRID_BOX_FACTOR = 1.25   # grid extends this far beyond the solution point


# ---------------------------------------------------------------------------
# exhaustive grid oracles (two-link instances)
# ---------------------------------------------------------------------------

def backhaul_grid_total(channels, rate_targets_nats, order, noise_w, wbar_ref,
                        rel_step=GRID_REL_STEP, box_factor=GRID_BOX_FACTOR):
    """Exhaustive 2-D grid minimization of the dual power sum for two links.

    Rates on the grid come from scalar rank-one identities (norm ratios and
    a rank-one update inverse), not from the solver's factorizations.  The
    first-position rate is strictly increasing in its own power with the
    other power fixed, so the smallest feasible grid point of each column is
    an exact column minimum; columns themselves are enumerated exhaustively.
    Returns the minimal feasible grid total.
    """
    h = np.asarray(channels, dtype=complex)
    if h.shape[0] != 2:
        raise ValueError("the grid oracle handles exactly two links")
    targets = np.asarray(rate_targets_nats, dtype=float)
    c0, c1 = order
    h0, h1 = h[c0], h[c1]
    n0 = np.vdot(h0, h0).real
    n1 = np.vdot(h1, h1).real
    cross = abs(np.vdot(h1, h0)) ** 2
    g0 = np.expm1(targets[c0])
    g1 = np.expm1(targets[c1])

    step1 = rel_step * wbar_ref[c1] if wbar_ref[c1] > 0 else rel_step
    step0 = rel_step * wbar_ref[c0] if wbar_ref[c0] > 0 else rel_step
    hi1 = box_factor * max(wbar_ref[c1], step1)

    # grid for the last-position power; its rate log(1 + w1*n1/noise) must
    # meet the target, which does not involve w0 at all
    w1 = np.arange(0.0, hi1 + step1, step1)
    feasible1 = np.log1p(w1 * n1 / noise_w) >= targets[c1]
    if not np.any(feasible1):
        return float("inf")
    w1 = w1[feasible1]

    # rank-one update: h0^H (noise I + w1 h1 h1^H)^{-1} h0
    q = (n0 - w1 * cross / (noise_w + w1 * n1)) / noise_w
    valid = q > 0
    w1, q = w1[valid], q[valid]
    if w1.size == 0:
        return float("inf")

    # smallest grid w0 with log(1 + w0*q) >= target, per column
    w0_needed = g0 / q
    w0_grid = np.ceil(w0_needed / step0) * step0
    # guard against rounding the ceiling down by one step
    short = np.log1p(w0_grid * q) < targets[c0]
    w0_grid[short] += step0
    return float(np.min(w0_grid + w1))


def access_grid_total(gains_sq, sinr_targets, noise_w, v_ref,
                      rel_step=GRID_REL_STEP, box_factor=GRID_BOX_FACTOR):
    """Exhaustive 2-D grid minimization of the power sum for two users.

    gains_sq[j, m] is the squared gain from node j to the (single) user of
    cell m.  Both SINR constraints are evaluated directly on the grid; user
    0's SINR is strictly increasing in its own power and decreasing in the
    other's, which again makes the column minimum exact.
    """
    g = np.asarray(gains_sq, dtype=float)
    t = np.asarray(sinr_targets, dtype=float)
    s00, s11 = g[0, 0], g[1, 1]
    x01 = g[1, 0]  # interference seen by user 0 (from node 1)
    x10 = g[0, 1]  # interference seen by user 1 (from node 0)

    step0 = rel_step * v_ref[0] if v_ref[0] > 0 else rel_step
    step1 = rel_step * v_ref[1] if v_ref[1] > 0 else rel_step
    hi1 = box_factor * max(v_ref[1], step1)

    v1 = np.arange(0.0, hi1 + step1, step1)
    # user 0 needs v0 >= t0 (x01 v1 + noise)/s00; smallest grid point per column
    v0_needed = t[0] * (x01 * v1 + noise_w) / s00
    v0_grid = np.ceil(v0_needed / step0) * step0
    # user 1's constraint bounds v0 from above: s11 v1 / (x10 v0 + noise) >= t1
    v0_cap = (s11 * v1 / t[1] - noise_w) / x10 if x10 > 0 else np.full_like(v1, np.inf)
    feasible = v0_grid <= v0_cap
    if not np.any(feasible):
        return float("inf")
    totals = v0_grid[feasible] + v1[feasible]
    return float(totals.min())


# ---------------------------------------------------------------------------
# individual property checks
# ---------------------------------------------------------------------------

def _random_backhaul_instance(rng, m=None, el=None):
    m = int(rng.integers(1, 7)) if m is None else m
    el = int(rng.integers(2, 9)) if el is None else el
    scale = 10.0 ** rng.uniform(-8, 0)
    noise = 10.0 ** rng.uniform(-14, 0)
    h = scale * (rng.standard_normal((m, el)) + 1j * rng.standard_normal((m, el)))
    targets = rng.uniform(0.1, 3.0, m)
    order = tuple(int(i) for i in rng.permutation(m))
    return h, targets, order, noise


def check_duality_power_conservation(rng, trials=60, tol=1e-9):
    """Sum of transformed precoder powers equals the dual power sum."""
    worst = 0.0
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng)
        wbar = backhaul.solve_dual_powers(h, targets, order, noise)
        prec = backhaul.duality_transform(h, wbar, order, noise)
        gap = abs(np.sum(np.abs(prec) ** 2) - wbar.sum()) / wbar.sum()
        worst = max(worst, gap)
    return worst <= tol, f"worst relative power gap {worst:.3e} (tol {tol:g})"


def check_rate_fidelity(rng, trials=60, tol=1e-9):
    """Downlink rates of the transformed covariances equal the targets."""
    worst = 0.0
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng)
        wbar = backhaul.solve_dual_powers(h, targets, order, noise)
        prec = backhaul.duality_transform(h, wbar, order, noise)
        covs = prec[:, :, None] * prec.conj()[:, None, :]
        rates = backhaul.dpc_rates(h, covs, order, noise, validate=False)
        worst = max(worst, np.max(np.abs(rates - targets) / targets))
    return worst <= tol, f"worst relative rate error {worst:.3e} (tol {tol:g})"


def check_uplink_downlink_rate_match(rng, trials=40, tol=1e-9):
    """Determinant-ratio uplink rates agree with the targets after solving."""
    worst = 0.0
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng)
        wbar = backhaul.solve_dual_powers(h, targets, order, noise)
        rates = backhaul.dual_uplink_rates(h, wbar, order, noise)
        worst = max(worst, np.max(np.abs(rates - targets) / targets))
    return worst <= tol, f"worst relative uplink rate error {worst:.3e} (tol {tol:g})"


def check_closed_form_agreement(rng, trials=40, tol=1e-8):
    """Direct-formula precoders match the transform per vector."""
    worst = 0.0
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng)
        wbar = backhaul.solve_dual_powers(h, targets, order, noise)
        ref = backhaul.duality_transform(h, wbar, order, noise)
        cand = backhaul.closed_form_precoders(h, targets, order, noise, cross_check=False)
        ref_pow = np.sum(np.abs(ref) ** 2, axis=1)
        cand_pow = np.sum(np.abs(cand) ** 2, axis=1)
        worst = max(worst, np.max(np.abs(ref_pow - cand_pow) / ref_pow))
    return worst <= tol, f"worst per-vector power gap {worst:.3e} (tol {tol:g})"


def check_backhaul_optimality_oracle(rng, trials=12, tol=1e-3):
    """Recursion total matches the exhaustive two-link grid minimum."""
    worst = 0.0
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng, m=2, el=2)
        wbar = backhaul.solve_dual_powers(h, targets, order, noise)
        grid = backhaul_grid_total(h, targets, order, noise, wbar)
        total = wbar.sum()
        if grid < total * (1.0 - 1e-9):
            return False, f"grid found a lower total ({grid:.6e} < {total:.6e})"
        worst = max(worst, abs(grid - total) / total)
    return worst <= tol, f"worst relative gap to grid minimum {worst:.3e} (tol {tol:g})"


def _random_access_pair(rng):
    """Random feasible two-cell, one-user-per-cell access instance."""
    noise = 10.0 ** rng.uniform(-14, -2)
    serving = 10.0 ** rng.uniform(-8, -2, 2)
    cross = serving * 10.0 ** rng.uniform(-4, -1, 2)
    gains = np.array([[serving[0], cross[1]], [cross[0], serving[1]]])
    targets = rng.uniform(1.0, 30.0, 2)
    return gains, targets, noise


def check_access_activeness_oracle(rng, trials=12, tol=1e-3):
    """Linear-solve powers match the exhaustive two-user grid minimum."""
    worst = 0.0
    for _ in range(trials):
        gains, targets, noise = _random_access_pair(rng)
        channels = ChannelRealization(
            np.ones((2, 2), dtype=complex),
            (gains[:, :1], gains[:, 1:]),
        )
        sol = solve_power_control(channels, targets, np.full(2, 1e12), noise)
        if not sol.feasible:
            continue
        total = float(sol.powers_w.sum())
        grid = access_grid_total(gains, targets, noise, sol.powers_w)
        if grid < total * (1.0 - 1e-9):
            return False, f"grid found a lower total ({grid:.6e} < {total:.6e})"
        worst = max(worst, abs(grid - total) / total)
    return worst <= tol, f"worst relative gap to grid minimum {worst:.3e} (tol {tol:g})"


def check_rate_target_monotonicity(rng, trials=30, tol=0.0):
    """Raising one rate target strictly raises the total dual power."""
    for _ in range(trials):
        h, targets, order, noise = _random_backhaul_instance(rng)
        base = backhaul.solve_dual_powers(h, targets, order, noise).sum()
        bumped = targets.copy()
        k = int(rng.integers(len(targets)))
        bumped[k] *= 1.05
        after = backhaul.solve_dual_powers(h, bumped, order, noise).sum()
        if not after > base + tol:
            return False, f"total did not increase ({base:.6e} -> {after:.6e})"
    return True, "total dual power strictly increased on every bump"


def check_dpc_dominance(rng, trials=40, tol=1e-12):
    """Sequential-encoding total never exceeds the zero-forcing total."""
    for _ in range(trials):
        m, el = 4, 8
        h = (rng.standard_normal((m, el)) + 1j * rng.standard_normal((m, el))) * 1e-5
        targets = rng.uniform(0.5, 3.5, m)
        noise = 1e-13
        sol_d = backhaul.solve_backhaul(h, targets, noise, 1e12)
        sol_z = backhaul.zfbf_solve(h, targets, noise, 1e12)
        if sol_d.total_power_w > sol_z.total_power_w * (1.0 + tol):
            return False, (
                f"dpc {sol_d.total_power_w:.6e} W exceeded zfbf {sol_z.total_power_w:.6e} W"
            )
    return True, "dpc total <= zfbf total on every instance"


def check_access_round_trip(rng, trials=30, tol=1e-9):
    """Re-evaluated SINRs equal the targets whenever the solve is feasible."""
    worst = 0.0
    used = 0
    for _ in range(trials):
        gains, targets, noise = _random_access_pair(rng)
        channels = ChannelRealization(
            np.ones((2, 2), dtype=complex), (gains[:, :1], gains[:, 1:])
        )
        sol = solve_power_control(channels, targets, np.full(2, 1e12), noise)
        if not sol.feasible:
            continue
        used += 1
        sinr = eval_access_sinr(channels, sol.powers_w, noise)
        worst = max(worst, np.max(np.abs(sinr - targets) / targets))
    return (worst <= tol and used > 0), f"worst relative SINR error {worst:.3e} over {used} feasible instances"


def check_access_scaling(rng, trials=20, tol=1e-12):
    """Scaling noise and budgets by c scales every power by c."""
    worst = 0.0
    for _ in range(trials):
        gains, targets, noise = _random_access_pair(rng)
        channels = ChannelRealization(
            np.ones((2, 2), dtype=complex), (gains[:, :1], gains[:, 1:])
        )
        a = solve_power_control(channels, targets, np.full(2, 1e12), noise)
        b = solve_power_control(channels, targets, np.full(2, 4e12), 4.0 * noise)
        if not (a.feasible and b.feasible):
            continue
        worst = max(worst, np.max(np.abs(b.powers_w - 4.0 * a.powers_w) / (4.0 * a.powers_w)))
    return worst <= tol, f"worst relative scaling error {worst:.3e} (tol {tol:g})"


ALL_CHECKS = (
    ("duality power conservation", check_duality_power_conservation),
    ("rate fidelity", check_rate_fidelity),
    ("uplink-downlink rate match", check_uplink_downlink_rate_match),
    ("closed-form agreement", check_closed_form_agreement),
    ("backhaul optimality oracle", check_backhaul_optimality_oracle),
    ("power-control activeness oracle", check_access_activeness_oracle),
    ("rate-target monotonicity", check_rate_target_monotonicity),
    ("dpc dominance", check_dpc_dominance),
    ("access round-trip", check_access_round_trip),
    ("access scaling linearity", check_access_scaling),
)


def run_all_checks(seed=2024, tol_scale=1.0):
    """Run every check with fresh seeded RNGs; returns (name, ok, detail) rows.

    tol_scale multiplies each check's tolerance; it exists so a harness can
    verify that the selftest actually fails when tolerances are corrupted.
    """
    results = []
    for i, (name, fn) in enumerate(ALL_CHECKS):
        rng = np.random.default_rng(np.random.SeedSequence([seed, i]))
        kwargs = {}
        if tol_scale != 1.0:
            import inspect

            default_tol = inspect.signature(fn).parameters["tol"].default
            kwargs["tol"] = default_tol * tol_scale
        try:
            ok, detail = fn(rng, **kwargs)
        except numerics.NumericsError as exc:
            ok, detail = False, f"numerics failure: {exc}"
        results.append((name, bool(ok), detail))
    return results
