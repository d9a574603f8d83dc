"""Minimum-power precoding for the multi-antenna broadcast backhaul.

The gateway encodes the node streams sequentially, so a node only sees
interference from streams that are encoded after its own.  For a fixed
encoding order the minimum total power follows from the equivalent dual
uplink: a backward sweep fixes each dual power so its link meets the rate
target with equality, and a forward sweep maps the dual powers to downlink
precoding vectors that achieve the same rates with the same total power.
A zero-forcing baseline is included for comparison.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from . import numerics

# relative tolerance for the closed-form vs transform cross-check
CLOSED_FORM_MATCH_RTOL = 1e-8
# largest node count for which exhaustive order enumeration is allowed
MAX_EXHAUSTIVE_NODES = 8

ORDER_STRATEGIES = ("identity", "norm_ascending", "exhaustive")


class PrecoderMismatchError(numerics.NumericsError):
    """The two precoder constructions disagree beyond tolerance."""


@dataclass(frozen=True)
class BackhaulSolution:
    """Operating point of the backhaul for one channel realization.

    dual_powers_w is indexed by node. For the sequential-encoding solver it
    holds the dual uplink powers; for the zero-forcing baseline it holds the
    per-link transmit powers (either way it sums to total_power_w).
    """

    order: tuple
    dual_powers_w: np.ndarray
    precoders: np.ndarray
    achieved_rates_nats: np.ndarray
    total_power_w: float
    feasible: bool


def identity_order(num_nodes):
    return tuple(range(num_nodes))


def check_encoding_order(order, num_nodes):
    """Validate that `order` is a permutation of 0..num_nodes-1."""
    order = tuple(int(i) for i in order)
    if sorted(order) != list(range(num_nodes)):
        raise ValueError(
            f"encoding order {order} is not a permutation of 0..{num_nodes - 1}"
        )
    return order


def _as_channel_matrix(channels):
    h = np.asarray(channels, dtype=complex)
    if h.ndim != 2 or h.shape[0] < 1:
        raise ValueError(f"channels must form an (M, L) matrix, got shape {h.shape}")
    return h


def _check_targets(rate_targets_nats, num_nodes):
    t = np.asarray(rate_targets_nats, dtype=float)
    if t.shape != (num_nodes,):
        raise ValueError(f"expected {num_nodes} rate targets, got shape {t.shape}")
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ValueError("rate targets must be finite and nonnegative")
    return t


def _check_noise(noise_w):
    noise_w = float(noise_w)
    if noise_w <= 0:
        raise ValueError("noise power must be positive")
    return noise_w


# ---------------------------------------------------------------------------
# rate evaluation
# ---------------------------------------------------------------------------

def dpc_rates(channels, covariances, order, noise_w, frame_share=1.0, validate=True):
    """Per-node rates of the sequential encoder for given transmit covariances.

    The node at position p of `order` sees interference only from the
    covariances of positions 0..p-1 (its own stream is encoded later and the
    remaining streams are pre-cancelled).  Returns rates in nats indexed by
    node; `frame_share` scales all rates by the backhaul's share of the frame.
    """
    h = _as_channel_matrix(channels)
    m = h.shape[0]
    order = check_encoding_order(order, m)
    noise_w = _check_noise(noise_w)
    covs = [np.asarray(c, dtype=complex) for c in covariances]
    if len(covs) != m:
        raise ValueError(f"expected {m} covariances, got {len(covs)}")
    for c in covs:
        if c.shape != (h.shape[1], h.shape[1]):
            raise ValueError("covariance shape does not match the antenna count")
        if validate:
            numerics.check_hermitian(c)
            eigvals = np.linalg.eigvalsh(c)
            scale = max(abs(eigvals[-1]), 1.0)
            if eigvals[0] < -1e-10 * scale:
                raise ValueError(
                    f"covariance is not positive semidefinite (min eigenvalue {eigvals[0]:.3e})"
                )

    rates = np.zeros(m)
    accum = np.zeros((h.shape[1], h.shape[1]), dtype=complex)
    for pos in range(m):
        c = order[pos]
        hm = h[c]
        theta = noise_w + max(np.vdot(hm, accum @ hm).real, 0.0)
        own = max(np.vdot(hm, covs[c] @ hm).real, 0.0)
        rates[c] = frame_share * np.log1p(own / theta)
        accum = accum + covs[c]
    return rates


def dual_uplink_rates(channels, dual_powers_w, order, noise_w):
    """Per-node rates of the dual uplink, from determinant ratios.

    The receiver decodes in reverse position order, so position p is left
    with the interference of positions p+1..M-1 only.  Computed with
    log-determinants, which is deliberately a different route than the
    solver's quadratic-form recursion.
    """
    h = _as_channel_matrix(channels)
    m, el = h.shape
    order = check_encoding_order(order, m)
    noise_w = _check_noise(noise_w)
    wbar = np.asarray(dual_powers_w, dtype=float)
    if wbar.shape != (m,):
        raise ValueError(f"expected {m} dual powers, got shape {wbar.shape}")
    if np.any(wbar < 0):
        raise ValueError("dual powers must be nonnegative")

    logdets = np.zeros(m)
    mat = noise_w * np.eye(el, dtype=complex)
    for pos in range(m - 1, -1, -1):
        logdets[pos] = np.linalg.slogdet(mat)[1]
        c = order[pos]
        mat = mat + wbar[c] * np.outer(h[c], h[c].conj())
    logdet_full = np.linalg.slogdet(mat)[1]

    rates = np.zeros(m)
    for pos in range(m):
        upper = logdet_full if pos == 0 else logdets[pos - 1]
        rates[order[pos]] = upper - logdets[pos]
    return rates


# ---------------------------------------------------------------------------
# dual power recursion and the downlink transformation
# ---------------------------------------------------------------------------

def solve_dual_powers(channels, rate_targets_nats, order, noise_w):
    """Backward sweep for the dual uplink powers meeting the targets exactly.

    Position p's effective noise contains only the powers of positions
    p+1..M-1, so the sweep runs from the last position down; each power is
    (e^target - 1) divided by the whitened channel gain at that step.
    Returns the dual powers indexed by node.
    """
    h = _as_channel_matrix(channels)
    m, el = h.shape
    order = check_encoding_order(order, m)
    targets = _check_targets(rate_targets_nats, m)
    noise_w = _check_noise(noise_w)

    wbar = np.zeros(m)
    theta_bar = noise_w * np.eye(el, dtype=complex)
    for pos in range(m - 1, -1, -1):
        c = order[pos]
        if targets[c] == 0.0:
            continue
        hm = h[c]
        if np.vdot(hm, hm).real == 0.0:
            raise ValueError(f"node {c} has a zero channel but a positive rate target")
        qf = numerics.quad_form(hm, theta_bar)
        wbar[c] = np.expm1(targets[c]) / qf
        theta_bar = theta_bar + wbar[c] * np.outer(hm, hm.conj())
    return wbar


def _theta_bar_stack(h, wbar, order, noise_w):
    """Effective dual-uplink noise covariance at every position (backward)."""
    m, el = h.shape
    mats = [None] * m
    mat = noise_w * np.eye(el, dtype=complex)
    for pos in range(m - 1, -1, -1):
        mats[pos] = mat
        c = order[pos]
        if wbar[c] != 0.0:
            mat = mat + wbar[c] * np.outer(h[c], h[c].conj())
    return mats


def _downlink_interference(h_node, precoders, order, pos):
    """Interference power a node sees from vectors built at earlier positions."""
    if pos == 0:
        return 0.0
    earlier = precoders[list(order[:pos])]
    return float(np.sum(np.abs(earlier @ h_node.conj()) ** 2))


def duality_transform(channels, dual_powers_w, order, noise_w):
    """Map dual uplink powers to downlink precoding vectors.

    Forward sweep: at position p the downlink interference scalar counts the
    vectors already built for positions 0..p-1; the new vector points along
    the inverse-square-root-whitened channel and is scaled so its downlink
    rate equals the dual uplink rate.  The summed vector powers equal the
    summed dual powers.
    """
    h = _as_channel_matrix(channels)
    m, el = h.shape
    order = check_encoding_order(order, m)
    noise_w = _check_noise(noise_w)
    wbar = np.asarray(dual_powers_w, dtype=float)
    if wbar.shape != (m,):
        raise ValueError(f"expected {m} dual powers, got shape {wbar.shape}")
    if np.any(wbar < 0):
        raise ValueError("dual powers must be nonnegative")

    mats = _theta_bar_stack(h, wbar, order, noise_w)
    precoders = np.zeros((m, el), dtype=complex)
    for pos in range(m):
        c = order[pos]
        if wbar[c] == 0.0:
            continue
        hm = h[c]
        inv_sqrt = numerics.hpd_inv_sqrt(mats[pos])
        whitened = inv_sqrt @ hm
        norm = np.linalg.norm(whitened)
        if norm == 0.0:
            raise ValueError(f"node {c} has a zero channel but a positive dual power")
        theta = noise_w + _downlink_interference(hm, precoders, order, pos)
        precoders[c] = np.sqrt(theta * wbar[c]) * (inv_sqrt @ (whitened / norm))
    return precoders


def closed_form_precoders(channels, rate_targets_nats, order, noise_w, cross_check=True):
    """Direct algebraic construction of the downlink vectors from the targets.

    Each vector is the plain solve of the effective noise matrix against the
    channel, normalized by the whitened channel norm over the downlink
    interference scalar and scaled by the square root of the dual power. This
    shares no factorization with duality_transform (solve vs inverse square
    root), so agreement is a meaningful cross-check; with cross_check=True a
    disagreement beyond 1e-8 relative raises PrecoderMismatchError.
    """
    h = _as_channel_matrix(channels)
    m, el = h.shape
    order = check_encoding_order(order, m)
    targets = _check_targets(rate_targets_nats, m)
    noise_w = _check_noise(noise_w)

    # backward pass: dual powers and the per-position noise matrices
    wbar = np.zeros(m)
    mats = [None] * m
    mat = noise_w * np.eye(el, dtype=complex)
    for pos in range(m - 1, -1, -1):
        mats[pos] = mat
        c = order[pos]
        if targets[c] == 0.0:
            continue
        hm = h[c]
        if np.vdot(hm, hm).real == 0.0:
            raise ValueError(f"node {c} has a zero channel but a positive rate target")
        qf = numerics.quad_form(hm, mat)
        wbar[c] = np.expm1(targets[c]) / qf
        mat = mat + wbar[c] * np.outer(hm, hm.conj())

    # forward pass: vectors via the direct formula
    precoders = np.zeros((m, el), dtype=complex)
    for pos in range(m):
        c = order[pos]
        if wbar[c] == 0.0:
            continue
        hm = h[c]
        x = numerics.hpd_solve(mats[pos], hm)
        qf = np.vdot(hm, x).real
        theta = noise_w + _downlink_interference(hm, precoders, order, pos)
        precoders[c] = np.sqrt(wbar[c]) * x / np.sqrt(qf / theta)

    if cross_check:
        reference = duality_transform(channels, solve_dual_powers(channels, targets, order, noise_w), order, noise_w)
        _compare_precoders(precoders, reference, CLOSED_FORM_MATCH_RTOL)
    return precoders


def _compare_precoders(candidate, reference, rtol):
    """Per-vector agreement up to a unit-modulus phase; raises on mismatch."""
    for c in range(reference.shape[0]):
        ref_pow = float(np.sum(np.abs(reference[c]) ** 2))
        cand_pow = float(np.sum(np.abs(candidate[c]) ** 2))
        scale = max(ref_pow, cand_pow)
        if scale == 0.0:
            continue
        if abs(cand_pow - ref_pow) > rtol * scale:
            raise PrecoderMismatchError(
                f"vector power mismatch for node {c}: closed form {cand_pow:.12e} W, "
                f"transform {ref_pow:.12e} W"
            )
        overlap = np.vdot(reference[c], candidate[c])
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        diff = np.linalg.norm(candidate[c] - phase * reference[c])
        if diff > rtol * np.sqrt(scale):
            raise PrecoderMismatchError(
                f"vector direction mismatch for node {c}: phase-aligned residual "
                f"{diff:.3e} exceeds {rtol:g} * sqrt power"
            )


# ---------------------------------------------------------------------------
# encoding-order selection
# ---------------------------------------------------------------------------

def _total_dual_power_for_orders(h, targets, noise_w, perms):
    """Total dual power of every candidate order, batched backward sweeps."""
    n_orders, m = perms.shape
    el = h.shape[1]
    theta = np.tile(noise_w * np.eye(el, dtype=complex), (n_orders, 1, 1))
    gammas = np.expm1(targets)
    totals = np.zeros(n_orders)
    for pos in range(m - 1, -1, -1):
        nodes = perms[:, pos]
        hh = h[nodes]
        x = np.linalg.solve(theta, hh[..., None])[..., 0]
        qf = np.einsum("pl,pl->p", hh.conj(), x).real
        wb = gammas[nodes] / qf
        theta += wb[:, None, None] * (hh[:, :, None] * hh.conj()[:, None, :])
        totals += wb
    return totals


def choose_order(channels, rate_targets_nats, noise_w, strategy="exhaustive"):
    """Pick an encoding order.

    'identity' keeps node order; 'norm_ascending' puts the weakest channel at
    the interference-free position; 'exhaustive' enumerates all permutations
    (capped at 8 nodes) and takes the smallest total dual power, breaking
    ties by lexicographic order.
    """
    h = _as_channel_matrix(channels)
    m = h.shape[0]
    strategy = str(strategy).replace("-", "_")
    if strategy == "identity":
        return identity_order(m)
    if strategy == "norm_ascending":
        norms = np.linalg.norm(h, axis=1)
        return tuple(int(i) for i in np.argsort(norms, kind="stable"))
    if strategy == "exhaustive":
        if m > MAX_EXHAUSTIVE_NODES:
            raise ValueError(
                f"exhaustive order search is capped at {MAX_EXHAUSTIVE_NODES} nodes, got {m}"
            )
        targets = _check_targets(rate_targets_nats, m)
        noise_w = _check_noise(noise_w)
        perms = np.array(list(itertools.permutations(range(m))))
        totals = _total_dual_power_for_orders(h, targets, noise_w, perms)
        best = int(np.argmin(totals))  # first hit wins: lexicographic tie-break
        return tuple(int(i) for i in perms[best])
    raise ValueError(f"unknown ordering strategy: {strategy!r}")


# ---------------------------------------------------------------------------
# full solvers
# ---------------------------------------------------------------------------

def _rates_from_precoders(h, precoders, order, noise_w, frame_share):
    """Per-node rates achieved by rank-one precoders (cheap exact path)."""
    m = h.shape[0]
    rates = np.zeros(m)
    for pos in range(m):
        c = order[pos]
        hm = h[c]
        theta = noise_w + _downlink_interference(hm, precoders, order, pos)
        own = abs(np.vdot(hm, precoders[c])) ** 2
        rates[c] = frame_share * np.log1p(own / theta)
    return rates


def solve_backhaul(channels, rate_targets_nats, noise_w, p0max_w, *,
                   order=None, order_strategy="auto", frame_share=1.0):
    """Solve the backhaul for the given per-node rate targets.

    With frame_share s < 1 the targets are scaled by 1/s before solving, so
    the reported achieved rates (which include the s factor) meet the
    original targets. order_strategy='auto' enumerates orders exhaustively up
    to 4 nodes and falls back to norm_ascending above that.
    """
    h = _as_channel_matrix(channels)
    m = h.shape[0]
    targets = _check_targets(rate_targets_nats, m)
    noise_w = _check_noise(noise_w)
    p0max_w = float(p0max_w)
    if p0max_w <= 0:
        raise ValueError("gateway power budget must be positive")
    if not 0.0 < frame_share <= 1.0:
        raise ValueError("frame share must lie in (0, 1]")

    effective = targets / frame_share
    if order is None:
        strategy = order_strategy
        if strategy == "auto":
            strategy = "exhaustive" if m <= 4 else "norm_ascending"
        order = choose_order(h, effective, noise_w, strategy=strategy)
    else:
        order = check_encoding_order(order, m)

    wbar = solve_dual_powers(h, effective, order, noise_w)
    precoders = duality_transform(h, wbar, order, noise_w)
    rates = _rates_from_precoders(h, precoders, order, noise_w, frame_share)
    total = float(np.sum(np.abs(precoders) ** 2))
    return BackhaulSolution(
        order=order,
        dual_powers_w=wbar,
        precoders=precoders,
        achieved_rates_nats=rates,
        total_power_w=total,
        feasible=total <= p0max_w,
    )


def _infeasible_backhaul(m, el):
    return BackhaulSolution(
        order=identity_order(m),
        dual_powers_w=np.zeros(m),
        precoders=np.zeros((m, el), dtype=complex),
        achieved_rates_nats=np.zeros(m),
        total_power_w=float("inf"),
        feasible=False,
    )


def zfbf_solve(channels, rate_targets_nats, noise_w, p0max_w, *, frame_share=1.0):
    """Zero-forcing baseline.

    Beam directions are the normalized columns of the right pseudo-inverse of
    the stacked channel matrix, so every cross link is nulled; each per-link
    power is then set so its rate target is met exactly. Overloaded (M > L)
    or rank-deficient channel sets are reported infeasible, not raised.
    """
    h = _as_channel_matrix(channels)
    m, el = h.shape
    targets = _check_targets(rate_targets_nats, m)
    noise_w = _check_noise(noise_w)
    p0max_w = float(p0max_w)
    if p0max_w <= 0:
        raise ValueError("gateway power budget must be positive")
    if not 0.0 < frame_share <= 1.0:
        raise ValueError("frame share must lie in (0, 1]")

    if m > el:
        return _infeasible_backhaul(m, el)
    mat = h.conj()  # rows are h_m^H, so received amplitudes are mat @ w
    u, s, vh = np.linalg.svd(mat, full_matrices=False)
    if s[0] == 0.0 or s[-1] <= s[0] * 1e-12:
        return _infeasible_backhaul(m, el)

    pinv = vh.conj().T @ ((1.0 / s)[:, None] * u.conj().T)  # (L, M)
    directions = pinv / np.linalg.norm(pinv, axis=0, keepdims=True)
    effective = targets / frame_share
    link_gain = np.abs(np.einsum("ml,lm->m", mat, directions)) ** 2
    powers = np.expm1(effective) * noise_w / link_gain
    precoders = directions.T * np.sqrt(powers)[:, None]

    # honest rate evaluation including the (numerically tiny) leakage
    cross = np.abs(mat @ precoders.T) ** 2  # [m, k] = |h_m^H w_k|^2
    signal = np.diag(cross).copy()
    interference = cross.sum(axis=1) - signal
    rates = frame_share * np.log1p(signal / (noise_w + interference))

    total = float(powers.sum())
    return BackhaulSolution(
        order=identity_order(m),
        dual_powers_w=powers,
        precoders=precoders,
        achieved_rates_nats=rates,
        total_power_w=total,
        feasible=total <= p0max_w,
    )
