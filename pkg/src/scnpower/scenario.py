"""Static network description: radio parameters, unit conversions, pathloss
models and Rayleigh channel sampling.

Everything downstream of the configuration boundary works in linear units
(watts for power, nats for rates). dB and dBm appear only when reading
config files and when formatting output for humans.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

# distance floor applied before pathloss evaluation when generating topologies
MIN_LINK_DISTANCE_M = 1.0


class ConfigError(ValueError):
    """Malformed or inconsistent configuration input."""


# ---------------------------------------------------------------------------
# unit conversions
# ---------------------------------------------------------------------------

def db_to_linear(x_db):
    """Convert a dB value to its linear ratio, 10^(x/10)."""
    return 10.0 ** (np.asarray(x_db, dtype=float) / 10.0)


def linear_to_db(x):
    """Convert a positive linear ratio to dB."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("linear value must be positive to convert to dB")
    return 10.0 * np.log10(x)


def dbm_to_watts(x_dbm):
    """dBm -> watts (subtract 30 dB, then convert)."""
    return 10.0 ** ((np.asarray(x_dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(x_w):
    """Watts -> dBm; requires a strictly positive power."""
    x_w = np.asarray(x_w, dtype=float)
    if np.any(x_w <= 0):
        raise ValueError("power must be positive to convert to dBm")
    return 10.0 * np.log10(x_w) + 30.0


# ---------------------------------------------------------------------------
# pathloss models (distances in meters, carrier frequency in GHz)
# ---------------------------------------------------------------------------

def backhaul_pathloss_db(distance_m, carrier_freq_ghz):
    """Gateway-to-node pathloss: 32.4 + 20 log10(f) + 31.9 log10(d) dB."""
    d = np.asarray(distance_m, dtype=float)
    _check_pathloss_args(d, carrier_freq_ghz)
    return 32.4 + 20.0 * np.log10(carrier_freq_ghz) + 31.9 * np.log10(d)


def access_pathloss_db(distance_m, carrier_freq_ghz):
    """Node-to-user pathloss: 17.3 + 24.9 log10(f) + 38.3 log10(d) dB."""
    d = np.asarray(distance_m, dtype=float)
    _check_pathloss_args(d, carrier_freq_ghz)
    return 17.3 + 24.9 * np.log10(carrier_freq_ghz) + 38.3 * np.log10(d)


def _check_pathloss_args(distance_m, carrier_freq_ghz):
    if np.any(distance_m <= 0):
        raise ValueError("link distance must be positive")
    if carrier_freq_ghz <= 0:
        raise ValueError("carrier frequency must be positive")


# ---------------------------------------------------------------------------
# scenario dataclasses
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UeConfig:
    """One user terminal.

    distances_to_scbs_m holds the distance from *every* small-cell node to
    this user (entry j = node j), so cross-link gains are well defined.
    """

    distances_to_scbs_m: tuple
    rate_req_nats: float

    def __post_init__(self):
        dists = tuple(float(d) for d in self.distances_to_scbs_m)
        object.__setattr__(self, "distances_to_scbs_m", dists)
        object.__setattr__(self, "rate_req_nats", float(self.rate_req_nats))
        if not dists:
            raise ValueError("a user needs at least one node distance")
        if any(d <= 0 for d in dists):
            raise ValueError("user-to-node distances must be positive")
        if self.rate_req_nats < 0:
            raise ValueError("rate requirement must be nonnegative")


@dataclass(frozen=True)
class CellConfig:
    """One small cell: its backhaul link and the users it serves."""

    backhaul_distance_m: float
    scbs_power_budget_w: float
    ues: tuple

    def __post_init__(self):
        object.__setattr__(self, "backhaul_distance_m", float(self.backhaul_distance_m))
        object.__setattr__(self, "scbs_power_budget_w", float(self.scbs_power_budget_w))
        object.__setattr__(self, "ues", tuple(self.ues))
        if self.backhaul_distance_m <= 0:
            raise ValueError("backhaul distance must be positive")
        if self.scbs_power_budget_w <= 0:
            raise ValueError("node power budget must be positive")
        if not self.ues:
            raise ValueError("a cell must serve at least one user")


@dataclass(frozen=True)
class NetworkScenario:
    """Immutable description of one network instance."""

    num_antennas: int
    cells: tuple
    noise_power_w: float
    gateway_power_budget_w: float
    carrier_freq_ghz: float = 2.0
    backhaul_frame_share: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(self.cells))
        if self.num_antennas < 1:
            raise ValueError("the gateway needs at least one antenna")
        if not self.cells:
            raise ValueError("the network needs at least one cell")
        if self.noise_power_w <= 0:
            raise ValueError("noise power must be positive")
        if self.gateway_power_budget_w <= 0:
            raise ValueError("gateway power budget must be positive")
        if self.carrier_freq_ghz <= 0:
            raise ValueError("carrier frequency must be positive")
        if not 0.0 < self.backhaul_frame_share <= 1.0:
            raise ValueError("backhaul frame share must lie in (0, 1]")
        m = len(self.cells)
        for i, cell in enumerate(self.cells):
            for ue in cell.ues:
                if len(ue.distances_to_scbs_m) != m:
                    raise ValueError(
                        f"user in cell {i} lists {len(ue.distances_to_scbs_m)} "
                        f"node distances, expected {m}"
                    )

    @property
    def num_cells(self):
        return len(self.cells)

    @property
    def ue_counts(self):
        return tuple(len(cell.ues) for cell in self.cells)

    @property
    def total_ues(self):
        return sum(self.ue_counts)

    def per_ue_rate_nats(self):
        """Flat array of user rate requirements, stacked cell by cell."""
        return np.array(
            [ue.rate_req_nats for cell in self.cells for ue in cell.ues], dtype=float
        )

    def per_cell_rate_nats(self):
        """Per-cell sums of the user rate requirements."""
        return np.array(
            [sum(ue.rate_req_nats for ue in cell.ues) for cell in self.cells],
            dtype=float,
        )

    def scbs_budgets_w(self):
        return np.array([cell.scbs_power_budget_w for cell in self.cells], dtype=float)


@dataclass(frozen=True)
class ChannelRealization:
    """One fading draw.

    backhaul: complex (M, L) array, row m = channel from the gateway's L
        antennas to node m.
    access_gain_sq: tuple of length M; entry m is a float (M, N_m) array
        whose [j, n] element is the squared channel magnitude from node j to
        user n of cell m.
    """

    backhaul: np.ndarray
    access_gain_sq: tuple

    def __post_init__(self):
        h = np.asarray(self.backhaul, dtype=complex)
        if h.ndim != 2:
            raise ValueError("backhaul channels must form an (M, L) matrix")
        gains = tuple(np.asarray(g, dtype=float) for g in self.access_gain_sq)
        m = h.shape[0]
        if len(gains) != m:
            raise ValueError("access gains must hold one block per cell")
        for i, g in enumerate(gains):
            if g.ndim != 2 or g.shape[0] != m:
                raise ValueError(
                    f"access gain block {i} must have shape (M, N_{i}), got {g.shape}"
                )
            if not np.all(np.isfinite(g)) or np.any(g < 0):
                raise ValueError("access gains must be finite and nonnegative")
        if not np.all(np.isfinite(h)):
            raise ValueError("backhaul channels must be finite")
        h.setflags(write=False)
        for g in gains:
            g.setflags(write=False)
        object.__setattr__(self, "backhaul", h)
        object.__setattr__(self, "access_gain_sq", gains)

    @property
    def num_cells(self):
        return self.backhaul.shape[0]

    @property
    def ue_counts(self):
        return tuple(g.shape[1] for g in self.access_gain_sq)

    def gain_sq(self, j, m, n):
        """Squared gain of the link from node j to user (m, n)."""
        return float(self.access_gain_sq[m][j, n])


def sample_channels(scenario, rng):
    """Draw one Rayleigh realization for every link of the scenario.

    Entries are circularly symmetric complex Gaussians whose variance is the
    reciprocal linear pathloss of the link (each real component carries half
    the variance). The draw order is fixed, so a given generator state always
    produces the same realization.
    """
    m = scenario.num_cells
    el = scenario.num_antennas
    fc = scenario.carrier_freq_ghz

    bh_dist = np.array([c.backhaul_distance_m for c in scenario.cells])
    omega = db_to_linear(backhaul_pathloss_db(bh_dist, fc))
    comp_std = np.sqrt(1.0 / (2.0 * omega))[:, None]
    h = (rng.standard_normal((m, el)) + 1j * rng.standard_normal((m, el))) * comp_std

    gains = []
    for cell in scenario.cells:
        d = np.array([[ue.distances_to_scbs_m[j] for ue in cell.ues] for j in range(m)])
        w_lin = db_to_linear(access_pathloss_db(d, fc))
        std = np.sqrt(1.0 / (2.0 * w_lin))
        g = (rng.standard_normal(d.shape) + 1j * rng.standard_normal(d.shape)) * std
        gains.append(np.abs(g) ** 2)
    return ChannelRealization(h, tuple(gains))


# ---------------------------------------------------------------------------
# configuration files
# ---------------------------------------------------------------------------

def _require(mapping, key, where):
    if key not in mapping:
        raise ConfigError(f"missing key '{key}' in {where}")
    return mapping[key]


def _rate_from_ue_entry(entry, where, sinr_units):
    has_rate = "rate_req_nats" in entry
    has_sinr = "sinr_target" in entry
    if has_rate == has_sinr:
        raise ConfigError(
            f"{where} must carry exactly one of 'rate_req_nats' or 'sinr_target'"
        )
    if has_rate:
        return float(entry["rate_req_nats"])
    gamma = float(entry["sinr_target"])
    if sinr_units == "db":
        gamma = float(db_to_linear(gamma))
    if gamma < 0:
        raise ConfigError(f"'sinr_target' in {where} must be nonnegative")
    return float(np.log1p(gamma))


def scenario_from_dict(cfg):
    """Build a NetworkScenario from parsed config data.

    Powers arrive in dBm and are converted to watts here; user requirements
    arrive either as rates in nats ('rate_req_nats') or as SINR targets
    ('sinr_target', interpreted per the top-level 'sinr_units' flag).
    """
    if not isinstance(cfg, dict):
        raise ConfigError("scenario config must be a JSON object")
    sinr_units = str(cfg.get("sinr_units", "linear")).lower()
    if sinr_units not in ("linear", "db"):
        raise ConfigError("'sinr_units' must be 'linear' or 'db'")
    log.info("interpreting sinr_target values as %s", sinr_units)

    cells_cfg = _require(cfg, "cells", "scenario config")
    if not isinstance(cells_cfg, list) or not cells_cfg:
        raise ConfigError("'cells' must be a nonempty list")

    cells = []
    for i, cell_cfg in enumerate(cells_cfg):
        where = f"cells[{i}]"
        ues_cfg = _require(cell_cfg, "ues", where)
        if not isinstance(ues_cfg, list) or not ues_cfg:
            raise ConfigError(f"'ues' in {where} must be a nonempty list")
        ues = []
        for k, ue_cfg in enumerate(ues_cfg):
            ue_where = f"{where}.ues[{k}]"
            dists = _require(ue_cfg, "distances_to_scbs_m", ue_where)
            rate = _rate_from_ue_entry(ue_cfg, ue_where, sinr_units)
            try:
                ues.append(UeConfig(tuple(dists), rate))
            except ValueError as exc:
                raise ConfigError(f"{ue_where}: {exc}") from exc
        try:
            cells.append(
                CellConfig(
                    backhaul_distance_m=float(_require(cell_cfg, "backhaul_distance_m", where)),
                    scbs_power_budget_w=float(
                        dbm_to_watts(_require(cell_cfg, "scbs_power_budget_dbm", where))
                    ),
                    ues=tuple(ues),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc

    try:
        return NetworkScenario(
            num_antennas=int(_require(cfg, "num_antennas", "scenario config")),
            cells=tuple(cells),
            noise_power_w=float(dbm_to_watts(_require(cfg, "noise_dbm", "scenario config"))),
            gateway_power_budget_w=float(
                dbm_to_watts(_require(cfg, "gateway_power_budget_dbm", "scenario config"))
            ),
            carrier_freq_ghz=float(cfg.get("carrier_freq_ghz", 2.0)),
            backhaul_frame_share=float(cfg.get("backhaul_frame_share", 1.0)),
            rng_seed=int(cfg.get("rng_seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _load_json(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc


def load_scenario(path):
    """Read a scenario config file (JSON). See the README for the schema."""
    return scenario_from_dict(_load_json(path))


def load_channels(path, scenario=None):
    """Read an explicit channel realization from JSON.

    Expected keys: 'backhaul_real' and 'backhaul_imag' as (M, L) nested
    lists, and 'access_gain_sq' indexed [j][m][n] (source node, cell, user).
    Useful for replaying a realization through the CLI.
    """
    raw = _load_json(path)
    re_part = np.asarray(_require(raw, "backhaul_real", f"channels file {path}"), dtype=float)
    im_part = np.asarray(_require(raw, "backhaul_imag", f"channels file {path}"), dtype=float)
    if re_part.shape != im_part.shape or re_part.ndim != 2:
        raise ConfigError(f"backhaul parts in {path} must be matching (M, L) matrices")
    h = re_part + 1j * im_part

    g_raw = _require(raw, "access_gain_sq", f"channels file {path}")
    m = h.shape[0]
    if len(g_raw) != m:
        raise ConfigError(f"'access_gain_sq' in {path} must have M={m} source blocks")
    gains = []
    for cell in range(m):
        try:
            block = np.array([[g_raw[j][cell][n] for n in range(len(g_raw[0][cell]))]
                              for j in range(m)], dtype=float)
        except (IndexError, TypeError, ValueError) as exc:
            raise ConfigError(f"'access_gain_sq' in {path} is ragged or malformed: {exc}") from exc
        gains.append(block)
    try:
        channels = ChannelRealization(h, tuple(gains))
    except ValueError as exc:
        raise ConfigError(f"channels file {path}: {exc}") from exc

    if scenario is not None:
        if channels.num_cells != scenario.num_cells or h.shape[1] != scenario.num_antennas:
            raise ConfigError(
                f"channels file {path} has shape {h.shape}, scenario expects "
                f"({scenario.num_cells}, {scenario.num_antennas})"
            )
        if channels.ue_counts != scenario.ue_counts:
            raise ConfigError(
                f"channels file {path} user counts {channels.ue_counts} do not match "
                f"scenario {scenario.ue_counts}"
            )
    return channels
