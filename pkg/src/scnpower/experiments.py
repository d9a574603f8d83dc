"""Monte Carlo engine: synthetic topologies, distance sweeps, result files.

A sweep point is a gateway-to-node distance; every trial draws a fresh
topology, fresh SINR requirements and fresh fading, then evaluates every
scheme on the same realization.  Each trial owns an RNG stream derived from
(seed, point index, trial index), so results do not depend on execution
order or worker count.
"""

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .joint import SCHEMES, solve_instance
from .scenario import (
    CellConfig,
    ConfigError,
    NetworkScenario,
    UeConfig,
    MIN_LINK_DISTANCE_M,
    dbm_to_watts,
    sample_channels,
    watts_to_dbm,
)

CSV_COLUMNS = (
    "distance_m",
    "scheme",
    "mean_power_dbm",
    "mean_power_w",
    "outage_prob",
    "backhaul_outage_prob",
    "access_outage_prob",
    "trials",
    "ci_halfwidth",
)

# two-sided 95% normal quantile for the confidence half-widths
Z_95 = 1.959963984540054


@dataclass(frozen=True)
class SweepSpec:
    """Definition of a distance sweep at fixed radio parameters."""

    distances_m: tuple
    trials: int
    schemes: tuple = ("dpc", "zfbf")
    sinr_range: tuple = (35.0, 45.0)
    sinr_units: str = "linear"
    num_cells: int = 4
    ues_per_cell: int = 1
    ue_radius_m: float = 15.0
    min_distance_m: float = MIN_LINK_DISTANCE_M
    num_antennas: int = 8
    carrier_freq_ghz: float = 2.0
    noise_power_w: float = float(dbm_to_watts(-107.0))
    gateway_power_budget_w: float = 1.0
    scbs_power_budget_w: float = float(dbm_to_watts(23.0))
    backhaul_frame_share: float = 1.0
    order_strategy: str = "auto"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "distances_m", tuple(float(d) for d in self.distances_m))
        object.__setattr__(self, "schemes", tuple(str(s) for s in self.schemes))
        object.__setattr__(self, "sinr_range", tuple(float(g) for g in self.sinr_range))
        if not self.distances_m:
            raise ValueError("the sweep needs at least one distance")
        if any(d <= 0 for d in self.distances_m):
            raise ValueError("sweep distances must be positive")
        if any(b <= a for a, b in zip(self.distances_m, self.distances_m[1:])):
            raise ValueError("sweep distances must be strictly ascending")
        if self.trials < 1:
            raise ValueError("the sweep needs at least one trial per point")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise ValueError(f"schemes must be a nonempty subset of {SCHEMES}")
        if len(self.sinr_range) != 2 or self.sinr_range[0] > self.sinr_range[1]:
            raise ValueError("sinr_range must be (low, high) with low <= high")
        if self.sinr_range[0] < 0:
            raise ValueError("SINR requirements must be nonnegative")
        if self.sinr_units not in ("linear", "db"):
            raise ValueError("sinr_units must be 'linear' or 'db'")
        if self.num_cells < 1 or self.ues_per_cell < 1:
            raise ValueError("the sweep needs at least one cell and one user per cell")
        if self.ue_radius_m < 0:
            raise ValueError("user disc radius must be nonnegative")
        if self.min_distance_m <= 0:
            raise ValueError("minimum link distance must be positive")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class SweepRow:
    """Aggregated statistics for one (distance, scheme) point."""

    distance_m: float
    scheme: str
    mean_power_w: float
    mean_power_dbm: float
    mean_power_nonoutage_w: float
    outage_prob: float
    backhaul_outage_prob: float
    access_outage_prob: float
    trials: int
    ci_halfwidth_w: float


@dataclass(frozen=True)
class SweepStatistics:
    spec: SweepSpec
    rows: tuple


def generate_topology(spec, distance_m, rng, return_coords=False):
    """One synthetic scenario: nodes equally spaced on a circle of radius
    `distance_m` around the gateway, each user uniform in a disc around its
    node, link distances floored at spec.min_distance_m, and per-user SINR
    requirements drawn uniformly from spec.sinr_range.
    """
    m = spec.num_cells
    angles = 2.0 * np.pi * np.arange(m) / m
    scbs_xy = distance_m * np.stack([np.cos(angles), np.sin(angles)], axis=1)

    cells = []
    ue_xy_all = []
    for cell in range(m):
        radii = spec.ue_radius_m * np.sqrt(rng.uniform(size=spec.ues_per_cell))
        theta = rng.uniform(0.0, 2.0 * np.pi, spec.ues_per_cell)
        ue_xy = scbs_xy[cell] + np.stack([radii * np.cos(theta), radii * np.sin(theta)], axis=1)
        ue_xy_all.append(ue_xy)

        gammas = rng.uniform(spec.sinr_range[0], spec.sinr_range[1], spec.ues_per_cell)
        if spec.sinr_units == "db":
            gammas = 10.0 ** (gammas / 10.0)
        rates = np.log1p(gammas)

        ues = []
        for n in range(spec.ues_per_cell):
            dists = np.linalg.norm(scbs_xy - ue_xy[n], axis=1)
            dists = np.maximum(dists, spec.min_distance_m)
            ues.append(UeConfig(tuple(dists), float(rates[n])))
        cells.append(
            CellConfig(
                backhaul_distance_m=float(distance_m),
                scbs_power_budget_w=spec.scbs_power_budget_w,
                ues=tuple(ues),
            )
        )

    scenario = NetworkScenario(
        num_antennas=spec.num_antennas,
        cells=tuple(cells),
        noise_power_w=spec.noise_power_w,
        gateway_power_budget_w=spec.gateway_power_budget_w,
        carrier_freq_ghz=spec.carrier_freq_ghz,
        backhaul_frame_share=spec.backhaul_frame_share,
        rng_seed=spec.seed,
    )
    if return_coords:
        coords = {"gateway_xy": np.zeros(2), "scbs_xy": scbs_xy, "ue_xy": ue_xy_all}
        return scenario, coords
    return scenario


def _trial_rng(seed, point_index, trial_index):
    return np.random.default_rng(np.random.SeedSequence([seed, point_index, trial_index]))


def _run_trial(spec, point_index, trial_index):
    """One realization evaluated under every scheme; returns per-scheme stats."""
    rng = _trial_rng(spec.seed, point_index, trial_index)
    scenario = generate_topology(spec, spec.distances_m[point_index], rng)
    channels = sample_channels(scenario, rng)
    results = {}
    for scheme in spec.schemes:
        outcome = solve_instance(
            scenario, channels, scheme=scheme, order_strategy=spec.order_strategy
        )
        results[scheme] = (
            outcome.total_power_w,
            outcome.system_outage,
            not outcome.backhaul.feasible,
            not outcome.access.feasible,
        )
    return results


def run_sweep(spec, workers=1):
    """Run the full sweep; deterministic for a given spec regardless of
    `workers` (each trial derives its RNG stream from its own indices and
    aggregation follows trial order)."""
    rows = []
    for di in range(len(spec.distances_m)):
        indices = range(spec.trials)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                trial_results = list(pool.map(lambda ti: _run_trial(spec, di, ti), indices))
        else:
            trial_results = [_run_trial(spec, di, ti) for ti in indices]

        for scheme in spec.schemes:
            power = np.array([r[scheme][0] for r in trial_results])
            outage = np.array([r[scheme][1] for r in trial_results], dtype=bool)
            bh_out = np.array([r[scheme][2] for r in trial_results], dtype=bool)
            ac_out = np.array([r[scheme][3] for r in trial_results], dtype=bool)

            mean_w = float(power.mean())
            if spec.trials > 1:
                ci = float(Z_95 * power.std(ddof=1) / np.sqrt(spec.trials))
            else:
                ci = 0.0
            ok = ~outage
            nonout_mean = float(power[ok].mean()) if np.any(ok) else 0.0
            rows.append(
                SweepRow(
                    distance_m=spec.distances_m[di],
                    scheme=scheme,
                    mean_power_w=mean_w,
                    mean_power_dbm=float(watts_to_dbm(mean_w)) if mean_w > 0 else float("-inf"),
                    mean_power_nonoutage_w=nonout_mean,
                    outage_prob=float(outage.mean()),
                    backhaul_outage_prob=float(bh_out.mean()),
                    access_outage_prob=float(ac_out.mean()),
                    trials=spec.trials,
                    ci_halfwidth_w=ci,
                )
            )
    return SweepStatistics(spec=spec, rows=tuple(rows))


# ---------------------------------------------------------------------------
# result files
# ---------------------------------------------------------------------------

def _fmt(value):
    """Float formatting used in every result file: 12 significant digits."""
    return f"{value:.12g}"


def _row_csv_values(row):
    return (
        _fmt(row.distance_m),
        row.scheme,
        _fmt(row.mean_power_dbm),
        _fmt(row.mean_power_w),
        _fmt(row.outage_prob),
        _fmt(row.backhaul_outage_prob),
        _fmt(row.access_outage_prob),
        str(row.trials),
        _fmt(row.ci_halfwidth_w),
    )


def _round_floats(obj):
    if isinstance(obj, float):
        return float(_fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def _summary_payload(stats):
    return _round_floats(
        {
            "spec": asdict(stats.spec),
            "seed": stats.spec.seed,
            "csv_columns": list(CSV_COLUMNS),
            "rows": [asdict(row) for row in stats.rows],
        }
    )


def emit_results(stats, path, format="csv"):
    """Write sweep results.

    format='csv' writes the CSV table to `path` plus a structured summary
    (config echo, seed, per-component outage splits and both power averages)
    next to it with a .summary.json suffix; format='json' writes everything
    into the single JSON file at `path`.
    """
    path = Path(path)
    try:
        if format == "csv":
            lines = [",".join(CSV_COLUMNS)]
            lines.extend(",".join(_row_csv_values(row)) for row in stats.rows)
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            summary_path = path.with_suffix(".summary.json")
            summary_path.write_text(
                json.dumps(_summary_payload(stats), indent=2) + "\n", encoding="utf-8"
            )
        elif format == "json":
            path.write_text(
                json.dumps(_summary_payload(stats), indent=2) + "\n", encoding="utf-8"
            )
        else:
            raise ValueError(f"unknown result format {format!r}")
    except OSError as exc:
        raise OSError(f"failed writing results to {path}: {exc}") from exc


def load_results_csv(path):
    """Parse a result CSV back into a list of dicts (floats where possible)."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValueError(f"result file {path} is empty")
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        values = line.split(",")
        record = {}
        for key, val in zip(header, values):
            if key == "scheme":
                record[key] = val
            elif key == "trials":
                record[key] = int(val)
            else:
                record[key] = float(val)
        out.append(record)
    return out


# ---------------------------------------------------------------------------
# sweep configuration files
# ---------------------------------------------------------------------------

def sweep_spec_from_dict(cfg):
    """Build a SweepSpec from parsed config data (see README for the schema)."""
    if not isinstance(cfg, dict):
        raise ConfigError("sweep config must be a JSON object")
    sweep = cfg.get("sweep")
    radio = cfg.get("radio")
    if not isinstance(sweep, dict):
        raise ConfigError("missing key 'sweep' in sweep config")
    if not isinstance(radio, dict):
        raise ConfigError("missing key 'radio' in sweep config")

    def need(section, name, key):
        if key not in section:
            raise ConfigError(f"missing key '{key}' in '{name}' section")
        return section[key]

    try:
        return SweepSpec(
            distances_m=tuple(need(sweep, "sweep", "distances_m")),
            trials=int(need(sweep, "sweep", "trials")),
            schemes=tuple(sweep.get("schemes", ("dpc", "zfbf"))),
            sinr_range=tuple(sweep.get("sinr_range", (35.0, 45.0))),
            sinr_units=str(sweep.get("sinr_units", "linear")).lower(),
            num_cells=int(sweep.get("num_cells", 4)),
            ues_per_cell=int(sweep.get("ues_per_cell", 1)),
            ue_radius_m=float(sweep.get("ue_radius_m", 15.0)),
            min_distance_m=float(sweep.get("min_distance_m", MIN_LINK_DISTANCE_M)),
            num_antennas=int(need(radio, "radio", "num_antennas")),
            carrier_freq_ghz=float(radio.get("carrier_freq_ghz", 2.0)),
            noise_power_w=float(dbm_to_watts(need(radio, "radio", "noise_dbm"))),
            gateway_power_budget_w=float(
                dbm_to_watts(need(radio, "radio", "gateway_power_budget_dbm"))
            ),
            scbs_power_budget_w=float(
                dbm_to_watts(need(radio, "radio", "scbs_power_budget_dbm"))
            ),
            backhaul_frame_share=float(radio.get("backhaul_frame_share", 1.0)),
            order_strategy=str(sweep.get("order_strategy", "auto")),
            seed=int(sweep.get("seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_sweep_spec(path):
    """Read a sweep config file (JSON)."""
    from .scenario import _load_json

    return sweep_spec_from_dict(_load_json(path))
