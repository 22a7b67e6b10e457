"""Single-cell underlay D2D scenario: topology, channel gains, rates, cost matrices.

The cell has a base station at the origin transmitting downlink to n cellular
users (CUs). m D2D pairs (m <= n) may each reuse the resource block of at most
one CU. Sharing a block couples the two links: the CU sees interference from
the D2D transmitter and the D2D receiver sees interference from the base
station. Pairings are scored by their combined Shannon rate and assembled into
a square assignment cost matrix:

  * entry (i, j), i < m, is -(R_j + R_i) in Mbit/s when pairing D2D i with CU j
    satisfies both SINR thresholds and improves on the CU's exclusive rate;
  * otherwise the entry is -R_j_alone (the CU keeps its block to itself);
  * rows i >= m are placeholder pairs whose entries are all -R_j_alone, so a CU
    matched there simply does not share.

The sign flip turns the rate-maximization into the minimization solved by
:func:`lsapkit.lsap.hungarian_solve`; costs are scaled to Mbit/s to keep
magnitudes O(1-10) for the learners downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from .rng import SplitMix64

#: Distances below this are clamped before the path-loss law (which diverges at 0).
MIN_PATH_DISTANCE_M = 1.0

#: Cost matrices are stored in Mbit/s: cost = -(rate_bps * RATE_SCALE).
RATE_SCALE = 1e-6


@dataclass(frozen=True)
class ScenarioConfig:
    """Cell parameters. Distances in meters, powers in dBm, bandwidth in Hz."""

    cell_radius_m: float = 1000.0
    d2d_max_dist_m: float = 15.0
    bs_power_dbm: float = 46.0
    d2d_power_dbm: float = 23.0
    cu_power_dbm: float = 23.0  # uplink power; recorded but unused in this downlink model
    noise_psd_dbm_hz: float = -174.0
    carrier_ghz: float = 1.7
    bandwidth_hz: float = 180e3
    sinr_threshold_cu_db: float = 0.0
    sinr_threshold_d2d_db: float = 0.0
    n_cu: int = 4
    m_d2d: int = 3

    def __post_init__(self):
        if not (self.n_cu >= self.m_d2d >= 1):
            raise ValueError(f"need n_cu >= m_d2d >= 1, got n_cu={self.n_cu}, m_d2d={self.m_d2d}")
        if not (self.cell_radius_m > self.d2d_max_dist_m > 0):
            raise ValueError("need cell_radius_m > d2d_max_dist_m > 0")
        if self.carrier_ghz <= 0:
            raise ValueError("carrier frequency must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth must be positive")
        for name in ("bs_power_dbm", "d2d_power_dbm", "cu_power_dbm", "noise_psd_dbm_hz"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")

    @classmethod
    def for_order(cls, n: int, m: int | None = None, **overrides) -> "ScenarioConfig":
        """Config for n CUs; m defaults to ceil(3n/4) so placeholder rows always occur."""
        if m is None:
            m = max(1, math.ceil(3 * n / 4))
        return cls(n_cu=n, m_d2d=m, **overrides)


@dataclass(frozen=True)
class Topology:
    """Node placements in meters; the base station sits at the origin."""

    cu_pos: np.ndarray      # (n, 2)
    d2d_tx_pos: np.ndarray  # (m, 2)
    d2d_rx_pos: np.ndarray  # (m, 2)


@dataclass(frozen=True)
class ChannelGains:
    """Linear power gains of the four link families."""

    bs_to_cu: np.ndarray      # (n,)    base station -> CU j
    d2d_tx_to_cu: np.ndarray  # (m, n)  D2D transmitter i -> CU j
    d2d_link: np.ndarray      # (m,)    D2D transmitter i -> its own receiver
    bs_to_d2d_rx: np.ndarray  # (m,)    base station -> D2D receiver i


@dataclass(frozen=True)
class RateReport:
    """Per-pair SINRs, Shannon rates (bit/s) and sharing feasibility."""

    sinr_cu: np.ndarray         # (m, n) CU SINR when sharing with D2D i
    sinr_d2d: np.ndarray        # (m, n) D2D SINR when sharing with CU j
    cu_rate_shared: np.ndarray  # (m, n)
    d2d_rate: np.ndarray        # (m, n)
    cu_rate_alone: np.ndarray   # (n,)   CU rate with an exclusive block
    feasible: np.ndarray        # (m, n) bool: thresholds met and sharing improves the sum


def path_loss_db(distance_m, carrier_ghz: float):
    """Log-distance path loss in dB: 36.7*log10(d) + 22.7 + 26*log10(f_GHz).

    Distances below MIN_PATH_DISTANCE_M are clamped to it. Accepts scalars or
    arrays; raises on non-positive distances or frequency.
    """
    d = np.asarray(distance_m, dtype=np.float64)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    if carrier_ghz <= 0:
        raise ValueError("carrier frequency must be positive")
    d = np.maximum(d, MIN_PATH_DISTANCE_M)
    pl = 36.7 * np.log10(d) + 22.7 + 26.0 * np.log10(carrier_ghz)
    return float(pl) if np.isscalar(distance_m) else pl


def gain_linear(distance_m, carrier_ghz: float):
    """Linear power gain 10^(-PL/10) for the path loss above. Strictly positive."""
    pl = path_loss_db(distance_m, carrier_ghz)
    return 10.0 ** (-np.asarray(pl) / 10.0) if not np.isscalar(pl) else 10.0 ** (-pl / 10.0)


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def sample_topology(config: ScenarioConfig, seed: int) -> Topology:
    """Draw a topology from the documented SplitMix64 stream for ``seed``.

    Draw order: the n CU positions (uniform on the cell disk), then the m D2D
    transmitters (same disk), then the m receiver offsets (uniform on the disk
    of radius d2d_max_dist_m around each transmitter). Each point consumes two
    uniforms, radial first.
    """
    g = SplitMix64(seed)
    cu = np.array([g.next_disk_point(config.cell_radius_m) for _ in range(config.n_cu)])
    tx = np.array([g.next_disk_point(config.cell_radius_m) for _ in range(config.m_d2d)])
    rx = tx + np.array([g.next_disk_point(config.d2d_max_dist_m) for _ in range(config.m_d2d)])
    return Topology(cu_pos=cu, d2d_tx_pos=tx, d2d_rx_pos=rx)


def compute_gains(topology: Topology, config: ScenarioConfig) -> ChannelGains:
    """Linear gains over Euclidean distances for all four link families."""
    fc = config.carrier_ghz
    cu = topology.cu_pos
    tx = topology.d2d_tx_pos
    rx = topology.d2d_rx_pos
    d_bs_cu = np.linalg.norm(cu, axis=1)
    d_tx_cu = np.linalg.norm(tx[:, None, :] - cu[None, :, :], axis=2)
    d_link = np.linalg.norm(tx - rx, axis=1)
    d_bs_rx = np.linalg.norm(rx, axis=1)
    return ChannelGains(
        bs_to_cu=gain_linear(d_bs_cu, fc),
        d2d_tx_to_cu=gain_linear(d_tx_cu, fc),
        d2d_link=gain_linear(d_link, fc),
        bs_to_d2d_rx=gain_linear(d_bs_rx, fc),
    )


def shannon_rate(bandwidth_hz: float, sinr_linear):
    """Shannon capacity B*log2(1 + sinr) in bit/s."""
    return bandwidth_hz * np.log2(1.0 + np.asarray(sinr_linear, dtype=np.float64))


def compute_rates(gains: ChannelGains, config: ScenarioConfig) -> RateReport:
    """Pairwise SINRs and rates assuming D2D i is the sole sharer of CU j's block.

    All dB/dBm quantities are converted to linear units first; the noise power
    is the PSD scaled by the bandwidth. The D2D SINR does not depend on which
    CU is shared (the interferer is the base station's downlink either way), so
    its rows are constant; both SINR tables are materialized as (m, n) to keep
    the pairwise contract uniform.
    """
    p_bs = dbm_to_watt(config.bs_power_dbm)
    p_d2d = dbm_to_watt(config.d2d_power_dbm)
    noise = dbm_to_watt(config.noise_psd_dbm_hz) * config.bandwidth_hz
    b = config.bandwidth_hz

    sinr_cu = (p_bs * gains.bs_to_cu[None, :]) / (noise + p_d2d * gains.d2d_tx_to_cu)
    sinr_d2d_col = (p_d2d * gains.d2d_link) / (noise + p_bs * gains.bs_to_d2d_rx)
    sinr_d2d = np.broadcast_to(sinr_d2d_col[:, None], sinr_cu.shape).copy()

    cu_rate_shared = shannon_rate(b, sinr_cu)
    d2d_rate = shannon_rate(b, sinr_d2d)
    cu_rate_alone = shannon_rate(b, p_bs * gains.bs_to_cu / noise)

    th_cu = db_to_linear(config.sinr_threshold_cu_db)
    th_d2d = db_to_linear(config.sinr_threshold_d2d_db)
    feasible = (
        (sinr_cu >= th_cu)
        & (sinr_d2d >= th_d2d)
        & (cu_rate_shared + d2d_rate >= cu_rate_alone[None, :])
    )
    return RateReport(
        sinr_cu=sinr_cu,
        sinr_d2d=sinr_d2d,
        cu_rate_shared=cu_rate_shared,
        d2d_rate=d2d_rate,
        cu_rate_alone=cu_rate_alone,
        feasible=feasible,
    )


def cost_matrix_from_rates(rates: RateReport, config: ScenarioConfig) -> np.ndarray:
    """Assemble the n-by-n assignment cost matrix (Mbit/s, negated) from rates."""
    n = config.n_cu
    m = config.m_d2d
    cost = np.empty((n, n), dtype=np.float64)
    alone = -(rates.cu_rate_alone * RATE_SCALE)
    shared = -((rates.cu_rate_shared + rates.d2d_rate) * RATE_SCALE)
    cost[:m] = np.where(rates.feasible, shared, alone[None, :])
    cost[m:] = alone[None, :]
    return cost


def build_cost_matrix(gains: ChannelGains, config: ScenarioConfig) -> np.ndarray:
    """Cost matrix straight from channel gains (rates computed internally)."""
    return cost_matrix_from_rates(compute_rates(gains, config), config)


def evaluate_allocation(rates: RateReport, perm, config: ScenarioConfig) -> float:
    """Total system sum rate (bit/s) achieved by an assignment permutation.

    Row i < m assigned to CU perm[i] contributes R_j + R_i when the pairing is
    feasible and the CU's exclusive rate otherwise; placeholder rows i >= m
    contribute the exclusive rate of their CU. Mirrors the cost-matrix entries
    exactly (same expressions, same exact summation), so for every permutation
    ``evaluate_allocation == -assignment_cost(cost_matrix, perm) * 1e6``
    bit-for-bit.
    """
    n = config.n_cu
    m = config.m_d2d
    from .lsap import as_permutation

    p = as_permutation(perm, n)
    values = []
    for i in range(n):
        j = p[i]
        if i < m and rates.feasible[i, j]:
            values.append((rates.cu_rate_shared[i, j] + rates.d2d_rate[i, j]) * RATE_SCALE)
        else:
            values.append(rates.cu_rate_alone[j] * RATE_SCALE)
    return math.fsum(values) * 1e6


# -- flat key=value serialization ------------------------------------------

_INT_FIELDS = {"n_cu", "m_d2d"}


def config_to_text(config: ScenarioConfig) -> str:
    """Serialize as one key=value line per field (documented keys, SI units)."""
    lines = [f"{f.name}={getattr(config, f.name)!r}" for f in fields(ScenarioConfig)]
    return "\n".join(lines) + "\n"


def config_from_text(text: str) -> ScenarioConfig:
    """Parse the flat key=value form; '#' lines and blank lines are ignored."""
    known = {f.name for f in fields(ScenarioConfig)}
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in known:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = int(raw) if key in _INT_FIELDS else float(raw)
    return ScenarioConfig(**values)


def save_config(config: ScenarioConfig, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(config_to_text(config))


def load_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="ascii") as fh:
        return config_from_text(fh.read())
