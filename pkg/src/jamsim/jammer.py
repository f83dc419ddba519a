"""Jammer signal generation in the frequency and time domain, and interference-rank analysis."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng as _rng
from .channel import TdlChannel, apply_freq, apply_time
from .grid import DATA, SILENT, GridSpec, constellation
from .ofdm import OfdmParams, modulate

FREQ_KINDS = ("barrage", "pilot", "data", "sparse_symbols", "sparse_subcarriers")
TIME_KINDS = ("time_barrage",)
DISTS = ("uniform_disk", "gaussian", "qam")


class WrongDomainError(ValueError):
    pass


@dataclass(frozen=True)
class PowerAllocation:
    """Per-OFDM-symbol jammer powers, linear scale relative to the average UE."""
    rho: np.ndarray
    rho_max: float

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        object.__setattr__(self, "rho", rho)
        if np.any(rho < 0):
            raise ValueError("jammer powers must be non-negative")
        if rho.mean() > self.rho_max + 1e-9:
            raise ValueError(f"mean power {rho.mean():.6g} exceeds budget {self.rho_max:.6g}")

    @classmethod
    def uniform(cls, rho_max: float, n_symbols: int) -> "PowerAllocation":
        return cls(np.full(n_symbols, float(rho_max)), float(rho_max))


@dataclass(frozen=True)
class JammerConfig:
    kind: str = "barrage"
    dist: str = "uniform_disk"
    n_antennas: int = 1
    qam: str = "qpsk"
    symbols: tuple = field(default_factory=tuple)
    subcarriers: tuple = field(default_factory=tuple)
    cp_compliant: bool = True

    def __post_init__(self):
        if self.kind not in FREQ_KINDS + TIME_KINDS:
            raise ValueError(f"unknown jammer kind {self.kind!r}")
        if self.dist not in DISTS:
            raise ValueError(f"unknown jammer distribution {self.dist!r}")
        if self.n_antennas < 1:
            raise ValueError("jammer needs at least one antenna")
        if self.kind == "sparse_symbols" and not self.symbols:
            raise ValueError("sparse_symbols jammer needs a non-empty symbol set")
        if self.kind == "sparse_subcarriers" and not self.subcarriers:
            raise ValueError("sparse_subcarriers jammer needs a non-empty subcarrier set")

    @property
    def time_domain(self) -> bool:
        return self.kind in TIME_KINDS


def draw_symbols(dist: str, shape, rng: np.random.Generator, qam: str = "qpsk") -> np.ndarray:
    """Unit-average-power jammer symbols."""
    shape = tuple(np.atleast_1d(shape))
    if dist == "gaussian":
        return _rng.crandn(rng, shape)
    if dist == "uniform_disk":
        # E|w|^2 = r^2 / 2 for a uniform disk of radius r
        r = np.sqrt(2.0) * np.sqrt(rng.random(shape))
        return r * np.exp(2j * np.pi * rng.random(shape))
    if dist == "qam":
        pts = constellation(qam).points
        return pts[rng.integers(len(pts), size=shape)]
    raise ValueError(f"unknown jammer distribution {dist!r}")


def target_mask(cfg: JammerConfig, spec: GridSpec) -> np.ndarray:
    """Boolean (N_s, N_sc) mask of the REs the jammer transmits on."""
    kinds = np.asarray(spec.kinds)
    mask = np.zeros((spec.n_symbols, spec.n_subcarriers), dtype=bool)
    if cfg.kind == "barrage":
        mask[:] = True
    elif cfg.kind == "pilot":
        mask[kinds != DATA] = True
    elif cfg.kind == "data":
        mask[kinds == DATA] = True
    elif cfg.kind == "sparse_symbols":
        idx = np.asarray(cfg.symbols)
        if idx.min() < 0 or idx.max() >= spec.n_symbols:
            raise ValueError("sparse symbol index outside the grid")
        mask[idx] = True
    elif cfg.kind == "sparse_subcarriers":
        idx = np.asarray(cfg.subcarriers)
        if idx.min() < 0 or idx.max() >= spec.n_subcarriers:
            raise ValueError("sparse subcarrier index outside the grid")
        mask[:, idx] = True
    else:
        raise WrongDomainError(f"{cfg.kind} is not a frequency-domain jammer")
    return mask


def draw_jammer_grid(cfg: JammerConfig, pa: PowerAllocation, spec: GridSpec, seed=None, *,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Jammer transmit grid (I, N_s, N_sc); RE (t, f) has power rho[t] inside the mask."""
    if cfg.time_domain:
        raise WrongDomainError("time-domain jammers are generated with jam_time")
    rng = rng if rng is not None else np.random.default_rng(seed)
    mask = target_mask(cfg, spec)
    w = draw_symbols(cfg.dist, (cfg.n_antennas, spec.n_symbols, spec.n_subcarriers), rng, cfg.qam)
    return w * mask * np.sqrt(pa.rho)[:, None]


def superimpose_freq(y_grid: np.ndarray, g_jam, w_grid: np.ndarray) -> np.ndarray:
    """``y + G w`` per RE, with y as (B, N_s, N_sc) and G as (N_s, N_sc, B, I)."""
    jam = apply_freq(g_jam, w_grid)
    if jam.shape != np.shape(y_grid):
        raise ValueError(f"shape mismatch: y {np.shape(y_grid)}, jammer {jam.shape}")
    return y_grid + jam


def jam_time(cfg: JammerConfig, j_ch: TdlChannel, pa: PowerAllocation, p: OfdmParams, seed=None, *,
             n_subcarriers: int | None = None, rng: np.random.Generator | None = None) -> np.ndarray:
    """Received time-domain jammer interference, (B, N_s * (n_fft + cp_len)).

    A CP-compliant jammer sends OFDM symbols aligned with the frame. A
    CP-violating jammer sends a continuous i.i.d. stream whose power during
    the span of symbol t matches the compliant jammer's power there.
    """
    if not cfg.time_domain:
        raise WrongDomainError(f"{cfg.kind} is not a time-domain jammer")
    rng = rng if rng is not None else np.random.default_rng(seed)
    n_sc = p.n_fft if n_subcarriers is None else n_subcarriers
    I = cfg.n_antennas
    if cfg.cp_compliant:
        w = draw_symbols(cfg.dist, (I, p.n_symbols, n_sc), rng, cfg.qam) * np.sqrt(pa.rho)[:, None]
        x = modulate(w, p)
    else:
        scale = np.repeat(np.sqrt(pa.rho * n_sc / p.n_fft), p.symbol_len)
        x = draw_symbols(cfg.dist, (I, p.n_samples), rng, cfg.qam) * scale
    return apply_time(j_ch, x)


@dataclass(frozen=True, eq=False)
class RankStats:
    fractions: np.ndarray  # (n_sc, B), descending per row
    flagged: np.ndarray  # (n_sc,), True where no interference energy was observed

    def numerical_rank(self, tol: float = 1e-6) -> np.ndarray:
        return np.sum(self.fractions > tol, axis=-1)

    def residual_after_nulling(self, n_null: int = 1) -> np.ndarray:
        """Fraction of interference power left after nulling the strongest dimensions."""
        return self.fractions[:, n_null:].sum(axis=-1)

    def histograms(self, bins: int = 20) -> dict:
        edges = np.linspace(0.0, 1.0, bins + 1)
        valid = self.fractions[~self.flagged]
        counts = [np.histogram(valid[:, d], bins=edges)[0] for d in range(self.fractions.shape[1])]
        n = max(len(valid), 1)
        return {"edges": edges.tolist(), "density": [(c / n).tolist() for c in counts]}


def interference_rank_stats(samples: np.ndarray, threshold: float = 1e-20) -> RankStats:
    """Ordered singular-value energy fractions per subcarrier.

    ``samples`` is (n_sc, B, n): n interference snapshots at each subcarrier.
    Subcarriers whose total energy is below ``threshold`` are flagged and
    reported as all-zero.
    """
    samples = np.asarray(samples)
    if samples.ndim == 2:
        samples = samples[None]
    _, B, n = samples.shape
    if n < B:
        raise ValueError(f"need at least {B} snapshots per subcarrier, got {n}")
    sv = np.linalg.svd(samples, compute_uv=False)
    energy = sv ** 2
    total = energy.sum(axis=-1)
    flagged = total <= threshold
    fractions = np.where(flagged[:, None], 0.0, energy / np.where(flagged, 1.0, total)[:, None])
    return RankStats(fractions, flagged)
