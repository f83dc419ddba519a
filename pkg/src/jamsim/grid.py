"""OFDM resource-grid layout, Gray QAM constellations, bit mapping and soft demapping.

A grid is described per OFDM symbol (the layout is identical on every
subcarrier): silent symbols first, then one one-hot pilot symbol per UE,
then data symbols.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import expit, logsumexp

SILENT = -1
DATA = -2
# kinds >= 0 denote the pilot symbol of that UE

PILOT_VALUE = 1.0 + 0.0j


class InvalidSpecError(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    n_symbols: int
    n_subcarriers: int
    kinds: tuple
    n_ue: int
    modulation: str = "qpsk"

    def __post_init__(self):
        if len(self.kinds) != self.n_symbols:
            raise InvalidSpecError("kinds must have one entry per OFDM symbol")
        if self.n_ue < 1:
            raise InvalidSpecError("n_ue must be >= 1")
        order = {SILENT: 0, DATA: 2}
        ranks = [order.get(k, 1) for k in self.kinds]
        if ranks != sorted(ranks):
            raise InvalidSpecError("symbols must be ordered silent, pilot, data")
        pilots = [k for k in self.kinds if k >= 0]
        if sorted(pilots) != list(range(self.n_ue)):
            raise InvalidSpecError("each UE needs exactly one pilot symbol")
        if DATA not in self.kinds:
            raise InvalidSpecError("grid has no data symbols")

    @cached_property
    def silent_symbols(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.kinds) == SILENT)

    @cached_property
    def data_symbols(self) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.kinds) == DATA)

    @cached_property
    def pilot_symbols(self) -> np.ndarray:
        """Pilot symbol index of each UE, indexed by UE."""
        kinds = list(self.kinds)
        return np.array([kinds.index(u) for u in range(self.n_ue)])

    @property
    def n_silent(self) -> int:
        return len(self.silent_symbols)

    @property
    def n_data(self) -> int:
        return len(self.data_symbols)

    @property
    def constellation(self) -> "Constellation":
        return constellation(self.modulation)

    @property
    def bits_per_frame(self) -> int:
        return self.n_ue * self.n_data * self.n_subcarriers * self.constellation.bits_per_symbol

    def to_dict(self) -> dict:
        return {
            "n_ue": self.n_ue,
            "n_silent": self.n_silent,
            "n_symbols": self.n_symbols,
            "n_subcarriers": self.n_subcarriers,
            "modulation": self.modulation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return build_grid_spec(
            d["n_ue"], d.get("n_silent", 0), d.get("n_symbols", 14), d.get("n_subcarriers", 32),
            modulation=d.get("modulation", "qpsk"),
        )


def build_grid_spec(n_ue: int, n_silent: int, n_symbols: int, n_subcarriers: int,
                    modulation: str = "qpsk") -> GridSpec:
    """Silent symbols, then one-hot pilots for UEs 0..n_ue-1, then data."""
    if n_ue < 1:
        raise InvalidSpecError("n_ue must be >= 1")
    if n_silent < 0 or n_subcarriers < 1:
        raise InvalidSpecError("invalid grid dimensions")
    if n_silent + n_ue >= n_symbols:
        raise InvalidSpecError(
            f"{n_silent} silent + {n_ue} pilot symbols leave no data in {n_symbols} symbols")
    constellation(modulation)
    kinds = (SILENT,) * n_silent + tuple(range(n_ue)) + (DATA,) * (n_symbols - n_silent - n_ue)
    return GridSpec(n_symbols, n_subcarriers, kinds, n_ue, modulation)


@dataclass(frozen=True, eq=False)
class Constellation:
    """Gray-labeled square QAM; ``points[i]`` carries the bits of ``i``, MSB first."""
    name: str
    bits_per_symbol: int
    points: np.ndarray

    @cached_property
    def labels(self) -> np.ndarray:
        """(2^k, k) bit table matching ``points``."""
        k = self.bits_per_symbol
        idx = np.arange(2 ** k)
        return (idx[:, None] >> np.arange(k - 1, -1, -1)) & 1


def _qam_points(k: int) -> np.ndarray:
    # 3GPP TS 38.211 style recursion: even bits drive I, odd bits drive Q
    labels = (np.arange(2 ** k)[:, None] >> np.arange(k - 1, -1, -1)) & 1
    s = 1 - 2 * labels.astype(float)
    # x = s0 (2^{h-1} - s2 (2^{h-2} - s4 (...)))
    half = k // 2
    re = np.zeros(2 ** k)
    im = np.zeros(2 ** k)
    for j in reversed(range(half)):
        amp = 2.0 ** (half - 1 - j)
        re = s[:, 2 * j] * (amp - re)
        im = s[:, 2 * j + 1] * (amp - im)
    pts = re + 1j * im
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


_MODULATIONS = {"qpsk": 2, "16qam": 4, "64qam": 6}
_CACHE: dict = {}


def constellation(name: str) -> Constellation:
    key = name.lower()
    if key not in _MODULATIONS:
        raise InvalidSpecError(f"unknown modulation {name!r}")
    if key not in _CACHE:
        k = _MODULATIONS[key]
        _CACHE[key] = Constellation(key, k, _qam_points(k))
    return _CACHE[key]


def map_bits(bits, c: Constellation) -> np.ndarray:
    """Map a bit array (last axis a multiple of k) to constellation symbols."""
    bits = np.asarray(bits)
    k = c.bits_per_symbol
    if bits.shape[-1] % k:
        raise ValueError(f"bit count {bits.shape[-1]} not divisible by {k}")
    groups = bits.reshape(*bits.shape[:-1], -1, k).astype(np.int64)
    idx = groups @ (1 << np.arange(k - 1, -1, -1))
    return c.points[idx]


def demap_hard(symbols, c: Constellation) -> np.ndarray:
    symbols = np.asarray(symbols)
    nearest = np.argmin(np.abs(symbols[..., None] - c.points) ** 2, axis=-1)
    bits = c.labels[nearest]
    return bits.reshape(*symbols.shape[:-1], -1)


def demap_llr(eq_symbols, eff_noise_var, c: Constellation) -> np.ndarray:
    """Exact per-bit LLRs log P(b=0)/P(b=1) for Gaussian noise; shape (..., k)."""
    y = np.asarray(eq_symbols)
    var = np.asarray(eff_noise_var, dtype=float)
    if np.any(var <= 0):
        raise ValueError("effective noise variance must be positive")
    if c.name == "qpsk":
        scale = 2.0 * np.sqrt(2.0) / var
        return np.stack([scale * y.real, scale * y.imag], axis=-1)
    metric = -np.abs(y[..., None] - c.points) ** 2 / var[..., None]
    out = np.empty(y.shape + (c.bits_per_symbol,))
    for j in range(c.bits_per_symbol):
        zero = c.labels[:, j] == 0
        out[..., j] = logsumexp(metric[..., zero], axis=-1) - logsumexp(metric[..., ~zero], axis=-1)
    return out


def demap_soft(eq_symbols, eff_noise_var, c: Constellation) -> np.ndarray:
    """Posterior P(b=1) per bit, flattened over the trailing symbol axis."""
    llr = demap_llr(eq_symbols, eff_noise_var, c)
    return expit(-llr).reshape(*np.shape(eq_symbols)[:-1], -1) if np.ndim(eq_symbols) else expit(-llr)


def scatter_frame(data_syms, pilot_value, spec: GridSpec) -> np.ndarray:
    """Place per-UE data and one-hot pilots on the (U, N_s, N_sc) grid."""
    data_syms = np.asarray(data_syms)
    want = spec.n_ue * spec.n_data * spec.n_subcarriers
    if data_syms.size != want:
        raise ValueError(f"expected {want} data symbols, got {data_syms.size}")
    grid = np.zeros((spec.n_ue, spec.n_symbols, spec.n_subcarriers), dtype=complex)
    grid[:, spec.data_symbols, :] = data_syms.reshape(spec.n_ue, spec.n_data, spec.n_subcarriers)
    for u, t in enumerate(spec.pilot_symbols):
        grid[u, t, :] = pilot_value
    return grid
