"""CP-OFDM modulation with unitary DFT scaling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OfdmParams:
    n_fft: int = 64
    cp_len: int = 8
    n_symbols: int = 14

    def __post_init__(self):
        if not 0 <= self.cp_len < self.n_fft:
            raise ValueError("need 0 <= cp_len < n_fft")

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    @property
    def n_samples(self) -> int:
        return self.n_symbols * self.symbol_len


def modulate(grid: np.ndarray, p: OfdmParams) -> np.ndarray:
    """(..., N_s, N_sc) grid -> (..., N_s * (n_fft + cp_len)) samples.

    Subcarriers occupy bins 0..N_sc-1 of the FFT.
    """
    grid = np.asarray(grid)
    n_sym, n_sc = grid.shape[-2:]
    if n_sc > p.n_fft:
        raise ValueError(f"{n_sc} subcarriers do not fit an FFT of size {p.n_fft}")
    bins = np.zeros(grid.shape[:-1] + (p.n_fft,), dtype=complex)
    bins[..., :n_sc] = grid
    body = np.fft.ifft(bins, axis=-1, norm="ortho")
    sym = np.concatenate([body[..., p.n_fft - p.cp_len:], body], axis=-1)
    return sym.reshape(*grid.shape[:-2], n_sym * p.symbol_len)


def demodulate(samples: np.ndarray, p: OfdmParams, n_subcarriers: int | None = None) -> np.ndarray:
    """Inverse of :func:`modulate`; returns (..., N_s, N_sc)."""
    samples = np.asarray(samples)
    n_sc = p.n_fft if n_subcarriers is None else n_subcarriers
    if samples.shape[-1] % p.symbol_len or samples.shape[-1] // p.symbol_len != p.n_symbols:
        raise ValueError(f"expected {p.n_samples} samples, got {samples.shape[-1]}")
    sym = samples.reshape(*samples.shape[:-1], p.n_symbols, p.symbol_len)[..., p.cp_len:]
    return np.fft.fft(sym, axis=-1, norm="ortho")[..., :n_sc]
