"""Random channels, channel aging, channel application and AWGN.

Frequency-domain channels are stored per resource element with shape
``(N_s, N_sc, B, U)``. Time-domain channels are tapped delay lines with
taps of shape ``(B, U, L)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as _rng


@dataclass(frozen=True, eq=False)
class FlatChannel:
    H: np.ndarray  # (N_s, N_sc, B, U)

    @property
    def n_rx(self) -> int:
        return self.H.shape[-2]

    @property
    def n_tx(self) -> int:
        return self.H.shape[-1]


@dataclass(frozen=True, eq=False)
class TdlChannel:
    taps: np.ndarray  # (B, U, L)
    pdp: np.ndarray  # (L,), sums to one

    @property
    def n_taps(self) -> int:
        return self.taps.shape[-1]


@dataclass(frozen=True)
class NoiseSpec:
    ebn0_db: float
    bits_per_symbol: int = 2
    code_rate: float = 1.0

    @property
    def n0(self) -> float:
        return ebn0_to_n0(self.ebn0_db, self.bits_per_symbol, self.code_rate)


def ebn0_to_n0(ebn0_db: float, bits_per_symbol: int, code_rate: float = 1.0) -> float:
    """Noise variance per RE for unit symbol power."""
    return 1.0 / (bits_per_symbol * code_rate * 10 ** (ebn0_db / 10))


def _check_counts(*counts):
    if any(int(c) < 1 for c in counts):
        raise ValueError("all dimensions must be >= 1")


def draw_flat_rayleigh(B: int, U: int, n_symbols: int, n_subcarriers: int, seed=None, *,
                       rng: np.random.Generator | None = None) -> FlatChannel:
    """i.i.d. CN(0, 1) entries for every resource element."""
    _check_counts(B, U, n_symbols, n_subcarriers)
    rng = rng if rng is not None else np.random.default_rng(seed)
    return FlatChannel(_rng.crandn(rng, (n_symbols, n_subcarriers, B, U)))


def evolve_gauss_markov(ch: FlatChannel, alpha: float) -> FlatChannel:
    """First-order Gauss-Markov aging across OFDM symbols.

    Symbol 0 is kept; the i.i.d. draws of the later symbols serve as the
    innovations, so ``alpha=1`` gives block fading and ``alpha=0`` leaves
    the channel independent per symbol.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    H = np.array(ch.H, copy=True)
    innov = np.sqrt(1.0 - alpha ** 2)
    for t in range(1, H.shape[0]):
        H[t] = alpha * H[t - 1] + innov * ch.H[t]
    return FlatChannel(H)


def exponential_pdp(L: int, decay: float) -> np.ndarray:
    if L < 1 or not decay > 0:
        raise ValueError("need L >= 1 and decay > 0")
    p = np.exp(-np.arange(L) / decay)
    return p / p.sum()


def tdl_from_exponential_pdp(B: int, U: int, L: int, decay: float, seed=None, *,
                             rng: np.random.Generator | None = None) -> TdlChannel:
    _check_counts(B, U, L)
    pdp = exponential_pdp(L, decay)
    rng = rng if rng is not None else np.random.default_rng(seed)
    taps = _rng.crandn(rng, (B, U, L)) * np.sqrt(pdp)
    return TdlChannel(taps, pdp)


def apply_time(ch: TdlChannel, x: np.ndarray) -> np.ndarray:
    """Linear (not circular) convolution, truncated to the input length.

    ``x`` has shape (U, K); the result has shape (B, K).
    """
    x = np.atleast_2d(x)
    if x.shape[-1] < 1:
        raise ValueError("empty input")
    K = x.shape[-1]
    y = np.zeros((ch.taps.shape[0], K), dtype=complex)
    for ell in range(min(ch.n_taps, K)):
        y[:, ell:] += ch.taps[:, :, ell] @ x[:, :K - ell]
    return y


def apply_freq(ch: FlatChannel | np.ndarray, X: np.ndarray) -> np.ndarray:
    """Per-RE ``y = H x``; ``X`` is (U, N_s, N_sc), the result (B, N_s, N_sc)."""
    H = ch.H if isinstance(ch, FlatChannel) else np.asarray(ch)
    X = np.asarray(X)
    if X.ndim != 3 or H.shape[:2] != X.shape[1:] or H.shape[-1] != X.shape[0]:
        raise ValueError(f"shape mismatch: H {H.shape}, X {X.shape}")
    return np.einsum("tfbu,utf->btf", H, X)


def freq_response(ch: TdlChannel, n_fft: int) -> np.ndarray:
    """Per-subcarrier response, shape (n_fft, B, U): DFT of the zero-padded taps."""
    if n_fft < ch.n_taps:
        raise ValueError(f"n_fft={n_fft} shorter than the {ch.n_taps} channel taps")
    return np.moveaxis(np.fft.fft(ch.taps, n=n_fft, axis=-1), -1, 0)


def add_awgn(y: np.ndarray, noise: NoiseSpec | float, seed=None, *,
             rng: np.random.Generator | None = None) -> np.ndarray:
    n0 = noise.n0 if isinstance(noise, NoiseSpec) else float(noise)
    if n0 == 0:
        return np.array(y, copy=True)
    rng = rng if rng is not None else np.random.default_rng(seed)
    return y + _rng.crandn(rng, np.shape(y), n0)
