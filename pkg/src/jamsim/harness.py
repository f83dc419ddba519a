"""Monte-Carlo BER/BLER sweeps, interference-rank histograms and the
effectiveness-gain search.

All entry points are pure functions of (scenario, seed): frame ``i`` always
draws from the same derived streams, and parallel work is aggregated in
frame order, so the thread count never changes a result.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import link
from . import rng as _rng
from .channel import apply_time, draw_flat_rayleigh, evolve_gauss_markov, tdl_from_exponential_pdp
from .config import Scenario, db2lin
from .jammer import RankStats, draw_jammer_grid, interference_rank_stats, jam_time
from .ofdm import demodulate, modulate

log = logging.getLogger(__name__)

THREADS_ENV = "JAMSIM_THREADS"
COLUMNS = ("snr_db", "n_bits", "n_bit_errors", "ber", "n_blocks", "n_block_errors", "bler")


def n_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer") from None


def _map_ordered(fn, items):
    items = list(items)
    n = min(n_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as ex:
        return list(ex.map(fn, items))


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    n_bits: int
    n_bit_errors: int
    n_blocks: int
    n_block_errors: int

    @property
    def ber(self) -> float:
        return self.n_bit_errors / self.n_bits if self.n_bits else float("nan")

    @property
    def bler(self) -> float:
        return self.n_block_errors / self.n_blocks if self.n_blocks else float("nan")

    def as_tuple(self):
        return (self.snr_db, self.n_bits, self.n_bit_errors, self.ber, self.n_blocks, self.n_block_errors, self.bler)


@dataclass
class SweepResult:
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in self.rows:
            t = r.as_tuple()
            w.writerow([repr(float(t[0]))] + [str(t[1]), str(t[2]), repr(float(t[3]))]
                       + [str(t[4]), str(t[5]), repr(float(t[6]))])
        return buf.getvalue()

    @property
    def ber(self) -> np.ndarray:
        return np.array([r.ber for r in self.rows])

    @property
    def bler(self) -> np.ndarray:
        return np.array([r.bler for r in self.rows])


def _counts(scn: Scenario, rhos, ebn0_db: float, seed: int, first: int, n: int) -> list:
    res = link.simulate_llr(scn, rhos, n, ebn0_db, seed, first)
    return link.count_errors(scn, res)


def run_ber_sweep(scenario: Scenario, snr_list, min_errors: int = 100, max_frames: int = 2000,
                  frames_per_chunk: int = 32, seed: int | None = None, rho=None) -> SweepResult:
    """BER/BLER per Eb/N0 point.

    Frames are simulated in chunks until ``min_errors`` bit errors or
    ``max_frames`` frames. The stopping test runs after each chunk in
    order, so the result does not depend on how chunks were scheduled.
    ``rho`` overrides the scenario's jammer allocation.
    """
    snr_list = list(snr_list)
    if not snr_list:
        raise ValueError("snr_list is empty")
    if min_errors < 1 or max_frames < 1 or frames_per_chunk < 1:
        raise ValueError("min_errors, max_frames and frames_per_chunk must be >= 1")
    seed = scenario.seed if seed is None else seed
    rhos = link.default_rhos(scenario) if rho is None else np.atleast_2d(np.asarray(rho, dtype=float))
    if rhos.shape != (1, scenario.grid.n_symbols):
        raise ValueError(f"rho must have {scenario.grid.n_symbols} entries")
    if scenario.code is not None:
        link.codewords_per_ue(scenario)  # raises before simulating if a codeword does not fit
    out = SweepResult()
    wave = n_threads()
    for snr in snr_list:
        total = link.ErrorCounts(0, 0, 0, 0)
        frames, done = 0, False
        while not done:
            starts = [frames + k * frames_per_chunk for k in range(wave)]
            starts = [s for s in starts if s < max_frames]
            parts = _map_ordered(
                lambda s: _counts(scenario, rhos, snr, seed, s, min(frames_per_chunk, max_frames - s))[0], starts)
            for s, c in zip(starts, parts):
                total = total + c
                frames = s + min(frames_per_chunk, max_frames - s)
                if total.n_bit_errors >= min_errors or frames >= max_frames:
                    done = True
                    break
        log.info("Eb/N0 %.2f dB: %d frames, BER %.3e", snr, frames, total.n_bit_errors / total.n_bits)
        out.rows.append(SweepRow(float(snr), total.n_bits, total.n_bit_errors, total.n_blocks, total.n_block_errors))
    return out


def compare_ber(scenario: Scenario, rhos, snr_db: float, n_frames: int, seed: int | None = None,
                frames_per_chunk: int = 64) -> list:
    """Error counts of several allocations on the same ``n_frames`` frames."""
    seed = scenario.seed if seed is None else seed
    rhos = np.atleast_2d(np.asarray(rhos, dtype=float))
    starts = list(range(0, n_frames, frames_per_chunk))
    parts = _map_ordered(
        lambda s: _counts(scenario, rhos, snr_db, seed, s, min(frames_per_chunk, n_frames - s)), starts)
    totals = [link.ErrorCounts(0, 0, 0, 0)] * len(rhos)
    for p in parts:
        totals = [a + b for a, b in zip(totals, p)]
    return totals


def ber_ratio(scenario: Scenario, learned_rho, snr_db: float, n_frames: int, seed: int | None = None) -> dict:
    """BER of a learned allocation against the equal-budget uniform barrage."""
    learned_rho = np.asarray(learned_rho, dtype=float)
    uniform = np.full_like(learned_rho, learned_rho.mean())
    a, b = compare_ber(scenario, np.stack([learned_rho, uniform]), snr_db, n_frames, seed)
    return {"ber_learned": a.n_bit_errors / a.n_bits, "ber_uniform": b.n_bit_errors / b.n_bits,
            "errors_learned": a.n_bit_errors, "errors_uniform": b.n_bit_errors, "n_bits": a.n_bits,
            "ratio": (a.n_bit_errors / b.n_bit_errors) if b.n_bit_errors else float("inf")}


# --- interference rank -----------------------------------------------------

def _jammer_only(scn: Scenario, i: int, seed: int) -> np.ndarray:
    """Noise-free jammer receive snapshots of frame ``i``: (N_sc, B, N_s)."""
    gs, ch = scn.grid, scn.channel
    B, I = scn.n_rx, scn.jammer.n_antennas
    pa = scn.allocation()
    jrng = _rng.derive(seed, i, _rng.JAM_SYMBOLS)
    if scn.time_domain:
        p = scn.ofdm_params
        j_ch = tdl_from_exponential_pdp(B, I, ch.L, ch.decay, rng=_rng.derive(seed, i, _rng.JAM_CHANNEL))
        if scn.jammer.time_domain:
            x = jam_time(scn.jammer, j_ch, pa, p, n_subcarriers=gs.n_subcarriers, rng=jrng)
        else:
            x = apply_time(j_ch, modulate(draw_jammer_grid(scn.jammer, pa, gs, rng=jrng), p))
        Y = demodulate(x, p, gs.n_subcarriers)  # (B, N_s, N_sc)
    else:
        G = draw_flat_rayleigh(B, I, gs.n_symbols, gs.n_subcarriers, rng=_rng.derive(seed, i, _rng.JAM_CHANNEL))
        G = evolve_gauss_markov(G, ch.alpha_jammer).H
        w = draw_jammer_grid(scn.jammer, pa, gs, rng=jrng)
        Y = np.einsum("tfbi,itf->btf", G, w)
    return np.transpose(Y, (2, 0, 1))


def run_rank_hist(scenario: Scenario, n_realizations: int, seed: int | None = None) -> RankStats:
    """Singular-value energy fractions of the jammer interference, pooled over
    realizations and subcarriers. Snapshots are the frame's OFDM symbols."""
    if scenario.jammer is None:
        raise ValueError("rank histogram needs a jammer")
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    seed = scenario.seed if seed is None else seed
    parts = _map_ordered(lambda i: interference_rank_stats(_jammer_only(scenario, i, seed)), range(n_realizations))
    return RankStats(np.concatenate([p.fractions for p in parts]), np.concatenate([p.flagged for p in parts]))


def rank_summary(stats: RankStats, bins: int = 20, tol: float = 1e-6) -> dict:
    valid = ~stats.flagged
    rank = stats.numerical_rank(tol)[valid]
    resid = stats.residual_after_nulling(1)[valid]
    out = {
        "n_samples": int(stats.fractions.shape[0]),
        "n_flagged": int(stats.flagged.sum()),
        "median_rank": float(np.median(rank)) if rank.size else 0.0,
        "median_residual_after_1_null": float(np.median(resid)) if resid.size else 0.0,
        "mean_fractions": (stats.fractions[valid].mean(axis=0) if rank.size
                           else np.zeros(stats.fractions.shape[1])).tolist(),
    }
    out.update(stats.histograms(bins))
    return out


# --- effectiveness gain ----------------------------------------------------

class BracketError(ValueError):
    def __init__(self, lo_db, hi_db, ber_lo, ber_hi, target):
        super().__init__(f"search range [{lo_db}, {hi_db}] dB does not bracket BER {target:.4e}: "
                         f"BER({lo_db} dB) = {ber_lo:.4e}, BER({hi_db} dB) = {ber_hi:.4e}")
        self.ber_lo, self.ber_hi = ber_lo, ber_hi


def effectiveness_gain(learned_rho, scenario: Scenario, target_snr: float, search_range_db=(-30.0, 30.0),
                       n_frames: int = 256, seed: int | None = None, tol_db: float = 0.25,
                       max_iter: int = 20) -> dict:
    """Uniform-barrage power giving the same BER as ``learned_rho``.

    Every evaluation reuses the same frames, so BER(barrage power) is a
    deterministic curve and bisection on it is well posed.
    """
    learned_rho = np.asarray(learned_rho, dtype=float)
    if learned_rho.shape != (scenario.grid.n_symbols,):
        raise ValueError(f"learned rho must have {scenario.grid.n_symbols} entries")
    budget = float(learned_rho.mean())
    if not budget > 0:
        raise ValueError("learned allocation has no power")
    seed = scenario.seed if seed is None else seed
    n_s = scenario.grid.n_symbols
    lo, hi = map(float, search_range_db)
    if not lo < hi:
        raise ValueError("search range must be increasing")

    def ber(rhos):
        return [c.n_bit_errors / c.n_bits for c in compare_ber(scenario, rhos, target_snr, n_frames, seed)]

    target, b_lo, b_hi = ber(np.stack([learned_rho, np.full(n_s, db2lin(lo)), np.full(n_s, db2lin(hi))]))
    if not b_lo <= target <= b_hi:
        raise BracketError(lo, hi, b_lo, b_hi, target)
    it = 0
    while hi - lo > tol_db and it < max_iter:
        mid = 0.5 * (lo + hi)
        b = ber(np.full((1, n_s), db2lin(mid)))[0]
        if b < target:
            lo = mid
        else:
            hi = mid
        it += 1
    eq = 0.5 * (lo + hi)
    budget_db = float(10 * np.log10(budget))
    return {"equivalent_power_db": eq, "budget_db": budget_db, "gain_db": eq - budget_db,
            "ber_learned": target, "iterations": it, "bracket_db": [lo, hi]}
