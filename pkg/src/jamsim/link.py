"""Batched end-to-end link simulation.

A batch of frames is drawn once and then received under any number of
jammer power allocations, so allocations are compared on identical bits,
channels, jammer symbols and noise (common random numbers).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from . import rng as _rng
from .channel import (apply_time, draw_flat_rayleigh, ebn0_to_n0, evolve_gauss_markov, freq_response,
                      tdl_from_exponential_pdp)
from .config import Scenario
from .fec import MinSumDecoder
from .grid import PILOT_VALUE, map_bits, scatter_frame
from .jammer import PowerAllocation, draw_jammer_grid, jam_time
from .ofdm import demodulate, modulate
from .rx import receive_llr


@dataclass(frozen=True, eq=False)
class FrameBatch:
    bits: np.ndarray  # (F, Nb) transmitted bits, (ue, symbol, subcarrier, bit) order
    info: np.ndarray | None  # (F, U * n_cw, K) message bits when coded, UE-major
    y0: np.ndarray | None  # (F, N_s, N_sc, B) signal + noise, frequency-domain path
    jam: np.ndarray | None  # (F, N_s, N_sc, B) jammer receive signal at unit power
    h: np.ndarray  # (F, N_s, N_sc, B, U)
    g: np.ndarray | None  # (F, N_s, N_sc, B, I)
    n0: float
    first_frame: int

    @property
    def n_frames(self) -> int:
        return self.bits.shape[0]


def code_rate(scn: Scenario) -> float:
    code = scn.code
    if code is None:
        return 1.0
    return codewords_per_ue(scn) * code.k / _bits_per_ue(scn)


def n0_for(scn: Scenario, ebn0_db: float) -> float:
    return ebn0_to_n0(ebn0_db, scn.grid.constellation.bits_per_symbol, code_rate(scn))


def _bits_per_ue(scn: Scenario) -> int:
    return scn.grid.bits_per_frame // scn.grid.n_ue


def codewords_per_ue(scn: Scenario) -> int:
    """Each UE encodes its own bits; leftover positions carry uncoded filler."""
    n_cw = _bits_per_ue(scn) // scn.code.n
    if n_cw == 0:
        raise ValueError(f"a UE's {_bits_per_ue(scn)} data bits cannot hold a {scn.code.n}-bit codeword")
    return n_cw


def _frame_bits(scn: Scenario, rng: np.random.Generator):
    nb = scn.grid.bits_per_frame
    code = scn.code
    if code is None:
        return rng.integers(0, 2, nb, dtype=np.int8), None
    U, n_cw = scn.grid.n_ue, codewords_per_ue(scn)
    info = rng.integers(0, 2, (U, n_cw, code.k), dtype=np.int8)
    filler = rng.integers(0, 2, (U, _bits_per_ue(scn) - n_cw * code.n), dtype=np.int8)
    bits = np.concatenate([code.encode(info).reshape(U, -1), filler], axis=1)
    return bits.ravel(), info.reshape(U * n_cw, code.k)


def _tx_grid(scn: Scenario, bits):
    return scatter_frame(map_bits(bits, scn.grid.constellation), PILOT_VALUE, scn.grid)


def draw_frames(scn: Scenario, n_frames: int, ebn0_db: float, seed: int | None = None,
                first_frame: int = 0) -> FrameBatch:
    """Draw a batch of flat-fading frames. Frame ``i`` depends only on (seed, first_frame + i)."""
    if scn.time_domain:
        raise ValueError("time-domain scenarios are simulated per allocation, see simulate_llr")
    seed = scn.seed if seed is None else seed
    gs = scn.grid
    B, U = scn.n_rx, gs.n_ue
    n0 = n0_for(scn, ebn0_db)
    bits, infos, y0s, jams, hs, gss = [], [], [], [], [], []
    for i in range(first_frame, first_frame + n_frames):
        b, info = _frame_bits(scn, _rng.derive(seed, i, _rng.BITS))
        x = _tx_grid(scn, b)
        H = draw_flat_rayleigh(B, U, gs.n_symbols, gs.n_subcarriers, rng=_rng.derive(seed, i, _rng.UE_CHANNEL))
        H = evolve_gauss_markov(H, scn.channel.alpha_ue).H
        y = np.einsum("tfbu,utf->tfb", H, x)
        y = y + np.sqrt(n0) * _rng.crandn(_rng.derive(seed, i, _rng.NOISE), y.shape)
        bits.append(b)
        infos.append(info)
        y0s.append(y)
        hs.append(H)
        if scn.jammed:
            I = scn.jammer.n_antennas
            G = draw_flat_rayleigh(B, I, gs.n_symbols, gs.n_subcarriers, rng=_rng.derive(seed, i, _rng.JAM_CHANNEL))
            G = evolve_gauss_markov(G, scn.channel.alpha_jammer).H
            w = draw_jammer_grid(scn.jammer, PowerAllocation.uniform(1.0, gs.n_symbols), gs,
                                 rng=_rng.derive(seed, i, _rng.JAM_SYMBOLS))
            jams.append(np.einsum("tfbi,itf->tfb", G, w))
            gss.append(G)
    return FrameBatch(
        bits=np.stack(bits),
        info=np.stack(infos) if infos[0] is not None else None,
        y0=np.stack(y0s),
        jam=np.stack(jams) if jams else None,
        h=np.stack(hs),
        g=np.stack(gss) if gss else None,
        n0=n0,
        first_frame=first_frame,
    )


def _receive(scn: Scenario, y, h, g, rho, n0):
    r = scn.receiver
    if g is None and r.mitigation != "none" and r.csi == "perfect":
        # nothing to null or whiten without a jammer
        g = np.zeros(np.shape(h)[:-1] + (1,), dtype=complex)
        rho = np.zeros(np.shape(h)[:-4] + (scn.grid.n_symbols,))
    return receive_llr(y, scn.grid, n0, r.mitigation, r.csi, h_true=h, g_true=g, rho=rho)


def batch_llr(scn: Scenario, fb: FrameBatch, rhos, chunk_frames: int = 256) -> np.ndarray:
    """LLRs (P, F, Nb) of a flat-fading batch under each allocation in ``rhos`` (P, N_s)."""
    rhos = np.atleast_2d(np.asarray(rhos, dtype=float))
    P = rhos.shape[0]
    if fb.jam is None:
        out = _receive(scn, fb.y0, fb.h, None, None, fb.n0)
        return np.broadcast_to(out, (P,) + out.shape)
    per = max(1, chunk_frames // fb.n_frames)
    outs = []
    for p0 in range(0, P, per):
        r = rhos[p0:p0 + per]
        amp = np.sqrt(r)[:, None, :, None, None]
        y = fb.y0[None] + amp * fb.jam[None]
        outs.append(_receive(scn, y, fb.h[None], fb.g[None], r[:, None, :], fb.n0))
    return np.concatenate(outs)


def _time_frame_llr(scn: Scenario, i: int, seed: int, rhos: np.ndarray, n0: float):
    """One time-domain frame under each allocation; returns (bits, info, llr (P, Nb))."""
    gs = scn.grid
    p = scn.ofdm_params
    ch = scn.channel
    B, U, n_sc = scn.n_rx, gs.n_ue, gs.n_subcarriers
    b, info = _frame_bits(scn, _rng.derive(seed, i, _rng.BITS))
    x = modulate(_tx_grid(scn, b), p)  # (U, K)
    ue_ch = tdl_from_exponential_pdp(B, U, ch.L, ch.decay, rng=_rng.derive(seed, i, _rng.UE_CHANNEL))
    y_sig = apply_time(ue_ch, x)
    noise = np.sqrt(n0) * _rng.crandn(_rng.derive(seed, i, _rng.NOISE), y_sig.shape)
    h = np.broadcast_to(freq_response(ue_ch, p.n_fft)[:n_sc], (gs.n_symbols, n_sc, B, U))
    g = None
    if scn.jammed:
        I = scn.jammer.n_antennas
        j_ch = tdl_from_exponential_pdp(B, I, ch.L, ch.decay, rng=_rng.derive(seed, i, _rng.JAM_CHANNEL))
        g = np.broadcast_to(freq_response(j_ch, p.n_fft)[:n_sc], (gs.n_symbols, n_sc, B, I))
    llrs = []
    for rho in rhos:
        y = y_sig + noise
        if scn.jammed:
            pa = PowerAllocation(rho, float(np.mean(rho)))
            jrng = _rng.derive(seed, i, _rng.JAM_SYMBOLS)
            if scn.jammer.time_domain:
                y = y + jam_time(scn.jammer, j_ch, pa, p, n_subcarriers=n_sc, rng=jrng)
            else:
                w = draw_jammer_grid(scn.jammer, pa, gs, rng=jrng)
                y = y + apply_time(j_ch, modulate(w, p))
        Y = np.moveaxis(demodulate(y, p, n_sc), 0, -1)  # (N_s, N_sc, B)
        llrs.append(_receive(scn, Y, h, g, rho, n0))
    return b, info, np.stack(llrs)


@dataclass(frozen=True, eq=False)
class LinkResult:
    bits: np.ndarray  # (F, Nb)
    info: np.ndarray | None  # (F, U * n_cw, K)
    llr: np.ndarray  # (P, F, Nb)


def simulate_llr(scn: Scenario, rhos, n_frames: int, ebn0_db: float, seed: int | None = None,
                 first_frame: int = 0) -> LinkResult:
    seed = scn.seed if seed is None else seed
    rhos = np.atleast_2d(np.asarray(rhos, dtype=float))
    if not scn.time_domain:
        fb = draw_frames(scn, n_frames, ebn0_db, seed, first_frame)
        return LinkResult(fb.bits, fb.info, batch_llr(scn, fb, rhos))
    n0 = n0_for(scn, ebn0_db)
    parts = [_time_frame_llr(scn, i, seed, rhos, n0) for i in range(first_frame, first_frame + n_frames)]
    info = np.stack([q[1] for q in parts]) if parts[0][1] is not None else None
    return LinkResult(np.stack([q[0] for q in parts]), info, np.stack([q[2] for q in parts], axis=1))


def default_rhos(scn: Scenario) -> np.ndarray:
    if not scn.jammed:
        return np.zeros((1, scn.grid.n_symbols))
    return scn.allocation().rho[None]


@dataclass(frozen=True)
class ErrorCounts:
    n_bits: int
    n_bit_errors: int
    n_blocks: int
    n_block_errors: int

    def __add__(self, o):
        return ErrorCounts(self.n_bits + o.n_bits, self.n_bit_errors + o.n_bit_errors,
                           self.n_blocks + o.n_blocks, self.n_block_errors + o.n_block_errors)


def decode(scn: Scenario, res: LinkResult):
    """Run BP on every codeword; returns IterationOutputs with leading (P, F, n_cw)."""
    code = scn.code
    U, n_cw = scn.grid.n_ue, codewords_per_ue(scn)
    llr = res.llr.reshape(*res.llr.shape[:2], U, -1)[..., :n_cw * code.n]
    llr = llr.reshape(*res.llr.shape[:2], U * n_cw, code.n)
    return _decoder(code)(llr, scn.fec.n_iters)


_DECODERS: dict = {}


def _decoder(code):
    if id(code) not in _DECODERS:
        _DECODERS[id(code)] = MinSumDecoder(code)
    return _DECODERS[id(code)]


def count_errors(scn: Scenario, res: LinkResult) -> list[ErrorCounts]:
    """Bit/block error counts per allocation. Blocks are codewords (coded) or frames (uncoded)."""
    out = []
    if scn.code is None:
        err = (res.llr < 0) != res.bits[None].astype(bool)
        for e in err:
            out.append(ErrorCounts(e.size, int(e.sum()), e.shape[0], int(e.any(axis=1).sum())))
        return out
    it = decode(scn, res)
    err = it.hard() != res.info[None]
    for e in err:
        out.append(ErrorCounts(e.size, int(e.sum()), e.shape[0] * e.shape[1], int(e.any(axis=2).sum())))
    return out


def soft_outputs(scn: Scenario, res: LinkResult):
    """(reference bits, soft outputs) for the training loss.

    Uncoded: soft outputs are (P, F, Nb). Coded: (n_iters, P, F, n_cw, K).
    """
    if scn.code is None:
        return res.bits, expit(-res.llr)
    return res.info, decode(scn, res).probs
