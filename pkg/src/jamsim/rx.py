"""Receiver chain: LS estimation, jammer-subspace capture, POS projection, (IAN-)LMMSE.

Every routine broadcasts over leading batch axes. Receive grids use the
layout ``(..., N_s, N_sc, B)``, channels ``(..., B, U)`` per RE.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .grid import GridSpec, demap_llr

EPS = 1e-12
PINV_RCOND = 1e-10


@dataclass(frozen=True, eq=False)
class EqualizerOutput:
    s_hat: np.ndarray  # (..., U), bias-corrected
    eff_noise_var: np.ndarray  # (..., U)


def _h(x):
    return np.conj(np.swapaxes(x, -1, -2))


def ls_estimate_ue(y_grid: np.ndarray, spec: GridSpec, pilot_value=1.0) -> np.ndarray:
    """LS estimate from one-hot pilots: (..., N_sc, B, U)."""
    if len(spec.pilot_symbols) != spec.n_ue:
        raise ValueError("grid lacks a pilot symbol for every UE")
    pil = np.asarray(y_grid)[..., spec.pilot_symbols, :, :]  # (..., U, N_sc, B)
    return np.moveaxis(pil, -3, -1) / pilot_value


def estimate_jammer_basis(y_grid: np.ndarray, spec: GridSpec) -> np.ndarray:
    """Raw receive vectors at the silent symbols: (..., N_sc, B, n_silent)."""
    if spec.n_silent == 0:
        raise ValueError("grid has no silent symbols for jammer estimation")
    sil = np.asarray(y_grid)[..., spec.silent_symbols, :, :]
    return np.moveaxis(sil, -3, -1)


def _range_basis(j_basis: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(J); columns below the relative cutoff are zeroed."""
    j_basis = np.asarray(j_basis)
    B, m = j_basis.shape[-2:]
    if m >= B:
        raise ValueError(f"{m} jammer dimensions would null all {B} receive antennas")
    u, s, _ = np.linalg.svd(j_basis, full_matrices=False)
    keep = s > PINV_RCOND * s[..., :1]
    return u * keep[..., None, :]


def projector(j_basis: np.ndarray) -> np.ndarray:
    """``I - J J^+`` onto the orthogonal complement of span(J), via SVD with a relative cutoff."""
    u = _range_basis(j_basis)
    return np.eye(u.shape[-2]) - u @ _h(u)


def pos_project(y_vec: np.ndarray, j_basis: np.ndarray):
    """Project receive vectors off the jammer subspace; returns (P y, P)."""
    P = projector(j_basis)
    return (P @ np.asarray(y_vec)[..., None])[..., 0], P


def _apply(M, y, grid: bool = False):
    """``M @ y`` over trailing vector dims. With ``grid=True``, M is
    (..., S, F, a, b) and y is (..., T, F, b); a singleton S axis means
    M is shared across symbols and is applied as one matrix product."""
    y = np.asarray(y)
    if grid and M.shape[-4] == 1:
        out = M[..., 0, :, :, :] @ np.moveaxis(y, -3, -1)
        return np.moveaxis(out, -1, -3)
    return (M @ y[..., None])[..., 0]


def _finish(W, h, y, grid: bool = False):
    mu = np.real(np.einsum("...ub,...bu->...u", W, h))
    mu = np.clip(mu, EPS, 1.0)
    s = _apply(W, y, grid) / mu
    eff = np.maximum((1.0 - mu) / mu, 1e-10)
    return EqualizerOutput(s, eff)


def lmmse_weights(h: np.ndarray, n0: float) -> np.ndarray:
    """``H^H (H H^H + (n0 + eps) I)^-1``, computed in the equivalent U x U form."""
    U = h.shape[-1]
    hh = _h(h)
    A = hh @ h + (n0 + EPS) * np.eye(U)
    return np.linalg.solve(A, hh)


def lmmse_equalize(y_vec, h, n0: float, grid: bool = False) -> EqualizerOutput:
    """Jammer-oblivious LMMSE. The output is bias-corrected (divided by
    diag(W H)); its error variance is (1 - mu) / mu per stream."""
    y_vec, h = np.asarray(y_vec), np.asarray(h)
    if h.shape[-2] != y_vec.shape[-1]:
        raise ValueError(f"dimension mismatch: y has {y_vec.shape[-1]} antennas, H has {h.shape[-2]}")
    if n0 < 0:
        raise ValueError("n0 must be non-negative")
    W = lmmse_weights(h, n0)
    return _finish(W, h, y_vec, grid)


def jammer_covariance(*, g=None, jam_power=None, j_basis=None) -> np.ndarray:
    """Spatial jammer covariance from perfect CSI (``jam_power * G G^H``) or silent REs."""
    if j_basis is not None:
        j_basis = np.asarray(j_basis)
        return j_basis @ _h(j_basis) / j_basis.shape[-1]
    g = np.asarray(g)
    return np.asarray(jam_power)[..., None, None] * (g @ _h(g))


def ian_lmmse_equalize(y_vec, h, n0: float, *, g=None, jam_power=None, j_basis=None,
                       c_jam=None, grid: bool = False) -> EqualizerOutput:
    """LMMSE that treats the jammer as spatially colored noise."""
    y_vec, h = np.asarray(y_vec), np.asarray(h)
    B = h.shape[-2]
    if B != y_vec.shape[-1]:
        raise ValueError(f"dimension mismatch: y has {y_vec.shape[-1]} antennas, H has {B}")
    if c_jam is None:
        c_jam = jammer_covariance(g=g, jam_power=jam_power, j_basis=j_basis)
    if c_jam.shape[-1] != B:
        raise ValueError("jammer covariance does not match the receive dimension")
    A = h @ _h(h) + c_jam + (n0 + EPS) * np.eye(B)
    W = _h(np.linalg.solve(A, h))
    return _finish(W, h, y_vec, grid)


MITIGATIONS = ("none", "pos", "ian")
CSI_MODES = ("perfect", "estimated")


def receive_llr(y_grid, spec: GridSpec, n0: float, mitigation: str = "none", csi: str = "estimated", *,
                h_true=None, g_true=None, rho=None, pilot_value=1.0) -> np.ndarray:
    """LLRs (log P0/P1) of every data bit, ordered (ue, symbol, subcarrier, bit).

    ``y_grid`` is (..., N_s, N_sc, B). Perfect CSI needs ``h_true``
    (..., N_s, N_sc, B, U); perfect-CSI mitigation also needs ``g_true``
    (..., N_s, N_sc, B, I), and IAN additionally ``rho`` (..., N_s).
    """
    if mitigation not in MITIGATIONS or csi not in CSI_MODES:
        raise ValueError(f"unknown receiver configuration {mitigation!r}/{csi!r}")
    y_grid = np.asarray(y_grid)
    d = spec.data_symbols
    y = y_grid[..., d, :, :]  # (..., Nd, Nsc, B)

    if csi == "perfect":
        if h_true is None:
            raise ValueError("perfect CSI requires the true UE channel")
        h = np.asarray(h_true)[..., d, :, :, :]
    else:
        h = ls_estimate_ue(y_grid, spec, pilot_value)[..., None, :, :, :]

    if mitigation != "none":
        if csi == "perfect":
            if g_true is None:
                raise ValueError("perfect-CSI mitigation requires the true jammer channel")
            g = np.asarray(g_true)[..., d, :, :, :]
            jb = None
        else:
            jb = estimate_jammer_basis(y_grid, spec)[..., None, :, :, :]

    if mitigation == "pos":
        # P = I - u u^H, applied without forming P
        u = _range_basis(g if csi == "perfect" else jb)
        y = y - _apply(u, _apply(_h(u), y, grid=True), grid=True)
        h = h - u @ (_h(u) @ h)
        out = lmmse_equalize(y, h, n0, grid=True)
    elif mitigation == "ian":
        if csi == "perfect":
            if rho is None:
                raise ValueError("perfect-CSI IAN requires the jammer power allocation")
            rho_d = np.asarray(rho)[..., d]
            c_jam = jammer_covariance(g=g, jam_power=rho_d[..., :, None])
        else:
            c_jam = jammer_covariance(j_basis=jb)
        out = ian_lmmse_equalize(y, h, n0, c_jam=c_jam, grid=True)
    else:
        out = lmmse_equalize(y, h, n0, grid=True)

    # (..., Nd, Nsc, U) -> (..., U, Nd, Nsc)
    s = np.moveaxis(out.s_hat, -1, -3)
    var = np.broadcast_to(np.moveaxis(out.eff_noise_var, -1, -3), s.shape)
    llr = demap_llr(s, var, spec.constellation)
    return llr.reshape(*llr.shape[:-4], -1)


def receive_frame(y_grid, spec: GridSpec, n0: float, mitigation: str = "none", csi: str = "estimated",
                  **kw) -> np.ndarray:
    """Soft bits P(b=1) in (ue, symbol, subcarrier, bit) order."""
    return expit(-receive_llr(y_grid, spec, n0, mitigation, csi, **kw))
