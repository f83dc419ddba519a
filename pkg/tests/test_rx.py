import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jamsim import rx
from jamsim.grid import build_grid_spec, map_bits, scatter_frame, constellation
from jamsim.rng import crandn

GRID = build_grid_spec(2, 2, 8, 5)


def _grid_rx(H, X, G=None, W=None):
    """(N_s, N_sc, B) receive grid from per-RE channels."""
    y = np.einsum("tfbu,utf->tfb", H, X)
    if G is not None:
        y = y + np.einsum("tfbi,itf->tfb", G, W)
    return y


def _setup(seed=0, B=4):
    rng = np.random.default_rng(seed)
    H = np.broadcast_to(crandn(rng, (1, 5, B, 2)), (8, 5, B, 2))
    G = np.broadcast_to(crandn(rng, (1, 5, B, 1)), (8, 5, B, 1))
    bits = rng.integers(0, 2, GRID.bits_per_frame)
    X = scatter_frame(map_bits(bits, constellation("qpsk")), 1.0, GRID)
    return rng, H, G, bits, X


def test_ls_estimate_noiseless():
    _, H, _, _, X = _setup()
    h_hat = rx.ls_estimate_ue(_grid_rx(H, X), GRID)
    assert np.allclose(h_hat, H[0])
    assert np.allclose(rx.ls_estimate_ue(2 * _grid_rx(H, X), GRID, pilot_value=2.0), H[0])


def test_ls_estimate_pilot_jamming_bias():
    rng, H, G, _, X = _setup(1)
    W = crandn(rng, (1, 8, 5))
    h_hat = rx.ls_estimate_ue(_grid_rx(H, X, G, W), GRID)
    for u, t in enumerate(GRID.pilot_symbols):
        assert np.allclose(h_hat[:, :, u], H[0, :, :, u] + G[0, :, :, 0] * W[0, t][:, None])


def test_jammer_basis():
    rng, H, G, _, X = _setup(2)
    W = crandn(rng, (1, 8, 5))
    jb = rx.estimate_jammer_basis(_grid_rx(H, X, G, W), GRID)
    assert jb.shape == (5, 4, 2)
    # rank-one source: columns collinear
    assert np.all(np.linalg.svd(jb, compute_uv=False)[:, 1] < 1e-12)
    assert np.allclose(rx.estimate_jammer_basis(_grid_rx(H, X), GRID), 0)
    with pytest.raises(ValueError):
        rx.estimate_jammer_basis(_grid_rx(H, X), build_grid_spec(2, 0, 8, 5))


def test_pos_basis_vector():
    jb = np.zeros((5, 1))
    jb[0] = 1
    y = np.arange(1.0, 6.0)
    out, P = rx.pos_project(y, jb)
    assert np.allclose(out, [0, 2, 3, 4, 5])
    with pytest.raises(ValueError):
        rx.projector(np.ones((3, 3)))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 10), st.integers(1, 4), st.integers(0, 10_000))
def test_projector_algebra(B, m, seed):
    m = min(m, B - 1)
    J = crandn(np.random.default_rng(seed), (B, m))
    P = rx.projector(J)
    assert np.allclose(P @ J, 0, atol=1e-12)
    assert np.allclose(P @ P, P, atol=1e-12)
    assert np.allclose(P, P.conj().T, atol=1e-12)
    assert np.linalg.norm(P, 2) <= 1 + 1e-12
    s = np.linalg.svd(P, compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) == B - m


def test_projector_ignores_degenerate_columns():
    rng = np.random.default_rng(5)
    g = crandn(rng, (6, 1))
    J = np.hstack([g, 2j * g, np.zeros((6, 1))])
    s = np.linalg.svd(rx.projector(J), compute_uv=False)
    assert np.sum(s > 1e-6) == 5


def test_lmmse_limits():
    y = np.array([1.0 + 2j, -0.5j])
    out = rx.lmmse_equalize(y, np.eye(2), 1e-14)
    assert np.allclose(out.s_hat, y)
    out = rx.lmmse_equalize(np.array([3.0 + 1j]), np.array([[2.0]]), 1e-14)
    assert np.allclose(out.s_hat, [1.5 + 0.5j])
    with pytest.raises(ValueError):
        rx.lmmse_equalize(y, np.ones((3, 1)), 0.1)


def _direct(H, y, C):
    W = H.conj().T @ np.linalg.inv(H @ H.conj().T + C)
    mu = np.real(np.diag(W @ H))
    return W @ y / mu, (1 - mu) / mu


def test_lmmse_direct_formula():
    rng = np.random.default_rng(6)
    H, y, n0 = crandn(rng, (4, 2)), crandn(rng, 4), 0.4
    s, v = _direct(H, y, (n0 + rx.EPS) * np.eye(4))
    out = rx.lmmse_equalize(y, H, n0)
    assert np.allclose(out.s_hat, s, atol=1e-12)
    assert np.allclose(out.eff_noise_var, v, atol=1e-12)


def test_lmmse_error_variance_is_unbiased():
    # empirical MSE of the bias-corrected estimate equals the reported variance
    rng = np.random.default_rng(7)
    H, n0 = crandn(rng, (3, 2)), 0.5
    s = crandn(rng, (2, 40_000))
    y = H @ s + crandn(rng, (3, 40_000), n0)
    out = rx.lmmse_equalize(y.T, H, n0)
    err = np.mean(np.abs(out.s_hat - s.T) ** 2, axis=0)
    assert np.allclose(err, out.eff_noise_var, rtol=0.03)


def test_ian_reduces_to_lmmse():
    rng = np.random.default_rng(8)
    H, G, y = crandn(rng, (4, 2)), crandn(rng, (4, 1)), crandn(rng, 4)
    a = rx.ian_lmmse_equalize(y, H, 0.3, g=G, jam_power=0.0)
    b = rx.lmmse_equalize(y, H, 0.3)
    assert np.allclose(a.s_hat, b.s_hat, atol=1e-12)
    assert np.allclose(a.eff_noise_var, b.eff_noise_var, atol=1e-12)


def test_ian_direct_formula():
    rng = np.random.default_rng(9)
    H, G, y = crandn(rng, (5, 2)), crandn(rng, (5, 2)), crandn(rng, 5)
    C = 3.0 * G @ G.conj().T + (0.2 + rx.EPS) * np.eye(5)
    s, v = _direct(H, y, C)
    out = rx.ian_lmmse_equalize(y, H, 0.2, g=G, jam_power=3.0)
    assert np.allclose(out.s_hat, s) and np.allclose(out.eff_noise_var, v)
    jb = crandn(rng, (5, 3))
    C = jb @ jb.conj().T / 3 + (0.2 + rx.EPS) * np.eye(5)
    s, _ = _direct(H, y, C)
    assert np.allclose(rx.ian_lmmse_equalize(y, H, 0.2, j_basis=jb).s_hat, s)


def _sinr(W, H, G, n0, jam_power):
    """Per-stream output SINR of linear filter W."""
    sig = np.abs(np.diag(W @ H)) ** 2
    total = np.sum(np.abs(W @ H) ** 2, axis=1) + jam_power * np.sum(np.abs(W @ G) ** 2, axis=1) \
        + n0 * np.sum(np.abs(W) ** 2, axis=1)
    return sig / (total - sig)


def test_ian_strong_jammer_approaches_pos():
    rng = np.random.default_rng(10)
    H, G, n0 = crandn(rng, (6, 2)), crandn(rng, (6, 1)), 0.3
    big = 1e8
    C = big * G @ G.conj().T
    W_ian = H.conj().T @ np.linalg.inv(H @ H.conj().T + C + n0 * np.eye(6))
    P = rx.projector(G)
    W_pos = rx.lmmse_weights(P @ H, n0) @ P
    a, b = _sinr(W_ian, H, G, n0, big), _sinr(W_pos, H, G, n0, big)
    assert np.allclose(a, b, rtol=0.01)


def test_ian_continuous_in_power():
    rng = np.random.default_rng(11)
    H, G, y = crandn(rng, (4, 2)), crandn(rng, (4, 1)), crandn(rng, 4)
    a = rx.ian_lmmse_equalize(y, H, 0.3, g=G, jam_power=1e-9).s_hat
    assert np.allclose(a, rx.lmmse_equalize(y, H, 0.3).s_hat, atol=1e-7)


def test_receive_frame_clean_high_snr():
    rng, H, _, bits, X = _setup(12, B=6)
    H = np.broadcast_to(crandn(rng, (1, 5, 6, 2)), (8, 5, 6, 2))
    y = _grid_rx(H, X) + crandn(rng, (8, 5, 6), 1e-4)
    for csi in ("perfect", "estimated"):
        p = rx.receive_frame(y, GRID, 1e-4, "none", csi, h_true=H)
        assert p.shape == (GRID.bits_per_frame,)
        assert np.array_equal(p > 0.5, bits.astype(bool))


def test_receive_frame_pos_perfect_cancels_jammer():
    rng, H, G, bits, X = _setup(13, B=6)
    H = np.broadcast_to(crandn(rng, (1, 5, 6, 2)), (8, 5, 6, 2))
    G = np.broadcast_to(crandn(rng, (1, 5, 6, 1)), (8, 5, 6, 1))
    W = 100 * crandn(rng, (1, 8, 5))
    y = _grid_rx(H, X, G, W)
    jam = _grid_rx(np.zeros_like(H), X, G, W)
    P = rx.projector(G[0])
    before = np.sum(np.abs(jam) ** 2)
    after = np.sum(np.abs(np.einsum("fbc,tfc->tfb", P, jam)) ** 2)
    assert after / before < 1e-10
    p = rx.receive_frame(y, GRID, 1e-6, "pos", "perfect", h_true=H, g_true=G)
    assert np.array_equal(p > 0.5, bits.astype(bool))
    p_ian = rx.receive_frame(y, GRID, 1e-6, "ian", "perfect", h_true=H, g_true=G, rho=np.full(8, 1e4))
    assert np.array_equal(p_ian > 0.5, bits.astype(bool))


def test_receive_frame_pos_estimated():
    rng, H, G, bits, X = _setup(14, B=6)
    H = np.broadcast_to(crandn(rng, (1, 5, 6, 2)), (8, 5, 6, 2))
    G = np.broadcast_to(crandn(rng, (1, 5, 6, 1)), (8, 5, 6, 1))
    W = 30 * crandn(rng, (1, 8, 5))
    y = _grid_rx(H, X, G, W) + crandn(rng, (8, 5, 6), 1e-6)
    p = rx.receive_frame(y, GRID, 1e-6, "pos", "estimated")
    assert np.array_equal(p > 0.5, bits.astype(bool))
    p_none = rx.receive_frame(y, GRID, 1e-6, "none", "estimated")
    assert np.mean((p_none > 0.5) != bits) > 0.1


def test_receive_frame_errors():
    y = np.zeros((8, 5, 4), dtype=complex)
    with pytest.raises(ValueError):
        rx.receive_frame(y, GRID, 0.1, "pos", "perfect", h_true=np.zeros((8, 5, 4, 2)))
    with pytest.raises(ValueError):
        rx.receive_frame(y, GRID, 0.1, "bogus", "perfect")
