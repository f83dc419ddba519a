import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jamsim import learn
from jamsim.config import ReceiverConfig, Scenario
from jamsim.grid import build_grid_spec
from jamsim.jammer import JammerConfig


def small_scenario(rho_max_db=0.0, mitigation="none", csi="estimated", n_ue=1, n_silent=0, n_symbols=8):
    g = build_grid_spec(n_ue, n_silent, n_symbols, 16)
    return Scenario(grid=g, n_rx=4, jammer=JammerConfig(dist="gaussian"), rho_max_db=rho_max_db,
                    receiver=ReceiverConfig(mitigation, csi))


# --- losses ---------------------------------------------------------------

def test_loss_table_values():
    assert abs(learn.loss([1], [0.5], "bce") - np.log(2)) < 1e-12
    assert abs(learn.loss([1], [0.5], "l1") - 0.5) < 1e-12
    assert abs(learn.loss([1], [0.5], "mse") - 0.25) < 1e-12
    assert abs(learn.loss([1, 0], [0.9, 0.2], "l1") - 0.15) < 1e-12
    assert abs(learn.loss([1, 0], [0.9, 0.2], "mse") - 0.025) < 1e-12


def test_loss_exact_match_and_clamp():
    b = np.array([0, 1, 1, 0])
    assert learn.loss(b, b, "l1") == 0 and learn.loss(b, b, "mse") == 0
    bce = learn.loss(b, b.astype(float), "bce")
    assert np.isfinite(bce) and bce < 1e-11


def test_bce_unbounded_l1_bounded():
    assert learn.loss([1], [1e-12], "bce") > 20
    assert learn.loss([1], [0.0], "l1") <= 1
    assert np.isfinite(learn.loss([1], [0.0], "bce"))


def test_loss_errors():
    with pytest.raises(ValueError):
        learn.loss([], [], "l1")
    with pytest.raises(ValueError):
        learn.loss([1], [0.5], "hinge")


@settings(max_examples=60)
@given(st.integers(1, 30).flatmap(lambda n: st.tuples(
    arrays(np.int8, n, elements=st.integers(0, 1)), arrays(float, n, elements=st.floats(0, 1)))))
def test_loss_ranges(bb):
    b, p = bb
    assert 0 <= learn.loss(b, p, "l1") <= 1
    assert 0 <= learn.loss(b, p, "mse") <= learn.loss(b, p, "l1") + 1e-15
    assert learn.loss(b, p, "bce") >= 0


def test_multi_loss_identities():
    b = np.array([1, 0, 1, 1])
    p = np.array([0.8, 0.1, 0.6, 0.9])
    assert learn.multi_loss(b, p[None]) == pytest.approx(learn.loss(b, p), abs=1e-15)
    assert learn.multi_loss(b, np.stack([p] * 5), "bce") == pytest.approx(learn.loss(b, p, "bce"), abs=1e-15)
    two = np.stack([np.array([0.8, 0.2, 0.8, 0.8]), np.array([0.9, 0.1, 0.9, 0.9])])
    assert abs(learn.multi_loss(b, two) - 0.15) < 1e-12
    with pytest.raises(ValueError):
        learn.multi_loss(b, np.zeros((0, 4)))


# --- reparameterization ---------------------------------------------------

def test_reparam_examples():
    pa = learn.reparam_power(np.zeros(14), 0.5)
    assert np.allclose(pa.rho, 0.5)
    th = np.full(14, -10.0)
    th[0] = 10
    rho = learn.reparam_power(th, 0.5).rho
    assert abs(rho[0] - 7.0) < 1e-6 and np.all(rho[1:] < 1e-7)
    with pytest.raises(ValueError):
        learn.reparam_power(np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        learn.reparam_power(np.zeros(3), 1.0, n_symbols=4)


@given(arrays(float, st.integers(1, 20), elements=st.floats(-50, 50)), st.floats(1e-4, 1e3))
def test_reparam_budget_saturated(theta, rho_max):
    rho = learn.reparam_power(theta, rho_max).rho
    assert np.all(rho >= 0)
    assert abs(rho.mean() - rho_max) <= 1e-9 * max(1.0, rho_max)


# --- gradient engine ------------------------------------------------------

def test_fd_quadratic():
    th = np.array([0.3, -1.2, 2.0])
    g = learn.fd_gradient(lambda t: np.sum(t ** 2), th, h=1e-2)
    assert np.allclose(g, 2 * th, atol=1e-6)


@pytest.mark.parametrize("seed", range(3))
def test_fd_matches_analytic(seed):
    rng = np.random.default_rng(seed)
    th = rng.normal(size=6)
    a = rng.normal(size=6)
    A = rng.normal(size=(6, 6))

    def f(t):  # log-sum-exp plus a smooth coupling term
        return np.log(np.sum(np.exp(t))) + np.sin(a @ t) + 0.1 * t @ A @ t

    def grad(t):
        sm = np.exp(t) / np.sum(np.exp(t))
        return sm + np.cos(a @ t) * a + 0.1 * (A + A.T) @ t

    g = learn.fd_gradient(f, th, h=1e-4)
    assert np.linalg.norm(g - grad(th)) <= 1e-5 * np.linalg.norm(grad(th))


def test_fd_batched_equals_pointwise():
    f = lambda t: np.sum(np.cos(t))  # noqa: E731
    th = np.array([0.1, 0.7])
    g1, v1 = learn.fd_gradient(f, th, 1e-3, return_value=True)
    g2, v2 = learn.fd_gradient(lambda P: np.cos(P).sum(1), th, 1e-3, batched=True, return_value=True)
    assert np.allclose(g1, g2, atol=1e-14) and v1 == v2 == f(th)
    with pytest.raises(ValueError):
        learn.fd_gradient(f, th, h=0)


def test_pipeline_step_halving():
    s = small_scenario()
    th = np.random.default_rng(0).normal(0, 0.5, 8)
    g1 = learn.grad_fd(th, s, 16, 1e-2, seed=1)
    g2 = learn.grad_fd(th, s, 16, 5e-3, seed=1)
    assert np.all(np.abs(g1 - g2) <= 0.05 * np.abs(g1))


def test_pipeline_gradient_permutation_equivariance():
    # perfect CSI: data symbols are exchangeable, the pilot symbol (index 0) is not
    s = small_scenario(rho_max_db=10.0, csi="perfect")
    th = np.random.default_rng(0).normal(0, 0.5, 8)
    perm = np.array([0, 3, 2, 1, 5, 4, 7, 6])
    a = learn.grad_fd(th, s, 2048, 1e-2, seed=2)
    b = learn.grad_fd(th[perm], s, 2048, 1e-2, seed=2)[np.argsort(perm)]
    assert np.max(np.abs(a - b)) < 0.15 * np.max(np.abs(a))


def test_eval_pipeline_deterministic_and_zero_power_limit():
    s = small_scenario()
    th = np.linspace(-1, 1, 8)
    assert learn.eval_pipeline(th, s, 8, seed=3) == learn.eval_pipeline(th, s, 8, seed=3)
    tiny = s.replace(rho_max_db=-200.0)
    clean = s.replace(jammer=None, rho_max_db=None)
    a = learn.eval_pipeline(th, tiny, 8, seed=3)
    ref = -learn.loss(*_clean_soft(clean, 8, 3))
    assert abs(a - ref) < 1e-9


def _clean_soft(scn, batch, seed):
    from jamsim import link
    res = link.simulate_llr(scn, np.zeros((1, scn.grid.n_symbols)), batch, 0.0, seed)
    ref, soft = link.soft_outputs(scn, res)
    return ref, soft[0]


def test_eval_pipeline_monotone_in_budget():
    th = np.zeros(8)
    vals = [learn.eval_pipeline(th, small_scenario(db), 32, seed=4) for db in (-10.0, 0.0, 10.0)]
    assert vals[0] > vals[1] > vals[2]


# --- Adam -----------------------------------------------------------------

def test_adam_zero_gradient():
    st0 = learn.AdamState.zeros(3)
    _, th = learn.adam_step(st0, np.ones(3), np.zeros(3))
    assert np.array_equal(th, np.ones(3))


def test_adam_first_step_magnitude():
    st0 = learn.AdamState.zeros(4, lr=1e-3)
    g = np.array([5.0, -0.01, 300.0, -2.0])
    st1, th = learn.adam_step(st0, np.zeros(4), g)
    assert np.allclose(th, -1e-3 * np.sign(g), rtol=1e-5)
    assert st1.t == 1


def test_adam_two_step_trace():
    # f(x, y) = x^2 + 3 y^2, hand-rolled Adam with lr 0.1
    lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
    th = np.array([1.0, -2.0])
    grad = lambda t: np.array([2 * t[0], 6 * t[1]])  # noqa: E731
    m = v = np.zeros(2)
    want = th.copy()
    for t in (1, 2):
        g = grad(want)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        want = want - lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
    st_ = learn.AdamState.zeros(2, lr=lr)
    got = th
    for _ in range(2):
        st_, got = learn.adam_step(st_, got, grad(got))
    assert np.allclose(got, want, atol=1e-10, rtol=0)
    # first step moves each coordinate by lr
    assert np.allclose(learn.adam_step(learn.AdamState.zeros(2, lr=lr), th, grad(th))[1], th - lr * np.sign(th))


def test_adam_shape_mismatch():
    with pytest.raises(ValueError):
        learn.adam_step(learn.AdamState.zeros(3), np.zeros(3), np.zeros(2))


# --- training -------------------------------------------------------------

def test_train_reproducible():
    s = small_scenario(5.0)
    cfg = learn.TrainConfig(steps=3, batch=4, seed=11)
    a, b = learn.train(cfg, s), learn.train(cfg, s)
    assert a.rho_trace == b.rho_trace and a.history == b.history
    assert len(a.history) == 3
    assert abs(a.allocation.rho.mean() - s.rho_max) < 1e-9
    c = learn.train(learn.TrainConfig(steps=3, batch=4, seed=12), s)
    assert c.rho_trace != a.rho_trace


def test_train_config_defaults():
    p = learn.TrainConfig.full_scale()
    assert (p.steps, p.batch, p.lr, p.snr_db) == (5000, 64, 1e-3, 0.0)
    with pytest.raises(ValueError):
        learn.TrainConfig(steps=0)
    with pytest.raises(ValueError):
        learn.train(learn.TrainConfig(steps=1), small_scenario().replace(jammer=None, rho_max_db=None))


def test_coded_pipeline_uses_multi_loss():
    from jamsim.config import FecConfig
    g = build_grid_spec(1, 0, 8, 64)
    s = Scenario(grid=g, n_rx=2, jammer=JammerConfig(dist="gaussian"), rho_max_db=0.0,
                 fec=FecConfig(enabled=True, n_iters=3))
    v = learn.eval_losses(np.zeros((2, 8)), s, 2, seed=0)
    assert v.shape == (2,) and v[0] == v[1] and 0 < v[0] < 1
