import numpy as np
import pytest

from spikepgd.initializer import backproject_weights_gaussian
from spikepgd.measure_op import FourierOperator, apply, gaussian_operator
from spikepgd.model import Domain, ParamVector, SpikeTrain, flatten
from spikepgd.optimizer import gradient
from spikepgd.oracle import fd_gradient, l2_norm_fine, match_spikes, mc_backprojection_stats

R2 = Domain.euclidean(2, 0.5)


def test_fd_gradient_zero_residual():
    A = gaussian_operator(R2, 30, 0.1, 0)
    x0 = SpikeTrain(R2, [1.0, 2.0], [[0.0, 0.1], [0.2, -0.1]])
    h = 1e-5
    assert np.linalg.norm(fd_gradient(flatten(x0), A, apply(A, x0), h)) <= 10 * h


def test_fd_gradient_amplitude_coordinate_is_exact_in_h():
    A = gaussian_operator(R2, 20, 0.1, 1)
    theta = ParamVector.from_arrays([0.3, -1.0], [[0.0, 0.1], [0.2, -0.1]])
    y = np.ones(20, dtype=complex)
    g1 = fd_gradient(theta, A, y, 1e-3)[:2]
    g2 = fd_gradient(theta, A, y, 1e-5)[:2]
    assert np.allclose(g1, g2, rtol=1e-7)


def test_fd_error_decays_quadratically():
    rng = np.random.default_rng(3)
    dom = Domain.euclidean(2)
    A = FourierOperator(dom, rng.normal(0, 3, (40, 2)))
    theta = ParamVector.from_arrays(rng.normal(size=3), rng.uniform(-0.5, 0.5, (3, 2)))
    y = rng.normal(size=40) + 1j * rng.normal(size=40)
    g = gradient(theta, A, y)
    e1 = np.linalg.norm(fd_gradient(theta, A, y, 1e-2) - g)
    e2 = np.linalg.norm(fd_gradient(theta, A, y, 5e-3) - g)
    assert e2 / e1 == pytest.approx(0.25, rel=0.05)


def test_mc_empty_and_origin():
    stats = mc_backprojection_stats(SpikeTrain.empty(R2), 0.05, 16, 100, [0.1, 0.0])
    assert stats.mean == 0 and stats.var == 0
    stats = mc_backprojection_stats(SpikeTrain(R2, [1.0], [[0.0, 0.0]]), 0.05, 16, 100, [0.0, 0.0])
    assert stats.mean == pytest.approx(1.0, abs=1e-12)
    assert stats.var == pytest.approx(0.0, abs=1e-24)


def test_mc_single_spike_at_one_sigma():
    sigma, m = 0.05, 20
    stats = mc_backprojection_stats(SpikeTrain(R2, [1.0], [[0.0, 0.0]]), sigma, m, 4000,
                                    [sigma, 0.0], seed=11)
    assert abs(stats.mean - np.exp(-0.5)) <= 5 * stats.stderr_mean
    assert abs(stats.var - (1 - np.exp(-1)) / m) <= 5 * stats.stderr_var


def test_l2_norm_fine_zero_and_cauchy():
    dom = Domain.euclidean(2, 0.3)
    A = gaussian_operator(dom, 12, 0.1, 0)
    w = backproject_weights_gaussian(A)
    assert l2_norm_fine(np.zeros(12), A, w, dom, 0.01) == 0.0
    y = apply(A, SpikeTrain(dom, [1.0], [[0.05, 0.0]]))
    a = l2_norm_fine(y, A, w, dom, 0.002)
    b = l2_norm_fine(y, A, w, dom, 0.001)
    assert abs(a - b) / b < 1e-3


def test_l2_norm_fine_torus_constant():
    dom = Domain.torus(2)
    A = FourierOperator(dom, [[0.0, 0.0]])
    assert l2_norm_fine(np.array([2.0 + 0j]), A, np.array([1.0]), dom, 0.01) == pytest.approx(4.0)


def test_match_spikes():
    truth = SpikeTrain(R2, [1.0, -2.0], [[0.0, 0.0], [0.3, 0.0]])
    res = match_spikes(truth, truth, 0.05)
    assert res.matched == 2 and res.max_pos_err == 0 and res.max_amp_err == 0
    assert match_spikes(SpikeTrain.empty(R2), truth, 0.05).matched == 0
    est = SpikeTrain(R2, [1.1], [[0.02, 0.0]])
    res = match_spikes(est, truth, 0.05)
    assert res.matched == 1
    assert res.max_pos_err == pytest.approx(0.02)
    assert res.max_amp_err == pytest.approx(0.1)


def test_match_spikes_uses_each_estimate_once():
    truth = SpikeTrain(R2, [2.0, 1.0], [[0.0, 0.0], [0.04, 0.0]])
    est = SpikeTrain(R2, [1.5], [[0.02, 0.0]])
    assert match_spikes(est, truth, 0.05).matched == 1
