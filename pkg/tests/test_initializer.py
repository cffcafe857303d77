import logging

import numpy as np
import pytest

from spikepgd.exceptions import ConfigurationError
from spikepgd.initializer import (
    Grid,
    GridBackProjection,
    backproject,
    backproject_weights_fejer,
    backproject_weights_gaussian,
    grid_energy,
    hard_threshold,
    ideal_backprojection,
    ideal_backprojection_eval,
    make_grid,
)
from spikepgd.kernels import eval_fejer, eval_gaussian
from spikepgd.measure_op import FourierOperator, apply, gaussian_operator, torus_operator
from spikepgd.model import Domain, SpikeTrain
from spikepgd.oracle import l2_norm_fine


def test_grid_euclidean():
    g = make_grid(Domain.euclidean(2, 0.5), 0.1)
    assert np.all(np.linalg.norm(g.nodes, axis=1) <= 0.5 + 1e-12)
    # 10 x 10 cell midpoints; corners outside the disc are dropped
    assert len(g) == 80
    assert np.allclose(np.unique(g.nodes[:, 0]), np.arange(-0.45, 0.46, 0.1))


def test_grid_torus():
    g = make_grid(Domain.torus(2), 0.1)
    assert len(g) == 100
    assert g.step == pytest.approx(0.1)
    g = make_grid(Domain.torus(1), 0.3)
    assert len(g) == 3 and g.step == pytest.approx(1 / 3)


def test_fejer_weights():
    dom = Domain.torus(1)
    A = torus_operator(dom, 3)
    w = backproject_weights_fejer(A, 3)
    assert w[3] == 1.0  # omega = 0
    assert w[6] == pytest.approx(0.25)  # omega = 2 pi * 3
    A2 = FourierOperator(dom, A.freqs, 2 * np.ones(A.m))
    assert np.allclose(backproject_weights_fejer(A2, 3), w / 2)


def test_fejer_weights_reject_off_lattice():
    dom = Domain.torus(1)
    with pytest.raises(ConfigurationError):
        backproject_weights_fejer(torus_operator(dom, 3), 2)
    partial = FourierOperator(dom, [[0.0], [2 * np.pi]])
    with pytest.raises(ConfigurationError):
        backproject_weights_fejer(partial, 1)


def test_gaussian_weights():
    dom = Domain.euclidean(2)
    A = gaussian_operator(dom, 120, 0.05, 0)
    assert np.allclose(backproject_weights_gaussian(A), 1 / 120)
    assert backproject_weights_gaussian(FourierOperator(dom, [[1.0, 0.0]])) == pytest.approx(1.0)
    A = FourierOperator(dom, [[1.0, 0.0], [0.0, 1.0]], [-1.0, 1.0])
    assert np.allclose(backproject_weights_gaussian(A), [-0.5, 0.5])


def test_ideal_backprojection_zero():
    dom = Domain.euclidean(2)
    A = gaussian_operator(dom, 10, 0.1, 0)
    assert ideal_backprojection_eval(np.zeros(10), A, np.ones(10), [0.3, 0.1]) == 0


def test_ideal_backprojection_fejer_single_spike():
    dom = Domain.torus(1)
    A = torus_operator(dom, 6)
    y = apply(A, SpikeTrain(dom, [1.0], [[0.0]]))
    w = backproject_weights_fejer(A, 6)
    t = np.linspace(0, 1, 37)[:, None]
    z = ideal_backprojection(y, A, w, t)
    assert np.allclose(z, eval_fejer(6, t), rtol=0, atol=1e-10 * 7)


def test_ideal_backprojection_gaussian_origin():
    dom = Domain.euclidean(2)
    A = gaussian_operator(dom, 33, 0.05, 3)
    y = apply(A, SpikeTrain(dom, [1.0], [[0.0, 0.0]]))
    z = ideal_backprojection_eval(y, A, backproject_weights_gaussian(A), [0.0, 0.0])
    assert z == pytest.approx(1.0, abs=1e-14)


def test_backproject_matches_pointwise():
    dom = Domain.euclidean(2, 0.3)
    A = gaussian_operator(dom, 25, 0.05, 1)
    rng = np.random.default_rng(0)
    y = rng.normal(size=25) + 1j * rng.normal(size=25)
    w = backproject_weights_gaussian(A)
    grid = make_grid(dom, 0.05)
    z = backproject(y, A, w, grid)
    for i in range(0, len(grid), 7):
        assert z.values[i] == ideal_backprojection_eval(y, A, w, grid.nodes[i])
    assert np.all(backproject(np.zeros(25), A, w, grid).values == 0)


def test_backproject_peak_at_spike():
    dom = Domain.torus(2)
    A = torus_operator(dom, 8)
    y = apply(A, SpikeTrain(dom, [1.0], [[0.0, 0.0]]))
    z = backproject(y, A, backproject_weights_fejer(A, 8), make_grid(dom, 0.02))
    best = z.grid.nodes[np.argmax(np.abs(z.values))]
    assert np.allclose(best, 0.0)


def _bp(values, d=1):
    values = np.asarray(values, dtype=complex)
    nodes = np.arange(values.size, dtype=float)[:, None] * 0.1
    grid = Grid(Domain.euclidean(d, 10.0), 0.1, nodes)
    return GridBackProjection(grid, values)


def test_hard_threshold_examples():
    p = hard_threshold(_bp(np.zeros(5)), 3)
    assert p.amplitudes.tolist() == [0, 0, 0]
    assert np.allclose(p.positions(1).ravel(), [0.0, 0.1, 0.2])

    p = hard_threshold(_bp([0, 0, 2 - 1j, 0]), 1)
    assert p.amplitudes.tolist() == [2.0]
    assert np.allclose(p.positions(1).ravel(), [0.2])

    p = hard_threshold(_bp([3, -5, 1 + 0j]), 2)
    assert p.amplitudes.tolist() == [-5.0, 3.0]
    assert np.allclose(p.positions(1).ravel(), [0.1, 0.0])


def test_hard_threshold_shrinks_k_in(caplog):
    with caplog.at_level(logging.WARNING):
        p = hard_threshold(_bp([1, 2]), 5)
    assert p.k == 2
    assert "exceeds" in caplog.text


def test_hard_threshold_modulus_non_increasing():
    rng = np.random.default_rng(5)
    z = _bp(rng.normal(size=50) + 1j * rng.normal(size=50))
    p = hard_threshold(z, 20)
    idx = np.round(p.positions(1).ravel() / 0.1).astype(int)
    mod = np.abs(z.values[idx])
    assert np.all(np.diff(mod) <= 0)


def test_grid_energy_simple():
    assert grid_energy(_bp(np.zeros(4))) == 0.0
    assert grid_energy(_bp(np.ones(7))) == pytest.approx(7 * 0.1)


def test_grid_energy_converges_1d():
    dom = Domain.euclidean(1, 0.5)
    A = gaussian_operator(dom, 30, 0.05, 2)
    y = apply(A, SpikeTrain(dom, [1.0, -0.6], [[0.0], [0.07]]))
    w = backproject_weights_gaussian(A)
    ref = l2_norm_fine(y, A, w, dom, 1e-4)
    gaps = [abs(grid_energy(backproject(y, A, w, make_grid(dom, e))) - ref) / ref
            for e in (0.04, 0.02, 0.01, 0.005)]
    assert gaps[-1] < 1e-3
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))


def test_gaussian_expectation_single_spike_at_origin():
    # z(0) for delta_0 is exactly 1 for any frequency draw.
    dom = Domain.euclidean(2)
    for seed in range(5):
        A = gaussian_operator(dom, 17, 0.02, seed)
        y = apply(A, SpikeTrain(dom, [1.0], [[0.0, 0.0]]))
        z = ideal_backprojection_eval(y, A, backproject_weights_gaussian(A), [0.0, 0.0])
        assert z == pytest.approx(1.0)
    assert float(eval_gaussian(0.02, [0.0, 0.0])) == 1.0
