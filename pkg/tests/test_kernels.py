import numpy as np
import pytest

from spikepgd.exceptions import ConfigurationError
from spikepgd.kernels import (
    Kernel,
    eval_fejer,
    eval_fejer_sum,
    eval_gaussian,
    fejer_coeff,
    kernel_distance,
    kernel_norm_sq,
)
from spikepgd.model import Domain, SpikeTrain


def test_gaussian_values():
    assert eval_gaussian(0.3, [0.0, 0.0]) == 1.0
    assert eval_gaussian(0.3, [0.3]) == pytest.approx(np.exp(-0.5), rel=1e-15)
    assert eval_gaussian(0.3, [0.0, 1.5]) == pytest.approx(3.726653172078671e-06, rel=1e-12)


def test_fejer_values():
    assert eval_fejer(3, [0.0]) == pytest.approx(4.0)
    assert eval_fejer(3, [0.0, 0.0]) == pytest.approx(16.0)
    assert eval_fejer(1, [0.5]) == pytest.approx(0.0, abs=1e-15)


def test_fejer_forms_agree():
    rng = np.random.default_rng(0)
    for f_max, d in [(1, 1), (3, 1), (10, 1), (4, 2), (2, 3)]:
        t = rng.uniform(0, 1, (1000, d))
        assert np.allclose(eval_fejer(f_max, t), eval_fejer_sum(f_max, t), rtol=0, atol=1e-12)
    # near-integer arguments where the closed form is singular
    t = np.array([[0.0], [1e-9], [1.0 - 1e-9], [1.0]])
    assert np.allclose(eval_fejer(5, t), eval_fejer_sum(5, t), atol=1e-12)


def test_fejer_coeff():
    assert fejer_coeff(3, [0]) == 1.0
    assert fejer_coeff(3, [3]) == pytest.approx(0.25)
    assert fejer_coeff(1, [2]) == 0.0
    assert fejer_coeff(2, [1, -2]) == pytest.approx((2 / 3) * (1 / 3))


@pytest.mark.parametrize("K", [Kernel.gaussian(0.1, 2), Kernel.fejer(4, 2)])
def test_kernel_peak_and_even(K):
    rng = np.random.default_rng(1)
    t = rng.uniform(-1, 1, (500, 2))
    assert np.all(np.abs(K(t)) <= K.peak + 1e-12)
    assert np.allclose(K(t), K(-t))
    assert K(np.zeros(2)) == pytest.approx(K.peak)


def test_norm_examples():
    dom = Domain.euclidean(2)
    K = Kernel.gaussian(0.05, 2)
    assert kernel_norm_sq(SpikeTrain.empty(dom), K) == 0.0
    assert kernel_norm_sq(SpikeTrain(dom, [2.0], [[0.1, 0.2]]), K) == pytest.approx(4.0)
    assert kernel_norm_sq(SpikeTrain(dom, [1.0, -1.0], [[0.1, 0.2], [0.1, 0.2]]), K) == 0.0


def test_distance_examples():
    dom = Domain.euclidean(2)
    K = Kernel.gaussian(0.01, 2)
    d0 = SpikeTrain(dom, [1.0], [[0.0, 0.0]])
    assert kernel_distance(d0, d0, K) == 0.0
    assert kernel_distance(d0, SpikeTrain.empty(dom), K) == pytest.approx(1.0)
    far = SpikeTrain(dom, [1.0], [[0.5, 0.0]])
    assert kernel_distance(d0, far, K) == pytest.approx(np.sqrt(2), abs=1e-6)


def test_norm_domain_checks():
    with pytest.raises(ConfigurationError):
        kernel_norm_sq(SpikeTrain(Domain.euclidean(1), [1.0], [[0.0]]), Kernel.fejer(2, 1))
    with pytest.raises(ConfigurationError):
        kernel_norm_sq(SpikeTrain(Domain.euclidean(1), [1.0], [[0.0]]), Kernel.gaussian(1.0, 2))


def test_torus_norm_uses_wrapped_distance():
    dom = Domain.torus(1)
    K = Kernel.fejer(6, 1)
    x = SpikeTrain(dom, [1.0, 1.0], [[0.02], [0.98]])
    expected = 2 * K.peak + 2 * eval_fejer(6, [0.04])
    assert kernel_norm_sq(x, K) == pytest.approx(float(expected))


@pytest.mark.parametrize("K,dom", [
    (Kernel.gaussian(0.07, 2), Domain.euclidean(2)),
    (Kernel.fejer(5, 2), Domain.torus(2)),
    (Kernel.fejer(3, 1), Domain.torus(1)),
])
def test_psd_and_symmetry(K, dom):
    rng = np.random.default_rng(2)
    for _ in range(200):
        k1, k2 = rng.integers(0, 6, 2)
        lo, hi = (0, 1) if dom.is_torus else (-0.5, 0.5)
        x1 = SpikeTrain(dom, rng.normal(size=k1), rng.uniform(lo, hi, (k1, dom.d)))
        x2 = SpikeTrain(dom, rng.normal(size=k2), rng.uniform(lo, hi, (k2, dom.d)))
        diff = x1 - x2
        scale = np.sum(np.abs(diff.amplitudes)) ** 2 * K.peak
        assert kernel_norm_sq(diff, K) >= -1e-10 * scale
        assert kernel_distance(x1, x2, K) == pytest.approx(kernel_distance(x2, x1, K), abs=1e-12)
