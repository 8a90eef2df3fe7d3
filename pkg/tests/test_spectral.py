import numpy as np
import pytest

from pcakrr import datagen
from pcakrr.datagen import GenConfig
from pcakrr.errors import NumericalError
from pcakrr.kernel import RadialKernel, gram
from pcakrr.pca import fit_pca
from pcakrr.spectral import (
    DiscreteMeasure,
    check_ordering,
    convolve_discrete,
    decay_exponent,
    eigen_ordering_check,
    integral_operator_eigs,
    write_spectrum_csv,
)


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 1)), [0.5, 0.6])
    with pytest.raises(ValueError):
        DiscreteMeasure(np.zeros((2, 1)), [1.5, -0.5])
    with pytest.raises(ValueError):
        DiscreteMeasure.uniform(np.zeros((2, 1)), labels=[1.0])
    m = DiscreteMeasure.normalized(np.zeros((3, 2)), [1, 1, 2])
    np.testing.assert_allclose(m.weights, [0.25, 0.25, 0.5])
    assert (m.size, m.dim) == (3, 2)


def test_single_atom():
    np.testing.assert_allclose(integral_operator_eigs(RadialKernel(), DiscreteMeasure.uniform([[0.3, 0.1]])), [1.0])


@pytest.mark.parametrize("profile", ["gaussian", "wendland_c2", "wendland_c0", "triangle"])
def test_two_atom_closed_form(profile):
    k = RadialKernel(profile)
    for r in (0.0, 0.2, 0.7, 1.5):
        eigs = integral_operator_eigs(k, DiscreteMeasure.uniform([[0.0], [r]]))
        phi = float(k.phi(r))
        np.testing.assert_allclose(eigs, [(1 + phi) / 2, (1 - phi) / 2], atol=1e-15)


def test_uniform_measure_is_scaled_gram(rng):
    xs = rng.normal(size=(25, 3))
    k = RadialKernel("wendland_c2")
    want = np.linalg.eigvalsh(gram(k, xs).entries / 25)[::-1]
    np.testing.assert_allclose(integral_operator_eigs(k, DiscreteMeasure.uniform(xs)), np.clip(want, 0, None), atol=1e-14)


@pytest.mark.parametrize("profile", ["gaussian", "wendland_c2", "wendland_c0"])
def test_trace_conservation(profile, rng):
    k = RadialKernel(profile, 1.4)
    for _ in range(20):
        m = int(rng.integers(1, 40))
        mu = DiscreteMeasure.normalized(rng.normal(size=(m, 3)), rng.uniform(0.1, 1, m))
        eigs = integral_operator_eigs(k, mu)
        assert eigs.sum() == pytest.approx(1.0, abs=1e-8)
        assert np.all(np.diff(eigs) <= 1e-15) and np.all(eigs >= 0)


def test_triangle_not_psd_in_two_dimensions_is_reported():
    # a dense 2-D grid exposes the indefiniteness of the triangle kernel
    g = np.linspace(0, 1.6, 9)
    pts = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    k = RadialKernel("triangle", 1.5)
    if np.linalg.eigvalsh(gram(k, pts).entries).min() < -1e-6:
        with pytest.raises(NumericalError):
            integral_operator_eigs(k, DiscreteMeasure.uniform(pts))


def test_decay_exponent_synthetic():
    n = np.arange(1, 101, dtype=float)
    fit = decay_exponent(n**-2.0)
    assert fit.alpha == pytest.approx(0.5, rel=1e-12) and fit.r_squared == pytest.approx(1.0)
    assert decay_exponent(1 / n, (1, 100)).alpha == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(ValueError):
        decay_exponent([1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])


def test_reduced_spectrum_decays_faster():
    cfg = GenConfig(sample_seed=3)
    xs = datagen.gen_x(cfg, 400)
    k = RadialKernel("gaussian")
    full = integral_operator_eigs(k, DiscreteMeasure.uniform(xs))
    red = integral_operator_eigs(k, DiscreteMeasure.uniform(datagen.true_projection(cfg).reduce(xs)))
    assert decay_exponent(red, (3, 40)).alpha <= decay_exponent(full, (3, 40)).alpha


def test_convolution_examples(rng):
    mu = DiscreteMeasure.normalized(rng.normal(size=(4, 2)), rng.uniform(size=4))
    same = convolve_discrete(mu, DiscreteMeasure.uniform([[0.0, 0.0]]))
    order = np.lexsort(mu.points.T[::-1])
    np.testing.assert_array_equal(same.points, mu.points[order])
    np.testing.assert_allclose(same.weights, mu.weights[order])
    two = DiscreteMeasure([[0.0], [1.0]], [0.25, 0.75])
    prod = convolve_discrete(two, DiscreteMeasure([[0.0], [10.0]], [0.5, 0.5]))
    np.testing.assert_allclose(prod.points.ravel(), [0, 1, 10, 11])
    np.testing.assert_allclose(prod.weights, [0.125, 0.375, 0.125, 0.375])
    merged = convolve_discrete(two, two)
    np.testing.assert_allclose(merged.points.ravel(), [0, 1, 2])
    np.testing.assert_allclose(merged.weights, [1 / 16, 6 / 16, 9 / 16])
    d = convolve_discrete(DiscreteMeasure.uniform([[1.0, 2.0]]), DiscreteMeasure.uniform([[0.5, -1.0]]))
    np.testing.assert_allclose(d.points, [[1.5, 1.0]])


def test_ordering_checker():
    k = RadialKernel()
    mu = DiscreteMeasure.uniform(np.array([[0.0], [0.5], [2.0]]))
    rep = eigen_ordering_check(k, mu, DiscreteMeasure.uniform([[0.0]]))
    np.testing.assert_allclose(rep.sigma_hat, rep.sigma, atol=1e-15)
    # a point mass has spectrum [1]; every spectrum sums to 1, so the
    # ordering against gamma fails unless mu is itself a point mass
    np.testing.assert_allclose(rep.gamma, [1, 0, 0])
    assert not rep.holds and rep.max_violation == pytest.approx(1 - rep.sigma[0])
    point = DiscreteMeasure.uniform([[0.3]])
    assert eigen_ordering_check(k, point, point).holds
    bad = check_ordering([0.6, 0.4], [1.0], [0.4, 0.6])
    assert not bad.holds and bad.max_violation == pytest.approx(0.6)
    with pytest.raises(ValueError):
        eigen_ordering_check("gaussian", mu, mu)


def test_lemma_one_spectrum_transfer(rng):
    q, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    z = rng.normal(size=(40, 2))
    xs = z @ q[:, :2].T
    p = fit_pca(xs, 2)
    for profile in ("gaussian", "wendland_c2", "wendland_c0"):
        k = RadialKernel(profile)
        a = integral_operator_eigs(k, DiscreteMeasure.uniform(xs))
        b = integral_operator_eigs(k, DiscreteMeasure.uniform(p.reduce(xs)))
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_spectrum_csv(tmp_path):
    write_spectrum_csv([0.5, 0.25], tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text() == "index,eigenvalue\n1,0.5\n2,0.25\n"
