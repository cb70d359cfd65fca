import numpy as np
import pytest

from stretchblow.spectral import Grid, derivative, hilbert, neg_identity, riesz_product
from stretchblow.weights import CATALOG, catalog_pair, image_sum, numeric_weight


def interior(grid, frac=0.25):
    x = grid.mesh()
    if not grid.is_line:
        return np.ones(grid.shape, dtype=bool)
    return np.all([np.abs(xi) <= frac * grid.length / 2 for xi in x], axis=0)


def test_burgers_closed_form():
    p = catalog_pair("burgers_line")
    x = np.linspace(-5, 5, 11)
    assert np.allclose(p.w2(x), 1 / (1 + x**2) ** 2)
    assert np.allclose(p.w1(x), 4 * x / (1 + x**2) ** 3)
    assert p.provenance == "closed_form"


def test_clm_pairs():
    x = np.linspace(-3, 3, 7)
    p = catalog_pair("clm_torus")
    assert np.allclose(p.w1(x), -np.sin(x)) and np.allclose(p.w2(x), 1 + np.cos(x))
    q = catalog_pair("clm_line")
    assert np.allclose(q.w1(x), -x / (1 + x**2))


def test_riesz12_torus_has_half():
    p = catalog_pair("riesz12_torus")
    assert p.w1(np.pi / 2, np.pi / 2) == pytest.approx(0.5)


def test_riesz12_plane_is_numeric():
    assert catalog_pair("riesz12_plane").provenance == "numeric"


def test_unknown_pair():
    with pytest.raises(ValueError, match="unknown"):
        catalog_pair("kdv")


@pytest.mark.parametrize("name", ["clm_torus", "riesz12_torus", "burgers_line", "clm_line"])
def test_numeric_adjoint_matches_closed_form(name):
    p = catalog_pair(name)
    w2_fn = p.periodic_w2 or p.w2
    w1_fn = p.periodic_w1 or p.w1
    num = numeric_weight(p.op, w2_fn, p.grid)
    _, w1_num = num.sample()
    exact = np.broadcast_to(w1_fn(*p.grid.mesh()), p.grid.shape)
    mask = interior(p.grid)
    err = np.max(np.abs(w1_num - exact)[mask]) / np.max(np.abs(exact))
    assert err <= 1e-6


def test_burgers_box_example_unperiodized():
    g = Grid.box(4096, 32.0)
    num = numeric_weight(derivative(0, 1), lambda x: 1 / (1 + x**2) ** 2, g)
    _, w1 = num.sample()
    x = g.nodes
    m = np.abs(x) <= 8
    exact = 4 * x / (1 + x**2) ** 3
    assert np.max(np.abs(w1 - exact)[m]) <= 1e-6 * np.max(np.abs(exact))


def test_hilbert_torus_numeric():
    g = Grid.torus(256)
    _, w1 = numeric_weight(hilbert(), lambda x: 1 + np.cos(x), g).sample()
    assert np.max(np.abs(w1 + np.sin(g.nodes))) <= 1e-12


def test_neg_identity_numeric():
    g = Grid.torus(64)
    w2 = lambda x: 2 + np.sin(x) ** 2
    w2v, w1v = numeric_weight(neg_identity(1), w2, g).sample()
    assert np.allclose(w1v, -w2v, atol=1e-14)


def test_numeric_weight_rejects_negative():
    with pytest.raises(ValueError, match="negative"):
        numeric_weight(hilbert(), np.cos, Grid.torus(64))


def test_normalization():
    p = catalog_pair("clm_torus")
    assert p.normalization == pytest.approx(2 * np.pi, rel=1e-14)
    w2, _ = p.sample()
    assert np.sum(w2 / p.normalization) * p.grid.cell_volume == pytest.approx(1.0, abs=1e-8)
    q = catalog_pair("burgers_line")
    assert abs(q.mass_deficit) / q.exact_mass <= 1e-4
    assert q.describe()["box_mass_deficit"] == q.mass_deficit


def test_riesz12_plane_mass_and_sign():
    p = catalog_pair("riesz12_plane", Grid.box(256, 32.0, ndim=2))
    w2, w1 = p.sample()
    assert np.all(w2 >= 0)
    assert p.normalization == pytest.approx(np.pi / 2, rel=1e-3)
    # R1R2 of a radial bump is odd in each coordinate
    mirror = (-np.arange(p.grid.n)) % p.grid.n
    assert np.max(np.abs(w1 + w1[:, mirror])) <= 1e-6 * np.max(np.abs(w1))


def test_image_sum_matches_closed_periodization():
    p = catalog_pair("clm_line", Grid.box(256, 8.0))
    direct = image_sum(lambda x: 1 / (1 + x**2), 16.0, images=20000)
    x = np.linspace(-8, 8, 9)
    assert np.allclose(direct(x), p.periodic_w2(x), rtol=1e-4)


def test_catalog_names():
    assert set(CATALOG) == {"burgers_line", "clm_line", "clm_torus", "riesz12_torus", "riesz12_plane"}
