import numpy as np
import pytest
import scipy.fft as sfft
from hypothesis import given, strategies as st

from stretchblow.spectral import (DimensionMismatch, Grid, MultiplierOp, SpectralField, adjoint,
                                  apply_multiplier, compose, derivative, hilbert, inner_product,
                                  l2_norm, neg_identity, operator_by_name, random_field, riesz,
                                  riesz_product, zero_operator)

T1 = Grid.torus(256)
T2 = Grid.torus(64, ndim=2)
seeds = st.integers(0, 2**32 - 1)


def catalog(ndim):
    if ndim == 1:
        return [derivative(0, 1), hilbert(), neg_identity(1), zero_operator(1)]
    return [derivative(0, 2), derivative(1, 2), riesz(1), riesz(2), riesz_product(1, 2),
            riesz_product(1, 1), riesz_product(2, 2), neg_identity(2)]


def field(grid, f):
    return SpectralField.from_function(grid, f)


def test_grid_rejects_odd_or_tiny():
    with pytest.raises(ValueError):
        Grid.torus(7)
    with pytest.raises(ValueError):
        Grid.torus(2)


def test_grid_spacing_and_box_nodes():
    g = Grid.box(64, 8.0)
    assert g.spacing == pytest.approx(0.25)
    assert g.nodes[0] == -8.0 and g.nodes[-1] == pytest.approx(8.0 - 0.25)


def test_roundtrip_and_conjugate_symmetry(rng):
    f = random_field(T2, rng, below_nyquist=False)
    back = sfft.ifftn(f.coefficients).real
    assert np.max(np.abs(back - f.values)) <= 1e-12 * f.sup_norm()
    c = f.coefficients
    mirror = np.roll(np.flip(c, axis=(0, 1)), 1, axis=(0, 1))
    assert np.allclose(mirror, np.conj(c), atol=1e-10)


def test_nonfinite_values_rejected():
    with pytest.raises(ValueError):
        SpectralField(T1, np.full(T1.shape, np.nan))


def test_derivative_of_sin():
    out = apply_multiplier(field(T1, np.sin), derivative(0, 1))
    assert np.allclose(out.values, np.cos(T1.nodes), atol=1e-12)


def test_hilbert_of_cos():
    out = apply_multiplier(field(T1, np.cos), hilbert())
    assert np.allclose(out.values, np.sin(T1.nodes), atol=1e-12)


def test_riesz12_of_torus_weight():
    out = apply_multiplier(field(T2, lambda x, y: 1 + np.cos(x) * np.cos(y)), riesz_product(1, 2))
    X, Y = T2.mesh()
    assert np.allclose(out.values, 0.5 * np.sin(X) * np.sin(Y), atol=1e-12)


def test_riesz_square_kills_constants():
    out = apply_multiplier(field(T2, lambda x, y: 3.0 + 0 * x), riesz_product(1, 1))
    assert np.max(np.abs(out.values)) == 0.0


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        apply_multiplier(field(T2, lambda x, y: x * 0), hilbert())
    with pytest.raises(DimensionMismatch):
        inner_product(field(T1, np.sin), field(Grid.torus(128), np.sin))


def test_nonfinite_symbol_rejected():
    op = MultiplierOp("inv", lambda k: 1.0 / k[0], zero_mode=None, ndim=1)
    with pytest.raises(ValueError, match="not finite"):
        apply_multiplier(field(T1, np.sin), op)


def test_adjoint_symbols():
    for op, sign in ((derivative(0, 1), -1), (hilbert(), -1), (riesz_product(1, 2), 1)):
        g = T2 if op.ndim == 2 else T1
        assert np.allclose(adjoint(op).symbol_on(g), sign * op.symbol_on(g))


def test_compose_r1_r2_matches_product():
    g = T2
    assert np.allclose(compose(riesz(1), riesz(2)).symbol_on(g), riesz_product(1, 2).symbol_on(g))


def test_inner_product_examples():
    assert inner_product(field(T1, np.sin), field(T1, np.sin)) == pytest.approx(np.pi, rel=1e-14)
    assert abs(inner_product(field(T1, np.sin), field(T1, np.cos))) <= 1e-12


def test_operator_lookup():
    assert operator_by_name("R1^2", 2).name == "R1^2"
    with pytest.raises(ValueError):
        operator_by_name("curl", 2)
    with pytest.raises(DimensionMismatch):
        operator_by_name("H", 2)


@given(seeds)
def test_adjointness_all_catalog(seed):
    rng = np.random.default_rng(seed)
    for grid in (T1, T2):
        f, g = random_field(grid, rng), random_field(grid, rng)
        for op in catalog(grid.ndim):
            lhs = inner_product(apply_multiplier(f, op), g)
            rhs = inner_product(f, apply_multiplier(g, adjoint(op)))
            assert abs(lhs - rhs) <= 1e-10 * l2_norm(f) * l2_norm(g)


@given(seeds)
def test_riesz_square_is_negative(seed):
    f = random_field(T2, np.random.default_rng(seed), below_nyquist=False)
    assert inner_product(apply_multiplier(f, riesz_product(1, 1)), f) <= 1e-12 * l2_norm(f) ** 2


@given(seeds)
def test_hilbert_squared_is_minus_identity(seed):
    f = random_field(T1, np.random.default_rng(seed), mean_zero=True)
    hh = apply_multiplier(apply_multiplier(f, hilbert()), hilbert())
    assert np.max(np.abs(hh.values + f.values)) <= 1e-12 * max(1.0, f.sup_norm())


@given(seeds)
def test_riesz_squares_sum_to_minus_identity(seed):
    f = random_field(T2, np.random.default_rng(seed), mean_zero=True, below_nyquist=False)
    s = apply_multiplier(f, riesz_product(1, 1)).values + apply_multiplier(f, riesz_product(2, 2)).values
    assert np.max(np.abs(s + f.values)) <= 1e-12 * max(1.0, f.sup_norm())


@given(seeds)
def test_catalog_maps_real_to_real(seed):
    # apply_multiplier raises when the imaginary residue exceeds 1e-12
    rng = np.random.default_rng(seed)
    for grid in (T1, T2):
        f = random_field(grid, rng, below_nyquist=False)
        for op in catalog(grid.ndim):
            assert np.all(np.isfinite(apply_multiplier(f, op).values))
