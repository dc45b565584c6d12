import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ncorr.moments import (
    MultiIndex,
    StateProvider,
    all_indices,
    moment_table,
    normally_ordered_moment,
)
from ncorr.states import (
    TruncationRiskError,
    make_coherent,
    make_fock,
    make_thermal,
    make_squeezed,
    make_vacuum,
    mix,
    tensor,
)

from oracles import factorial_moment, thermal_probs


def test_multi_index_basics():
    idx = MultiIndex.of((1, 2), (0, 3))
    assert idx.k == 2 and idx.degree == 6
    assert idx.swapped() == MultiIndex.of((2, 1), (3, 0))
    assert MultiIndex.zero(3).is_zero()
    with pytest.raises(ValueError):
        MultiIndex.of((-1, 0))


def test_graded_lex_order():
    assert all_indices(1, 1) == [MultiIndex.of((0, 0)), MultiIndex.of((1, 0)), MultiIndex.of((0, 1))]


def test_moment_examples():
    assert normally_ordered_moment(make_coherent(0.5, 16), MultiIndex.of((1, 1))) == pytest.approx(0.25, abs=1e-10)
    assert normally_ordered_moment(make_fock(1, 8), MultiIndex.of((2, 2))) == 0
    assert normally_ordered_moment(make_thermal(1.0, 64), MultiIndex.of((2, 2))).real == pytest.approx(2, abs=1e-5)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        normally_ordered_moment(make_vacuum(4), MultiIndex.of((0, 0), (0, 0)))


def test_exponent_bound():
    with pytest.raises(TruncationRiskError):
        normally_ordered_moment(make_vacuum(8), MultiIndex.of((3, 2)))
    normally_ordered_moment(make_vacuum(8), MultiIndex.of((2, 2)))


def test_table_vacuum():
    table = moment_table(make_vacuum(8), 2)
    assert table[MultiIndex.of((0, 0))] == 1
    assert all(v == 0 for idx, v in table.items() if not idx.is_zero())


def test_table_fock_one():
    table = moment_table(make_fock(1, 4), 1)
    expect = {(0, 0): 1, (1, 0): 0, (0, 1): 0, (1, 1): 1}
    for pair, value in expect.items():
        assert table[MultiIndex.of(pair)] == value


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1 + 1j, -0.3 + 0.8j])
def test_table_coherent_factorizes(alpha):
    table = moment_table(make_coherent(alpha, 40), 3)
    for idx, value in table.items():
        (n, m), = idx.pairs
        assert abs(value - np.conj(alpha) ** n * alpha**m) < 1e-9


def test_table_conjugation_exact():
    state = make_squeezed(0.4, 0.9, 24)
    table = moment_table(state, 2)
    for idx, value in table.items():
        assert table[idx.swapped()] == value.conjugate()


@pytest.mark.parametrize("nbar", [0.5, 1.0, 2.0])
def test_diagonal_states_match_photon_number_sums(nbar):
    state = make_thermal(nbar, 64)
    p = np.real(np.diag(state.rho))
    for k in range(6):
        oracle = factorial_moment(p, k)
        value = normally_ordered_moment(state, MultiIndex.of((k, k))).real
        assert abs(value - oracle) <= 1e-8 * max(1.0, abs(oracle))
    # renormalised truncation is close to the untruncated distribution
    assert factorial_moment(thermal_probs(nbar, 64), 2) == pytest.approx(2 * nbar**2, rel=1e-6)


def test_off_diagonal_moments_vanish_for_diagonal_states():
    state = make_thermal(1.0, 32)
    assert normally_ordered_moment(state, MultiIndex.of((2, 1))) == 0


def test_two_mode_product_factorizes():
    a, b = make_coherent(0.4 + 0.2j, 20), make_thermal(0.7, 40)
    joint = tensor([a, b])
    idx = MultiIndex.of((1, 2), (2, 2))
    expected = (normally_ordered_moment(a, MultiIndex.of((1, 2)))
                * normally_ordered_moment(b, MultiIndex.of((2, 2))))
    assert normally_ordered_moment(joint, idx) == pytest.approx(expected, abs=1e-12)


def test_mode_ordering_is_list_order():
    joint = tensor([make_fock(1, 4), make_vacuum(4)])
    assert normally_ordered_moment(joint, MultiIndex.of((1, 1), (0, 0))) == 1
    assert normally_ordered_moment(joint, MultiIndex.of((0, 0), (1, 1))) == 0


def test_provider_points_share_a_mode():
    prov = StateProvider(make_thermal(1.0, 64), [0, 0])
    assert prov.k == 2
    assert prov.evaluate(MultiIndex.of((1, 1), (1, 1))).real == pytest.approx(2.0, abs=1e-5)
    assert prov.evaluate(MultiIndex.zero(2)) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        StateProvider(make_vacuum(4), [1])


@settings(max_examples=50, deadline=None)
@given(
    re=st.floats(-1.2, 1.2), im=st.floats(-1.2, 1.2),
    n=st.integers(0, 4), m=st.integers(0, 4),
    w=st.floats(0, 1), nbar=st.floats(0, 1.5),
)
def test_conjugation_symmetry(re, im, n, m, w, nbar):
    state = mix([make_coherent(complex(re, im), 48), make_thermal(nbar, 48)], [w, 1 - w])
    idx = MultiIndex.of((n, m))
    assert normally_ordered_moment(state, idx.swapped()) == normally_ordered_moment(state, idx).conjugate()


@settings(max_examples=30, deadline=None)
@given(re=st.floats(-1.5, 1.5), im=st.floats(-1.5, 1.5), n=st.integers(0, 5), m=st.integers(0, 5))
def test_coherent_factorization_property(re, im, n, m):
    alpha = complex(re, im)
    value = normally_ordered_moment(make_coherent(alpha, 48), MultiIndex.of((n, m)))
    assert abs(value - np.conj(alpha) ** n * alpha**m) < 1e-9 * max(1, abs(alpha) ** (n + m))


def test_basis_count_matches_binomial():
    for k in (1, 2, 3):
        for d in (1, 2, 3):
            assert len(all_indices(k, d)) == math.comb(2 * k + d, d)
