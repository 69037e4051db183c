from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from vsbdf2.time_mesh import (
    MeshError,
    from_nodes,
    geometric_mesh,
    graded_mesh,
    load_nodes,
    mesh_stats,
    positive_part,
    uniform_mesh,
)


def phi_brute_force(ratios_by_index, N):
    """Phi_n by a direct double loop; ratios_by_index maps n -> r_n."""
    out = {}
    for n in range(2, N + 1):
        total = 0.0
        for j in range(2, n - 1):
            d = ratios_by_index[j] - ratios_by_index[j + 2]
            total += d if d > 0 else 0.0
        out[n] = total
    return out


def test_uniform_examples():
    m = uniform_mesh(4, 4)
    np.testing.assert_array_equal(m.steps, [1.0] * 4)
    np.testing.assert_array_equal(m.ratios, [1.0] * 3)
    np.testing.assert_array_equal(m.weights, [0.5] * 3)
    np.testing.assert_array_equal(uniform_mesh(1, 2).node_times, [0, 0.5, 1])

    st_ = mesh_stats(uniform_mesh(4, 50))
    assert st_.k_max == pytest.approx(0.08, rel=1e-14)
    assert st_.r_max == pytest.approx(1.0, rel=1e-12)
    assert st_.phi_N == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("T, N", [(0, 4), (-1, 4), (1, 1), (1, 2.5)])
def test_uniform_rejects_bad_input(T, N):
    with pytest.raises(MeshError):
        uniform_mesh(T, N)


def test_graded_first_node_and_identity_case():
    assert graded_mesh(4, 20, 3).t(1) == pytest.approx(5.0e-4, rel=1e-14)
    np.testing.assert_array_equal(graded_mesh(4, 20, 1).node_times, uniform_mesh(4, 20).node_times)
    with pytest.raises(MeshError):
        graded_mesh(4, 20, 0.9)


def test_graded_ratios_against_exact_formula():
    # r_n = (n^3 - (n-1)^3) / ((n-1)^3 - (n-2)^3) in exact rational arithmetic
    N = 20
    m = graded_mesh(4, N, 3)
    exact = [Fraction(n**3 - (n - 1) ** 3, (n - 1) ** 3 - (n - 2) ** 3) for n in range(2, N + 1)]
    assert exact[0] == 7
    np.testing.assert_allclose(m.ratios, [float(r) for r in exact], rtol=1e-12)
    assert all(a > b for a, b in zip(exact, exact[1:]))
    # ratios decrease, so Phi telescopes along the even and odd chains
    phi_exact = sum(exact[j] - exact[j + 2] for j in range(N - 3))
    assert mesh_stats(m).phi_N == pytest.approx(float(phi_exact), rel=1e-12)
    assert phi_exact < exact[0] + exact[1]


@pytest.mark.parametrize("grading", [1.5, 2, 3, 4])
@pytest.mark.parametrize("N", [10, 100])
def test_graded_ratios_decrease_and_exceed_one(grading, N):
    r = graded_mesh(1.0, N, grading).ratios
    assert np.all(r > 1)
    assert np.all(np.diff(r) < 0)


def test_geometric_first_step_matches_extended_precision():
    m = geometric_mesh(4, 50, 2.4)
    with mpmath.workdps(50):
        r = mpmath.mpf("2.4")
        k1 = 4 * (r - 1) / (r**50 - 1)
        total = sum(k1 * r**j for j in range(50))
    assert m.k1 == pytest.approx(float(k1), rel=1e-12)
    assert float(total) == pytest.approx(4, rel=1e-30)
    assert abs(m.steps.sum() - 4) <= 1e-10 * 4
    np.testing.assert_allclose(m.ratios, 2.4, rtol=1e-9)


def test_geometric_two_steps():
    m = geometric_mesh(1, 2, 2)
    np.testing.assert_allclose(m.steps, [1 / 3, 2 / 3], rtol=1e-15)


def test_geometric_rejects_unit_ratio():
    with pytest.raises(MeshError, match="uniform"):
        geometric_mesh(1, 10, 1.0)
    with pytest.raises(MeshError):
        geometric_mesh(1, 10, -2.0)
    with pytest.raises(MeshError):
        geometric_mesh(1, 200, 0.1)


@given(st.floats(0.2, 3.5).filter(lambda r: abs(r - 1) > 1e-3), st.integers(2, 200))
def test_geometric_sum_property(r, N):
    # shrinking steps below the resolution of T cannot form distinct nodes
    assume(r > 1 or r ** (N - 1) > 1e-8)
    m = geometric_mesh(3.0, N, r)
    assert abs(m.steps.sum() - 3.0) <= 1e-10 * 3.0
    assert m.node_times[-1] == 3.0


def test_from_nodes_examples():
    m = from_nodes([0, 1, 2, 3])
    assert m == uniform_mesh(3, 3)
    m = from_nodes([0, 0.5, 1.5])
    assert m.r(2) == 2
    assert m.s(2) == pytest.approx(2 / 3, rel=1e-15)
    with pytest.raises(MeshError, match="increasing"):
        from_nodes([0, 1, 0.5])
    with pytest.raises(MeshError):
        from_nodes([0.1, 1, 2])
    with pytest.raises(MeshError):
        from_nodes([0, 1])


def test_mesh_is_immutable():
    m = uniform_mesh(1, 4)
    with pytest.raises(ValueError):
        m.steps[0] = 2.0
    with pytest.raises(AttributeError):
        m.node_times = np.zeros(5)


def test_index_accessors():
    m = from_nodes([0, 1, 3, 4])
    assert (m.k(1), m.k(2), m.k(3)) == (1, 2, 1)
    assert (m.r(2), m.r(3)) == (2, 0.5)
    with pytest.raises(IndexError):
        m.r(1)
    with pytest.raises(IndexError):
        m.k(4)


def test_phi_hand_example():
    # steps 1,3,3,3,3 -> (r2, r3, r4, r5) = (3, 1, 1, 1)
    m = from_nodes(np.concatenate([[0], np.cumsum([1, 3, 3, 3, 3])]))
    np.testing.assert_array_equal(m.ratios, [3, 1, 1, 1])
    stats = mesh_stats(m)
    assert stats.phi_at(5) == 2
    assert stats.phi_at(2) == stats.phi_at(3) == 0
    assert stats.k1 == 1 and stats.k_max == 3 and stats.r_max == 3


def test_phi_graded_against_double_loop():
    m = graded_mesh(4, 20, 3)
    brute = phi_brute_force({n: m.r(n) for n in range(2, 21)}, 20)
    stats = mesh_stats(m)
    for n in range(2, 21):
        assert stats.phi_at(n) == pytest.approx(brute[n], abs=1e-14)


def test_phi_random_meshes_against_double_loop():
    rng = np.random.default_rng(7)
    for _ in range(100):
        N = int(rng.integers(2, 40))
        m = from_nodes(np.concatenate([[0], np.cumsum(rng.uniform(0.05, 1.0, N))]))
        brute = phi_brute_force({n: m.r(n) for n in range(2, N + 1)}, N)
        stats = mesh_stats(m)
        np.testing.assert_allclose(stats.phi, [brute[n] for n in range(2, N + 1)], atol=1e-12)
        assert np.all(np.diff(stats.phi) >= 0)


def test_positive_part():
    np.testing.assert_array_equal(positive_part(np.array([-2.0, 0.0, 1.5])), [0, 0, 1.5])


meshes = st.lists(st.floats(1e-3, 10.0), min_size=2, max_size=60).map(
    lambda ks: from_nodes(np.concatenate([[0.0], np.cumsum(ks)]))
)


@given(meshes)
def test_reconstruction_is_bit_identical(m):
    again = from_nodes(m.node_times)
    for name in ("steps", "ratios", "weights"):
        np.testing.assert_array_equal(getattr(again, name), getattr(m, name))


@given(meshes)
def test_weight_identities(m):
    r, s = m.ratios, m.weights
    np.testing.assert_allclose(s, r / (1 + r), rtol=1e-15)
    np.testing.assert_allclose(1 - s, 1 / (1 + r), rtol=0, atol=1e-15)
    assert np.all((s > 0) & (s < 1))
    assert np.all(np.diff(m.node_times) > 0)


@settings(max_examples=50)
@given(meshes)
def test_phi_small_indices_vanish(m):
    stats = mesh_stats(m)
    assert np.all(stats.phi[:2] == 0)
    assert np.all(np.diff(stats.phi) >= 0)


def test_node_file_round_trip(tmp_path):
    m = graded_mesh(4, 37, 3)
    path = tmp_path / "nodes.txt"
    m.save(path)
    text = path.read_text()
    assert "e" not in text.lower()
    assert len(text.splitlines()) == 38
    again = load_nodes(path)
    np.testing.assert_array_equal(again.node_times, m.node_times)
