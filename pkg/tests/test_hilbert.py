import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wgmsim.hilbert import (
    DimensionLayout,
    hermitian_eigenvalues,
    make_layout,
    partial_trace,
    partial_transpose,
    subsystem_operator,
)


def random_density(dim, rng):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho)


def random_hermitian(dim, rng):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (x + x.conj().T) / 2


# --- oracles -------------------------------------------------------------

def brute_partial_trace(rho, dims, keep):
    """Element-wise index summation, no reshapes."""
    keep = sorted(keep)
    kept_dims = [dims[k] for k in keep]
    out = np.zeros((int(np.prod(kept_dims)),) * 2, dtype=complex)

    def flat(idx):
        n = 0
        for i, d in zip(idx, dims):
            n = n * d + i
        return n

    def kflat(idx):
        n = 0
        for i, d in zip(idx, kept_dims):
            n = n * d + i
        return n

    for row in itertools.product(*[range(d) for d in dims]):
        for col in itertools.product(*[range(d) for d in dims]):
            if any(row[s] != col[s] for s in range(len(dims)) if s not in keep):
                continue
            out[kflat([row[k] for k in keep]), kflat([col[k] for k in keep])] += rho[flat(row), flat(col)]
    return out


def charpoly_roots(m, tol=1e-13):
    """Real roots of det(xI - m) by bisection between Gershgorin bounds."""
    n = m.shape[0]
    coeffs = np.real(np.poly(m))
    radius = np.max(np.sum(np.abs(m), axis=1))
    grid = np.linspace(-radius - 1, radius + 1, 20001)
    vals = np.polyval(coeffs, grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0:
            roots.append(a)
            continue
        if fa * fb < 0:
            while b - a > tol:
                mid = 0.5 * (a + b)
                fm = np.polyval(coeffs, mid)
                if fa * fm <= 0:
                    b = mid
                else:
                    a, fa = mid, fm
            roots.append(0.5 * (a + b))
    assert len(roots) == n
    return np.array(roots)


# --- layout --------------------------------------------------------------

@pytest.mark.parametrize("atoms,cutoff,dims,total", [
    (2, 1, (2, 2, 2, 2), 16),
    (3, 1, (2, 2, 2, 2, 2), 32),
    (1, 2, (2, 3, 3), 18),
])
def test_make_layout(atoms, cutoff, dims, total):
    layout = make_layout(atoms, cutoff)
    assert layout.dims == dims
    assert layout.total == total
    assert layout.atom_indices == tuple(range(atoms))


@pytest.mark.parametrize("atoms,cutoff", [(0, 1), (2, 0), (2, -1)])
def test_make_layout_rejects(atoms, cutoff):
    with pytest.raises(ValueError):
        make_layout(atoms, cutoff)


def test_layout_rejects_bad_dims():
    with pytest.raises(ValueError):
        DimensionLayout((2, 1))
    with pytest.raises(ValueError):
        DimensionLayout((3, 2), mode_indices=(1,))


# --- operators -----------------------------------------------------------

def test_lower_on_first_atom():
    op = subsystem_operator("lower", 0, DimensionLayout((2, 2)))
    assert op.shape == (4, 4)
    assert np.count_nonzero(op) == 2
    assert np.all(op[op != 0] == 1)
    np.testing.assert_array_equal(op, np.kron([[0, 1], [0, 0]], np.eye(2)))


def test_cutoff_one_boson_nilpotent():
    a = subsystem_operator("annihilate", 2, make_layout(2, 1))
    assert a.shape == (16, 16)
    assert np.max(np.abs(a @ a)) == 0


def test_number_spectrum_cutoff_two():
    layout = make_layout(1, 2)
    n = subsystem_operator("number", 1, layout)
    assert sorted(set(np.round(n.diagonal().real, 12))) == [0, 1, 2]


def test_kind_mismatch():
    layout = make_layout(2, 1)
    with pytest.raises(ValueError):
        subsystem_operator("annihilate", 0, layout)
    with pytest.raises(ValueError):
        subsystem_operator("lower", 2, layout)
    with pytest.raises(IndexError):
        subsystem_operator("lower", 7, layout)
    with pytest.raises(ValueError):
        subsystem_operator("sideways", 0, layout)


@pytest.mark.parametrize("cutoff", [1, 2, 3])
def test_raise_is_exact_adjoint(cutoff):
    layout = make_layout(2, cutoff)
    for i in layout.atom_indices:
        np.testing.assert_array_equal(subsystem_operator("raise", i, layout),
                                      subsystem_operator("lower", i, layout).conj().T)
    for i in layout.mode_indices:
        np.testing.assert_array_equal(subsystem_operator("create", i, layout),
                                      subsystem_operator("annihilate", i, layout).conj().T)


def test_disjoint_operators_commute():
    layout = make_layout(2, 2)
    ops = [subsystem_operator("lower", 0, layout), subsystem_operator("raise", 1, layout),
           subsystem_operator("annihilate", 2, layout), subsystem_operator("create", 3, layout)]
    for a, b in itertools.combinations(ops, 2):
        assert np.max(np.abs(a @ b - b @ a)) < 1e-12


def test_boson_commutator_below_cutoff():
    layout = make_layout(1, 3)
    a = subsystem_operator("annihilate", 1, layout)
    comm = a @ a.conj().T - a.conj().T @ a
    # [a, a+] = 1 except on the top Fock level
    diag = comm.diagonal().real.reshape(2, 4, 4)
    np.testing.assert_allclose(diag[:, :3, :], 1.0)
    np.testing.assert_allclose(diag[:, 3, :], -3.0)


# --- partial trace -------------------------------------------------------

def test_partial_trace_bell_with_vacuum():
    layout = make_layout(2, 1)
    psi = np.zeros(16, dtype=complex)
    # |eg00> is index 8, |ge00> is index 4
    psi[8] = psi[4] = 1 / np.sqrt(2)
    rho, reduced = partial_trace(np.outer(psi, psi.conj()), layout, (0, 1))
    expected = np.zeros((4, 4))
    expected[1, 1] = expected[2, 2] = expected[1, 2] = expected[2, 1] = 0.5
    np.testing.assert_allclose(rho, expected, atol=1e-15)
    assert reduced.dims == (2, 2)


def test_partial_trace_maximally_mixed():
    rho, _ = partial_trace(np.eye(4) / 4, DimensionLayout((2, 2)), (0,))
    np.testing.assert_allclose(rho, np.eye(2) / 2)


@pytest.mark.parametrize("keep", [(0, 1), (0,), (1, 3), (2,), (0, 2, 3)])
def test_partial_trace_matches_brute_force(keep):
    rng = np.random.default_rng(7)
    layout = make_layout(2, 1)
    rho = random_density(16, rng)
    got, _ = partial_trace(rho, layout, keep)
    np.testing.assert_allclose(got, brute_partial_trace(rho, layout.dims, keep), atol=1e-14)


def test_partial_trace_mixed_dims_brute_force():
    rng = np.random.default_rng(8)
    layout = make_layout(1, 2)
    rho = random_density(18, rng)
    for keep in [(0,), (1,), (0, 2)]:
        got, _ = partial_trace(rho, layout, keep)
        np.testing.assert_allclose(got, brute_partial_trace(rho, layout.dims, keep), atol=1e-14)


def test_partial_trace_bad_keep():
    layout = make_layout(2, 1)
    with pytest.raises(IndexError):
        partial_trace(np.eye(16) / 16, layout, (5,))
    with pytest.raises(ValueError):
        partial_trace(np.eye(8) / 8, layout, (0,))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), keep=st.sets(st.integers(0, 3), min_size=1, max_size=3))
def test_partial_trace_preserves_trace(seed, keep):
    rng = np.random.default_rng(seed)
    layout = make_layout(2, 1)
    rho = random_density(16, rng)
    got, _ = partial_trace(rho, layout, sorted(keep))
    assert abs(np.trace(got) - np.trace(rho)) < 1e-12


# --- partial transpose ---------------------------------------------------

def test_bell_partial_transpose_spectrum():
    psi = np.array([0, 1, 1, 0]) / np.sqrt(2)
    pt = partial_transpose(np.outer(psi, psi), DimensionLayout((2, 2)), (1,))
    np.testing.assert_allclose(np.sort(np.linalg.eigvalsh(pt)), [-0.5, 0.5, 0.5, 0.5], atol=1e-15)


def test_product_state_stays_positive():
    rng = np.random.default_rng(3)
    r1, r2 = random_density(2, rng), random_density(3, rng)
    pt = partial_transpose(np.kron(r1, r2), DimensionLayout((2, 3), mode_indices=(1,)), (1,))
    np.testing.assert_allclose(pt, np.kron(r1, r2.T), atol=1e-15)
    assert np.min(np.linalg.eigvalsh(pt)) > -1e-14


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), which=st.sets(st.integers(0, 3), max_size=4))
def test_partial_transpose_involution(seed, which):
    rng = np.random.default_rng(seed)
    layout = make_layout(2, 1)
    rho = random_density(16, rng)
    pt = partial_transpose(rho, layout, sorted(which))
    np.testing.assert_array_equal(partial_transpose(pt, layout, sorted(which)), rho)
    np.testing.assert_array_equal(pt, pt.conj().T)
    assert np.trace(pt) == pytest.approx(np.trace(rho), abs=1e-15)
    # entry permutation: same multiset of values
    np.testing.assert_array_equal(np.sort_complex(pt.ravel()), np.sort_complex(rho.ravel()))


# --- eigenvalues ---------------------------------------------------------

def test_eigenvalues_trivial():
    np.testing.assert_array_equal(hermitian_eigenvalues(np.eye(2)), [1, 1])
    np.testing.assert_allclose(hermitian_eigenvalues(np.array([[0, 1], [1, 0]])), [-1, 1])


@pytest.mark.parametrize("seed", range(5))
def test_eigenvalues_match_charpoly_bisection(seed):
    m = random_hermitian(5, np.random.default_rng(seed))
    np.testing.assert_allclose(hermitian_eigenvalues(m), charpoly_roots(m), atol=1e-8)


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(ValueError):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        hermitian_eigenvalues(np.ones((2, 3)))


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 12))
def test_eigenvalue_sum_rules(seed, n):
    m = random_hermitian(n, np.random.default_rng(seed))
    ev = hermitian_eigenvalues(m)
    assert np.all(np.diff(ev) >= 0)
    assert abs(ev.sum() - np.trace(m).real) < 1e-9
    assert abs((ev**2).sum() - np.trace(m @ m).real) < 1e-8
