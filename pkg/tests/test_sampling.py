import numpy as np
import pytest
from scipy import special

from pseudoscope import (
    SeededRng,
    apply_perturbation,
    full_rank_perturbation,
    jordan_nilpotent,
    rank1_perturbation,
    sample_complex_normal,
    spectral_norm,
)


def test_same_stream_is_bit_identical():
    a = sample_complex_normal(64, SeededRng(99, 5))
    b = sample_complex_normal(64, SeededRng(99, 5))
    assert np.array_equal(a, b)


def test_sequential_draws_differ():
    rng = SeededRng(99, 5)
    a = sample_complex_normal(16, rng)
    b = sample_complex_normal(16, rng)
    assert not np.array_equal(a, b)


def test_distinct_streams_differ_and_decorrelate():
    n = 100_000
    a = sample_complex_normal(n, SeededRng(3, 0)).real
    b = sample_complex_normal(n, SeededRng(3, 1)).real
    corr = np.corrcoef(a, b)[0, 1]
    assert abs(corr) <= 4.0 / np.sqrt(n)


def test_entry_mean_is_small():
    xs = sample_complex_normal(1_000_000, SeededRng(17, 0))
    assert abs(xs.mean()) <= 0.005


def test_norm_squared_mean():
    d, n = 100, 100_000
    rng = SeededRng(23, 0)
    total = 0.0
    for _ in range(5):
        block = rng.complex_normals(d * (n // 5)).reshape(-1, d)
        total += float(np.sum(np.abs(block) ** 2))
    assert total / n == pytest.approx(d, abs=0.5)


def test_real_part_variance_convention():
    xs = sample_complex_normal(1_000_000, SeededRng(29, 0))
    assert np.var(xs.real) == pytest.approx(0.5, abs=0.01)
    assert np.var(xs.imag) == pytest.approx(0.5, abs=0.01)


def test_norm_squared_matches_gamma_law():
    # oracle: regularized incomplete gamma for a sum of d unit exponentials
    d, n = 100, 100_000
    rng = SeededRng(31, 0)
    norms = np.empty(n)
    done = 0
    while done < n:
        b = min(20_000, n - done)
        block = rng.complex_normals(b * d).reshape(b, d)
        norms[done : done + b] = np.sum(np.abs(block) ** 2, axis=1)
        done += b
    norms.sort()
    cdf = special.gammainc(d, norms)
    i = np.arange(1, n + 1)
    ks = max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n))
    assert ks <= 1.95 / np.sqrt(n)


def test_rank1_norm_is_eps():
    worst = 0.0
    for i in range(1000):
        p = rank1_perturbation(50, 2.5, SeededRng(41, i))
        worst = max(worst, abs(spectral_norm(p.materialize()) - 2.5))
    assert worst <= 2.5e-9


def test_rank1_eigenvalue_identity():
    p = rank1_perturbation(40, 2.0, SeededRng(43, 0))
    lams = np.linalg.eigvals(p.materialize())
    nonzero = lams[np.argmax(np.abs(lams))]
    expected = 2.0 * np.vdot(p.v, p.u) / (p.norm_u * p.norm_v)
    assert nonzero == pytest.approx(expected, abs=1e-10)


def test_rank1_eigenvalue_variance_clt():
    d, n, eps = 100, 10_000, 2.0
    vals = np.empty(n, dtype=complex)
    for i in range(n):
        p = rank1_perturbation(d, eps, SeededRng(47, i))
        vals[i] = eps * np.vdot(p.v, p.u) / (p.norm_u * p.norm_v)
    var = np.var(vals)
    assert abs(var - eps**2 / d) <= 0.1 * eps**2 / d


def test_full_rank_norm():
    e = full_rank_perturbation(30, 1.5, SeededRng(53, 0))
    assert spectral_norm(e) == pytest.approx(1.5, abs=1e-8)


def test_full_rank_d1():
    e = full_rank_perturbation(1, 0.7, SeededRng(53, 1))
    assert e.shape == (1, 1)
    assert abs(e[0, 0]) == pytest.approx(0.7, abs=1e-12)


def test_full_rank_unitary_invariance_moments():
    # fixed Householder reflection; first and second entry moments of the
    # two ensembles must agree within Monte Carlo error
    d, n = 6, 10_000
    w = np.full(d, 1.0 / np.sqrt(d), dtype=complex)
    w[0] += 1.0
    w /= np.linalg.norm(w)
    house = np.eye(d, dtype=complex) - 2.0 * np.outer(w, np.conj(w))
    mean_a = np.zeros((d, d), dtype=complex)
    mean_b = np.zeros((d, d), dtype=complex)
    sq_a = np.zeros((d, d))
    sq_b = np.zeros((d, d))
    for i in range(n):
        e = full_rank_perturbation(d, 1.0, SeededRng(59, i))
        rot = house.conj().T @ e @ house
        mean_a += e
        mean_b += rot
        sq_a += np.abs(e) ** 2
        sq_b += np.abs(rot) ** 2
    se_mean = 3.0 / np.sqrt(n)  # entry std is below 1 after normalization
    assert np.max(np.abs(mean_a - mean_b)) / n <= se_mean
    assert np.max(np.abs(sq_a - sq_b)) / n <= se_mean


def test_apply_perturbation_point_mass():
    p = rank1_perturbation(3, 2.0, SeededRng(61, 0))
    p.u[:] = [1, 0, 0]
    p.v[:] = [1, 0, 0]
    p.norm_u = p.norm_v = 1.0
    a = apply_perturbation(np.zeros((3, 3), dtype=complex), p)
    expected = np.zeros((3, 3), dtype=complex)
    expected[0, 0] = 2.0
    assert np.allclose(a, expected)


def test_apply_perturbation_is_rank_one_update():
    t = jordan_nilpotent(25)
    p = rank1_perturbation(25, 2.0, SeededRng(61, 1))
    diff = apply_perturbation(t, p) - t.to_dense()
    s = np.linalg.svd(diff, compute_uv=False)
    assert s[1] <= 1e-9 * 2.0


def test_apply_perturbation_trace_shift():
    t = jordan_nilpotent(12)
    p = rank1_perturbation(12, 1.3, SeededRng(61, 2))
    a = apply_perturbation(t, p)
    expected = 1.3 * np.vdot(p.v, p.u) / (p.norm_u * p.norm_v)
    assert np.trace(a) == pytest.approx(expected, abs=1e-12)
