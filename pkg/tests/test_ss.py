import numpy as np
import pytest

from nepsolve.errors import GapNotFound, OrderTooHigh, ZeroVector
from nepsolve.probing import make_probe
from nepsolve.problems import NepProblem, ScalarFunction, synthetic_gun
from nepsolve.sampling import Ellipse, Interval, chebyshev_points, ellipse_trapezoid
from nepsolve.ss import detect_count, residual, ss_full, ss_ri, ss_solve, weighted_residual


def diag_problem(poles):
    n = len(poles)
    return NepProblem(n, [(ScalarFunction.monomial(1), np.eye(n)), (ScalarFunction.constant(), -np.diag(poles))])


def test_detect_count_examples():
    g = detect_count([1, 0.5, 1e-9, 1e-10])
    assert g.count == 2 and g.g_max == pytest.approx(5e8) and g.accepted
    g = detect_count([1, 0.9, 0.8])
    assert not g.accepted and g.g_max == pytest.approx(1.125)
    g = detect_count([1, 1e-4, 1e-8, 1e-9])
    assert g.count == 1


def test_detect_count_zero_tail():
    g = detect_count([1.0, 0.5, 0.0, 0.0])
    assert g.count == 2 and g.accepted and np.isfinite(g.g_max)


def test_scalar_pole():
    p = diag_problem([3.0])
    r = ss_ri(p, chebyshev_points(Interval(0, 10), 16), 1, 1, seed=0)
    assert r.eigenvalues.size == 1
    assert abs(r.eigenvalues[0] - 3) <= 1e-8 and r.residuals[0] <= 1e-8
    assert r.provenance["algorithm"] == "ss-ri"


def test_ss_full_diag():
    r = ss_full(diag_problem([1.0, 5.0]), chebyshev_points(Interval(0, 10), 16), K=2)
    np.testing.assert_allclose(np.sort(r.eigenvalues.real), [1, 5], atol=1e-8)
    assert r.provenance["algorithm"] == "ss-full" and r.accepted


def test_ss_full_cap():
    with pytest.raises(ValueError):
        ss_full(diag_problem([1.0, 5.0]), chebyshev_points(Interval(0, 10), 16), cap=1)


def test_weight_scaling_invariance():
    p = synthetic_gun()
    s = ellipse_trapezoid(Ellipse(3.75 + 0.5j, 2.5, 1.0), 64)
    t = make_probe(p, s, 3, seed=2)
    a = ss_solve(p, t, s, 4).eigenvalues
    b = ss_solve(p, t, s.scaled_weights(-3.7e5 + 2j), 4).eigenvalues
    for x in a:
        assert np.min(np.abs(b - x)) <= 1e-10 * abs(x)


def test_order_too_high_propagates():
    with pytest.raises(OrderTooHigh):
        ss_ri(diag_problem([3.0]), chebyshev_points(Interval(0, 10), 4), 1, 3)


def test_gap_failure_marks_result():
    # 40 eigenvalues inside but a Hankel pencil of size 4: no gap to find
    p = diag_problem(np.linspace(1, 9, 40))
    with pytest.warns(GapNotFound):
        r = ss_ri(p, chebyshev_points(Interval(0, 10), 16), 1, 4, seed=0)
    assert not r.accepted and r.gap.g_max < 1e3
    assert len(r) == r.gap.count


def test_residual_exact_pair():
    p = diag_problem([2.0, 7.0])
    assert residual(p, 7.0, np.array([0.0, 1.0])) <= 1e-15
    with pytest.raises(ZeroVector):
        residual(p, 7.0, np.zeros(2))


def test_residual_rotated_vector():
    # T(lam) = diag(0, d): a vector at angle theta from e1 leaves d*sin(theta)
    d, theta = 5.0, 0.3
    p = NepProblem(2, [(ScalarFunction.constant(), np.diag([0.0, d]))])
    v = np.array([np.cos(theta), np.sin(theta)])
    assert residual(p, 0.0, v) == pytest.approx(d * np.sin(theta), rel=1e-14)


def test_weighted_residual_bound():
    g = synthetic_gun()
    lam, v = 3.0 + 0.2j, np.ones(g.n)
    T = g.evaluate(lam)
    w = weighted_residual(g, lam, v)
    assert w <= residual(g, lam, v) / np.linalg.norm(T, 2) * (1 + 1e-12)


def test_eigresult_sorted_and_flagged():
    p = diag_problem([3.0, -1.0, 12.0])
    r = ss_ri(p, chebyshev_points(Interval(-2, 13), 40), 3, 4, seed=0, region=Interval(0, 10))
    assert np.all(np.diff(np.abs(r.eigenvalues)) >= 0)
    assert r.n_inside == 1 and len(r) >= 3
    sub = r.inside_only()
    assert sub.eigenvalues.size == 1 and abs(sub.eigenvalues[0] - 3) < 1e-8


def test_contour_variant_tag():
    r = ss_ri(diag_problem([3.0]), ellipse_trapezoid(Ellipse(3.5, 2, 1), 32), 1, 2, seed=0)
    assert r.provenance["algorithm"] == "ss-ci"
    assert abs(r.inside_only().eigenvalues[0] - 3) < 1e-10


def test_two_seeds_same_spectrum(string400):
    s = chebyshev_points(Interval(3, 10000), 200)
    a = ss_ri(string400, s, 10, 10, seed=1).inside_only().eigenvalues.real
    b = ss_ri(string400, s, 10, 10, seed=2).inside_only().eigenvalues.real
    assert a.size == b.size == 32
    np.testing.assert_allclose(np.sort(a), np.sort(b), rtol=1e-8)
