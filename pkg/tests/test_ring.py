from fractions import Fraction

import numpy as np
import pytest

from billiardq.ring import Poly, RatFunc, bareiss_inverse, solve_linear

V = ("x", "y")


def _random_poly(rng, max_deg=2):
    p = Poly.const(V, 0)
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    for _ in range(rng.integers(1, 4)):
        c = int(rng.integers(-5, 6))
        dx, dy = int(rng.integers(0, max_deg + 1)), int(rng.integers(0, max_deg + 1))
        p = p + Poly.const(V, c) * x ** dx * y ** dy
    return p


def test_ring_axioms_random(rng):
    for _ in range(50):
        a, b, c = (_random_poly(rng) for _ in range(3))
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert a - a == Poly.const(V, 0)


def test_poly_evaluate_matches_structure(rng):
    for _ in range(20):
        a, b = _random_poly(rng), _random_poly(rng)
        env = {"x": Fraction(int(rng.integers(-4, 5)), 3),
               "y": Fraction(int(rng.integers(-4, 5)), 2)}
        assert (a * b).evaluate(env) == a.evaluate(env) * b.evaluate(env)
        assert (a + b).evaluate(env) == a.evaluate(env) + b.evaluate(env)


def test_exact_division(rng):
    for _ in range(30):
        a, b = _random_poly(rng), _random_poly(rng)
        if b.is_zero:
            continue
        prod = a * b
        assert prod.exact_div(b) == a


def test_exact_division_rejects_nondivisor():
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    with pytest.raises(ValueError):
        (x * x + Poly.const(V, 1)).exact_div(y)


def test_subs_cross_variable():
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    p = x * x - y
    q = p.subs({"x": y, "y": y})
    assert q == y * y - y
    assert q.evaluate({"x": 7, "y": 3}) == 6


def test_ratfunc_field_identities(rng):
    for _ in range(20):
        a, b = _random_poly(rng), _random_poly(rng)
        if a.is_zero or b.is_zero:
            continue
        r = RatFunc(a, b)
        one = RatFunc.const(V, 1)
        assert r * (one / r) == one
        assert r - r == RatFunc.const(V, 0)
        assert (r + one) * b == RatFunc(a + b, Poly.const(V, 1)) * RatFunc(b, b)


def test_ratfunc_cancellation():
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    r = RatFunc((x + y) * (x - y), (x + y))
    assert r == RatFunc(x - y)


def test_bareiss_inverse_vs_numeric(rng):
    for trial in range(5):
        n = 4
        M = [[_random_poly(rng, max_deg=1) for _ in range(n)] for _ in range(n)]
        env = {"x": Fraction(3, 7), "y": Fraction(-2, 5)}
        num = np.array([[float(M[i][j].evaluate(env)) for j in range(n)]
                        for i in range(n)])
        if abs(np.linalg.det(num)) < 1e-8:
            continue
        inv, det = bareiss_inverse(M)
        assert abs(float(det.evaluate(env)) - np.linalg.det(num)) < 1e-6 * max(
            1.0, abs(np.linalg.det(num)))
        got = np.array([[float(inv[i][j].evaluate(env)) for j in range(n)]
                        for i in range(n)])
        assert np.allclose(got, np.linalg.inv(num), atol=1e-9)


def test_bareiss_inverse_singular_raises():
    x = Poly.var(("x",), "x")
    M = [[x, x], [x, x]]
    with pytest.raises(ValueError):
        bareiss_inverse(M)


def test_solve_linear_consistent(rng):
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    A = [[RatFunc(x), RatFunc(y)],
         [RatFunc(Poly.const(V, 2) * x), RatFunc(Poly.const(V, 2) * y)]]
    b = [RatFunc(x + y), RatFunc(Poly.const(V, 2) * (x + y))]
    sol, null = solve_linear(A, b)
    # rank 1 system: one free direction
    assert len(null) == 1
    # particular solution satisfies the system symbolically
    for i in range(2):
        lhs = A[i][0] * sol[0] + A[i][1] * sol[1]
        assert lhs == b[i]


def test_solve_linear_inconsistent():
    x, y = Poly.var(V, "x"), Poly.var(V, "y")
    A = [[RatFunc(x), RatFunc(y)],
         [RatFunc(x), RatFunc(y)]]
    b = [RatFunc.const(V, 0), RatFunc.const(V, 1)]
    with pytest.raises(ValueError, match="inconsistent"):
        solve_linear(A, b)
