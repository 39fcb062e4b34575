"""Deterministic checks of the analytic inequalities behind positivity.

Every check is a pure function returning a :class:`CheckReport`; none of them
draws random numbers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .sphere_measure import (
    DiscreteMeasure,
    all_overlaps_leq,
    pair_overlap_leq,
    product_probability_exact,
)

__all__ = [
    "CheckReport",
    "ScalarFunctionPair",
    "check_convexity_lemma",
    "check_gu_bound",
    "check_step2_bound",
    "step2_objective",
    "golden_section_min",
    "induction_product",
    "check_induction_bound",
    "check_mean_overlap_identity",
    "check_pos1",
    "check_step3_chain",
    "convex_pair_corpus",
]

FD_STEP = 1e-6


@dataclass(frozen=True)
class CheckReport:
    check: str
    inputs: dict
    lhs: float
    rhs: float
    passed: bool
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        doc = {"check": self.check, "inputs": self.inputs, "lhs": self.lhs,
               "rhs": self.rhs, "pass": self.passed}
        doc.update(self.extra)
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, default=float)

    def __bool__(self):
        return self.passed


Fn = Callable[[float], float]


@dataclass(frozen=True)
class ScalarFunctionPair:
    """Two convex functions with optional closed-form derivatives."""

    theta: Fn
    psi: Fn
    dtheta: Fn | None = None
    dpsi: Fn | None = None
    name: str = "pair"

    def theta_prime(self, x: float) -> float:
        if self.dtheta is not None:
            return self.dtheta(x)
        return (self.theta(x + FD_STEP) - self.theta(x - FD_STEP)) / (2 * FD_STEP)

    def psi_prime(self, x: float) -> float:
        if self.dpsi is not None:
            return self.dpsi(x)
        return (self.psi(x + FD_STEP) - self.psi(x - FD_STEP)) / (2 * FD_STEP)


def _assert_convex(f: Fn, lo: float, hi: float, label: str, points: int = 41):
    grid = np.linspace(lo, hi, points)
    h = grid[1] - grid[0]
    vals = np.array([f(t) for t in grid])
    for t, second in zip(grid[1:-1], vals[:-2] + vals[2:] - 2 * vals[1:-1]):
        if second < -1e-8:
            raise ValueError(f"{label} is not convex near x={t:.6g} (second difference {second:.3g}, step {h:.3g})")


def check_convexity_lemma(pair: ScalarFunctionPair, x: float, y: float) -> CheckReport:
    """Derivatives of two close convex functions are close.

    ``|theta'(x) - psi'(x)| <= psi'(x+y) - psi'(x-y)
    + (|psi-theta|(x+y) + |psi-theta|(x-y) + |psi-theta|(x)) / y``
    """
    if y <= 0:
        raise ValueError("y must be positive")
    _assert_convex(pair.theta, x - y, x + y, "theta")
    _assert_convex(pair.psi, x - y, x + y, "psi")
    lhs = abs(pair.theta_prime(x) - pair.psi_prime(x))
    gap = sum(abs(pair.psi(t) - pair.theta(t)) for t in (x + y, x - y, x))
    rhs = pair.psi_prime(x + y) - pair.psi_prime(x - y) + gap / y
    passed = lhs <= rhs + 1e-8 * (1 + abs(rhs))
    return CheckReport("convexity_lemma", {"pair": pair.name, "x": x, "y": y}, lhs, rhs, passed)


def _hit_mass(G: DiscreteMeasure, eps: float) -> np.ndarray:
    """``G{z2 : z_a . z2 <= -eps}`` for every atom ``a``."""
    return (G.gram <= -eps).astype(float) @ G.weights


def check_gu_bound(G: DiscreteMeasure, n: int, eps: float, gamma: float) -> CheckReport:
    """``<f_n> <= G(U) + gamma^(n-1)`` and ``G(U) <= 2 (1 - gamma) / eps``."""
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if n < 1:
        raise ValueError("n must be positive")
    fn = product_probability_exact(G, all_overlaps_leq(eps, n))
    in_u = _hit_mass(G, eps) >= gamma
    g_u = float(G.weights[in_u].sum())
    rhs = g_u + gamma ** (n - 1)
    u_bound = 2 * (1 - gamma) / eps
    tol = 1e-12
    passed = fn <= rhs + tol and g_u <= u_bound + tol
    return CheckReport(
        "gu_bound", {"n": n, "eps": eps, "gamma": gamma, "atoms": G.size}, fn, rhs, passed,
        {"G_U": g_u, "G_U_bound": u_bound},
    )


def step2_objective(gamma: float, n: int, eps: float) -> float:
    """``2 (1 - gamma) / eps + exp(-(n - 1)(1 - gamma))``."""
    return 2 * (1 - gamma) / eps + math.exp(-(n - 1) * (1 - gamma))


_INV_PHI = (math.sqrt(5) - 1) / 2


def golden_section_min(f: Fn, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Minimizer of a unimodal ``f`` on the closed interval ``[lo, hi]``."""
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    best = (a + b) / 2
    # the minimum may sit on the boundary, which the bracketing never samples
    return min((best, lo, hi), key=f)


def check_step2_bound(n: int, eps: float, measures: Sequence[DiscreteMeasure] = ()) -> CheckReport:
    """Optimize ``gamma`` in the two-term bound on ``<f_n>``.

    ``lhs`` is the largest exact ``<f_n>`` over ``measures`` (0 if none),
    ``rhs`` the minimized bound; ``extra['gamma']`` is the minimizer. The
    objective is convex in ``gamma`` so golden section finds the minimum over
    the closed interval (``gamma = 1`` gives the trivial value 1).
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    gamma = golden_section_min(lambda g: step2_objective(g, n, eps), 0.0, 1.0)
    value = step2_objective(gamma, n, eps)
    worst = max((product_probability_exact(G, all_overlaps_leq(eps, n)) for G in measures), default=0.0)
    passed = worst <= value + 1e-12
    return CheckReport("step2_bound", {"n": n, "eps": eps, "measures": len(measures)}, worst, value,
                       passed, {"gamma": gamma})


def induction_product(a: float, n: int) -> float:
    """``a * prod_{l=2}^{n-1} (l - 1 + a) / l``."""
    out = a
    for l in range(2, n):
        out *= (l - 1 + a) / l
    return out


def check_induction_bound(a: float, n: int) -> CheckReport:
    """Per-factor bound ``(l-1+a)/l >= exp(-(1-a)/l - 1/l^2)`` for ``2 <= l <= n-1``.

    ``lhs`` is the smallest factor margin; the product and the measured
    constant ``c = P n^(1-a) / a`` go in ``extra``.
    """
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"a must lie in [0, 1], got {a!r}")
    if n < 3:
        raise ValueError("n must be at least 3")
    ls = np.arange(2, n, dtype=float)
    factors = (ls - 1 + a) / ls
    lower = np.exp(-(1 - a) / ls - 1 / ls**2)
    margin = float(np.min(factors - lower))
    prod = induction_product(a, n)
    const = prod * n ** (1 - a) / a if a > 0 else None
    return CheckReport("induction_bound", {"a": a, "n": n}, margin, 0.0, margin >= 0.0,
                       {"product": prod, "constant": const})


def check_mean_overlap_identity(G: DiscreteMeasure) -> CheckReport:
    """``<z1 . z2> = sum_i <z_i>^2 >= 0``."""
    double_sum = float(G.weights @ G.gram @ G.weights)
    bary = G.weights @ G.points
    squared = float(bary @ bary)
    passed = abs(double_sum - squared) <= 1e-12 and squared >= 0.0
    return CheckReport("mean_overlap_identity", {"atoms": G.size, "dim": G.dim}, double_sum, squared, passed)


def check_pos1(G: DiscreteMeasure, eps: float) -> CheckReport:
    """``eps <= (1 + eps) G x G {z1 . z2 > -eps}``."""
    above = 1.0 - product_probability_exact(G, pair_overlap_leq(eps))
    rhs = (1 + eps) * above
    return CheckReport("pos1", {"eps": eps, "atoms": G.size}, eps, rhs, eps <= rhs + 1e-12)


def check_step3_chain(a_values: Sequence[float], fn_values: Sequence[float], n: int,
                      eps: float, a0: float) -> CheckReport:
    """Final averaging step with measured quantities in place of constants.

    Per draw of ``x``: ``delta = E_g<f_n> - P(a, n)``, ``c = P(a, n) n^(1-a) / a``
    and ``h*`` the optimized two-term bound of :func:`check_step2_bound`. Since ``a n^a = n P / c`` and
    ``P <= h* + |delta|`` the chain reads

        E_x a <= a0 + n^(-a0) E_x[n (h* + |delta|) / c].

    Also reports whether ``E_x E_g<f_n> <= h*``.
    """
    if not 0 < a0 < 1:
        raise ValueError("a0 must lie in (0, 1)")
    a = np.asarray(a_values, dtype=float)
    fn = np.asarray(fn_values, dtype=float)
    h_star = check_step2_bound(n, eps).rhs
    terms = np.zeros_like(a)
    deltas = np.empty_like(a)
    for i, (ai, fi) in enumerate(zip(a, fn)):
        p = induction_product(ai, n)
        deltas[i] = fi - p
        if ai > 0:
            c = p * n ** (1 - ai) / ai
            terms[i] = n * (h_star + abs(deltas[i])) / c
    lhs = float(a.mean())
    rhs = a0 + n ** (-a0) * float(terms.mean())
    fn_ok = float(fn.mean()) <= h_star + 1e-12
    return CheckReport(
        "step3_chain", {"n": n, "eps": eps, "a0": a0, "draws": int(a.size)}, lhs, rhs,
        lhs <= rhs + 1e-12 and fn_ok,
        {"h_star": h_star, "mean_abs_delta": float(np.abs(deltas).mean()), "mean_fn": float(fn.mean())},
    )


def _log_partition(weights: np.ndarray, energies: np.ndarray) -> tuple[Fn, Fn]:
    """``x -> log sum_a w_a exp(x h_a)`` and its derivative (a Gibbs average of ``h``)."""

    def f(x):
        e = x * energies
        top = e.max()
        return float(top + math.log(np.sum(weights * np.exp(e - top))))

    def df(x):
        e = x * energies
        p = weights * np.exp(e - e.max())
        return float(p @ energies / p.sum())

    return f, df


def convex_pair_corpus(count: int = 24, seed: int = 2024) -> list[ScalarFunctionPair]:
    """Convex pairs for the convexity lemma: closed-form ones plus random log-partition pairs.

    A random pair is ``theta`` = one log-partition function and ``psi`` = the
    average of several, mimicking a realization against its mean.
    """
    pairs = [
        ScalarFunctionPair(lambda t: t * t, lambda t: t * t, lambda t: 2 * t, lambda t: 2 * t, "x2/x2"),
        ScalarFunctionPair(lambda t: t * t, lambda t: t * t + 1, lambda t: 2 * t, lambda t: 2 * t, "x2/x2+1"),
        ScalarFunctionPair(lambda t: math.sqrt(t * t + 1e-4), lambda t: t * t / 2,
                           lambda t: t / math.sqrt(t * t + 1e-4), lambda t: t, "smoothabs/x2half"),
        ScalarFunctionPair(math.exp, lambda t: math.exp(t) + 0.05 * t * t, math.exp,
                           lambda t: math.exp(t) + 0.1 * t, "exp/exp+"),
        ScalarFunctionPair(lambda t: math.log(math.cosh(t)), lambda t: t * t / 2, math.tanh,
                           lambda t: t, "logcosh/x2half"),
        ScalarFunctionPair(lambda t: math.log1p(math.exp(t)), lambda t: max(t, 0.0) + 0.1 * t * t,
                           None, None, "softplus/relu+"),
        ScalarFunctionPair(lambda t: abs(t) ** 3, lambda t: t ** 4, None, None, "abs3/x4"),
        ScalarFunctionPair(lambda t: 0.0, lambda t: 0.3 * t, None, None, "zero/linear"),
    ]
    rng = np.random.default_rng(seed)
    while len(pairs) < count:
        m = int(rng.integers(2, 9))
        w = rng.dirichlet(np.ones(m))
        thetas = [_log_partition(w, rng.standard_normal(m)) for _ in range(int(rng.integers(1, 6)))]
        theta, dtheta = thetas[0]
        mix = thetas[1:] or thetas

        def psi(t, mix=mix):
            return sum(f(t) for f, _ in mix) / len(mix)

        def dpsi(t, mix=mix):
            return sum(df(t) for _, df in mix) / len(mix)

        pairs.append(ScalarFunctionPair(theta, psi, dtheta, dpsi, f"logpartition{len(pairs)}"))
    return pairs
