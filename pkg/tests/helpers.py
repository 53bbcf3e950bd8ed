"""Shared builders for the test suite: random operator oracles with known
monotonicity/cocoercivity certificates, and random validated parameter
bundles."""

import numpy as np

from minisplit.oracles import ForwardOracle, ProblemSpec, ResolventOracle
from minisplit.params import assemble, random_coupling, random_slack
from minisplit.schedule import random_causal_pair, random_schedule


def affine_monotone_resolvent(rng, d, scale=1.0):
    """Resolvent of x -> Q x + b with Q = PSD + skew (maximal monotone)."""
    g = rng.standard_normal((d, d))
    sym = g @ g.T / d
    skew = rng.standard_normal((d, d))
    skew = (skew - skew.T) / (2.0 * np.sqrt(d))
    q_mat = scale * (sym + skew)
    b = rng.standard_normal(d)
    cache = {}

    def ev(step, v):
        key = float(step)
        if key not in cache:
            cache[key] = np.linalg.inv(np.eye(d) + key * q_mat)
        return cache[key] @ (v - key * b)

    return ResolventOracle(ev, "affine-monotone")


def cocoercive_forward(rng, d, beta):
    """Affine operator that is exactly 1/beta-cocoercive.

    C = (beta/2)(I + N) + const with any ||N||_2 <= 1; includes rotational
    parts, not just gradients.
    """
    g = rng.standard_normal((d, d))
    n_mat = g / np.linalg.svd(g, compute_uv=False)[0] * rng.uniform(0.1, 1.0)
    r_mat = beta / 2.0 * (np.eye(d) + n_mat)
    c = rng.standard_normal(d)
    return ForwardOracle(lambda x: r_mat @ x + c, beta, "affine-cocoercive")


def random_affine_problem(rng, n, m, d, beta=None):
    if beta is None:
        beta = rng.uniform(0.1, 4.0, m)
    res = tuple(affine_monotone_resolvent(rng, d) for _ in range(n))
    fwd = tuple(cocoercive_forward(rng, d, b) for b in beta)
    return ProblemSpec(res, fwd, d)


def random_params(seed, n=None, m=None, theta=0.9, slack_norm=0.0):
    """Random assemble-built bundle (valid by construction)."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9)) if n is None else n
    m = int(rng.integers(0, 7)) if m is None else m
    m_mat = random_coupling(n, seed=int(rng.integers(1 << 31)))
    f = random_schedule(n, m, int(rng.integers(1 << 31)))
    causal = random_causal_pair(n, m, f, seed=int(rng.integers(1 << 31)))
    beta = rng.uniform(0.0, 5.0, m)
    p_mat = (
        random_slack(n, slack_norm, seed=int(rng.integers(1 << 31)))
        if slack_norm > 0
        else None
    )
    return assemble(m_mat, p_mat, causal, beta, theta)


def params_for_problem(problem, seed, theta=0.9, slack_norm=0.0):
    """Random valid bundle whose constants match the problem's declared ones."""
    rng = np.random.default_rng(seed)
    n, m = problem.n, problem.m
    m_mat = random_coupling(n, seed=int(rng.integers(1 << 31)))
    f = random_schedule(n, m, int(rng.integers(1 << 31)))
    causal = random_causal_pair(n, m, f, seed=int(rng.integers(1 << 31)))
    p_mat = (
        random_slack(n, slack_norm, seed=int(rng.integers(1 << 31)))
        if slack_norm > 0
        else None
    )
    return assemble(m_mat, p_mat, causal, problem.beta, theta)


def three_operator_trajectory(problem, gamma, coeff, zbar0, iters):
    """Direct two-resolvent, summed-forward iteration.

    x1 = J_1(zbar); x2 = J_2(2 x1 - gamma * C(x1) - zbar);
    zbar <- zbar + coeff * (x2 - x1). Returns the (x1, x2, zbar) histories.
    """
    zbar = zbar0.copy()
    xs, zs = [], []
    for _ in range(iters):
        x1 = problem.resolvents[0].evaluate(gamma, zbar)
        arg = 2.0 * x1 - zbar
        total = np.zeros_like(x1)
        for fwd in problem.forwards:
            total += fwd.evaluate(x1)
        x2 = problem.resolvents[1].evaluate(gamma, arg - gamma * total)
        zbar = zbar + coeff * (x2 - x1)
        xs.append(np.stack([x1, x2]))
        zs.append(zbar.copy())
    return xs, zs
