"""Shared factories and independent brute-force oracles for the test suite.

The oracles recompute expectations by enumerating root-to-leaf paths and
rebuilding the multiplicative weights from scratch with plain Python
arithmetic, independently of the vectorized slot sums they check.
"""

import math

import numpy as np
import pytest

from treebsde import (BsdeProblem, Generator, build_tree, norms)
from treebsde import conditions, scenarios
from treebsde.measure_core import NO_JUMP


# -- brute-force oracles -----------------------------------------------------


def leaf_paths(tree):
    """List of (leaf index, [node ids root..leaf])."""
    out = []
    for leaf in range(tree.leaf_slice.start, tree.leaf_slice.stop):
        path = [leaf]
        while tree.parent[path[0]] >= 0:
            path.insert(0, int(tree.parent[path[0]]))
        out.append((leaf, path))
    return out


def brute_doleans(tree, beta, node):
    """Weight at a node rebuilt from the raw increments along its path."""
    path = [node]
    while tree.parent[path[0]] >= 0:
        path.insert(0, int(tree.parent[path[0]]))
    val = 1.0
    dAc = tree.model.continuous_increments
    for k, nid in enumerate(path[:-1]):
        val *= math.exp(beta * dAc[k]) * (1.0 + beta * float(tree.slot_dA[nid]))
    return val


def brute_y_norm(Y, tree, beta):
    """Leafwise regrouping of the Y norm (purely discrete models)."""
    total = 0.0
    for leaf, path in leaf_paths(tree):
        p = float(tree.prob[leaf])
        acc = 0.0
        for step, nid in enumerate(path[:-1]):
            acc += brute_doleans(tree, beta, path[step + 1]) \
                * float(Y[nid]) ** 2 * float(tree.slot_dA[nid])
        total += p * acc
    return total


def brute_z_norm(Z, tree, beta):
    """Pathwise second moment of the compensated one-step integrals.

    Realizes the jump integral outcome by outcome instead of using the
    closed-form slot variance, which is the independence that makes it an
    oracle for z_norm_sq.
    """
    total = 0.0
    for leaf, path in leaf_paths(tree):
        p = float(tree.prob[leaf])
        acc = 0.0
        for step in range(len(path) - 1):
            nid = path[step]
            da = float(tree.slot_dA[nid])
            phi = tree.slot_phi[nid]
            zh = da * float(np.dot(Z[nid], phi))
            o = int(tree.outcome[path[step + 1]])
            g = (float(Z[nid][o]) - zh) if o != NO_JUMP else -zh
            acc += brute_doleans(tree, beta, path[step + 1]) * g * g
        total += p * acc
    return total


def brute_expectation_at_depth(tree, values, depth):
    """E[values] over the nodes of one depth, via per-node masses."""
    sl = tree.depth_slice(depth)
    return sum(float(tree.prob[i]) * float(values[i])
               for i in range(sl.start, sl.stop))


# -- random problem factories --------------------------------------------------


def random_generator(rng, tree, eps_floor=0.5, forms=(0, 1, 2)):
    """Seeded admissible generator with declared constants honoring eps_floor."""
    maxda = float(tree.slot_dA.max()) if tree.n_slots else 0.0
    cap = math.sqrt((1.0 - eps_floor) / 2.0) / max(maxda, 1e-9)
    lip_y = float(rng.uniform(0, min(cap, 2.0)))
    lip_z = float(rng.uniform(0, 1.5))
    c0 = float(rng.normal(0, 0.5))
    form = int(rng.choice(forms))

    def fn(slot, y, zeta):
        s = norms.lipschitz_seminorm(zeta, slot)
        base = c0 + 0.3 * math.sin(2.0 * slot.step + scenarios.jump_count(slot.history))
        if form == 0:
            return base + lip_y * y + lip_z * s
        if form == 1:
            return base + lip_y * math.tanh(y) + lip_z * math.tanh(s)
        return base + lip_y * math.sin(y) + lip_z * s

    return Generator(fn, lip_y, lip_z)


def random_terminal(rng, m):
    a, b, c = (float(x) for x in rng.normal(0, 1.0, 3))
    ind = scenarios.xi_last_mark_indicator(int(rng.integers(m)))
    return lambda hist: a * scenarios.jump_count(hist) + b * ind(hist) + c


def random_problem(rng, K=None, m=None, max_horizon=6, max_marks=3,
                   eps_floor=0.5, beta_factor=1.5, forms=(0, 1, 2)):
    """Random admissible problem with beta = beta_factor * beta_min(eps*/2).

    Returns (problem, delta).
    """
    model = scenarios.random_model(rng, K=K, m=m, max_horizon=max_horizon,
                                   max_marks=max_marks)
    tree = build_tree(model)
    gen = random_generator(rng, tree, eps_floor=eps_floor, forms=forms)
    eps = conditions.check_main_hypothesis(tree, gen.lip_y)
    delta = eps / 2.0
    beta_min = conditions.beta_threshold(tree, gen.lip_y, gen.lip_z, delta)
    beta = beta_factor * beta_min if beta_min > 0 else 1.0
    problem = BsdeProblem(model=model, beta=beta,
                          xi=random_terminal(rng, tree.n_marks), f=gen,
                          _tree=tree)
    return problem, delta


def random_linear_problem(rng, K=None, m=None, max_horizon=5, max_marks=3,
                          beta=None):
    """Random problem with a (y, zeta)-free generator path."""
    model = scenarios.random_model(rng, K=K, m=m, max_horizon=max_horizon,
                                   max_marks=max_marks)
    tree = build_tree(model)
    amp, freq = float(rng.uniform(0.2, 1.5)), float(rng.uniform(0.5, 3.0))

    def path(slot):
        return amp * math.cos(freq * slot.step + scenarios.jump_count(slot.history))

    beta = float(rng.uniform(0.0, 4.0)) if beta is None else beta
    problem = BsdeProblem(model=model, beta=beta,
                          xi=random_terminal(rng, tree.n_marks),
                          f=Generator.from_path(path), _tree=tree)
    return problem


# -- fixtures -------------------------------------------------------------------


@pytest.fixture
def m1_problem():
    """K=1, one mark, jump size 1/2, terminal = jump indicator, zero driver."""
    model = scenarios.deterministic_grid(K=1, m=1, a=0.5)
    return BsdeProblem(model=model, beta=1.0, xi=scenarios.xi_jump_count(),
                       f=Generator.zero())
