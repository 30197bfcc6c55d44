"""Shared fixtures and independent oracles.

Every oracle here is computed by a different route than the library uses:
the stationary oracle goes through an eigendecomposition, the sequence
likelihood oracle enumerates battery paths outright, and the closed-form
entropy constants were frozen from direct evaluation of the definitions.
"""

import itertools
import math

import numpy as np
import pytest

from ehrelay import ArrivalModel, BatterySpec, StatePolicy

# Worked 3-state instance: capacity 2, cost 2, uniform source everywhere,
# independent 50/50 relay pulse when the battery is full.
WORKED_TABLES = (
    ((0.5, 0.0), (0.5, 0.0)),
    ((0.5, 0.0), (0.5, 0.0)),
    ((0.25, 0.25), (0.25, 0.25)),
)
WORKED_KERNEL = (
    (0.5, 0.5, 0.0),
    (0.0, 0.5, 0.5),
    (0.25, 0.25, 0.5),
)
WORKED_PI = (0.2, 0.4, 0.4)

# Frozen closed forms, evaluated independently from the definitions
# (binary entropy at the stated arguments, in bits).
H_01 = 0.4689955935892812            # h(0.1)
ONE_MINUS_H_01 = 0.5310044064107188  # 1 - h(0.1)
ONE_MINUS_H_005 = 0.7136030428840437  # 1 - h(0.05)
WORKED_RECEIVER = 0.21240176256428753  # 0.4 * (1 - h(0.1))
WORKED_PAIR_ENTROPY = 1.2             # sum_u pi_u H(kernel row u)


def worked_spec() -> BatterySpec:
    return BatterySpec(capacity=2, cost=2)


def worked_policy() -> StatePolicy:
    return StatePolicy.joint_policy(worked_spec(), WORKED_TABLES)


@pytest.fixture
def worked():
    spec = worked_spec()
    return spec, worked_policy(), ArrivalModel.deterministic()


def stationary_eig_oracle(kernel) -> np.ndarray:
    """Stationary law via the eigenvector of the transposed kernel.

    Deliberately a different method from the library's linear solve.
    """
    k = np.asarray(kernel, dtype=np.float64)
    w, v = np.linalg.eig(k.T)
    idx = int(np.argmin(np.abs(w - 1.0)))
    pi = np.real(v[:, idx])
    pi = pi / pi.sum()
    assert pi.min() > -1e-12
    return np.clip(pi, 0.0, None)


def random_joint_tables(spec: BatterySpec, rng: np.random.Generator,
                        eps: float = 1e-3) -> list:
    """Feasible interior joint tables: funded levels get a Dirichlet draw
    squeezed into the eps interior, idle levels a biased source."""
    tables = []
    for u in range(spec.states):
        if u >= spec.cost:
            q = eps + (1.0 - 4.0 * eps) * rng.dirichlet(np.ones(4))
            tables.append([[q[0], q[1]], [q[2], q[3]]])
        else:
            a = eps + (1.0 - 2.0 * eps) * rng.random()
            tables.append([[1.0 - a, 0.0], [a, 0.0]])
    return tables


def random_product_parts(spec: BatterySpec, rng: np.random.Generator,
                         eps: float = 1e-3) -> tuple[list, list]:
    """Interior source law plus per-level relay rows for the product schemes."""
    a = eps + (1.0 - 2.0 * eps) * rng.random()
    p_x1 = [1.0 - a, a]
    rows = []
    for u in range(spec.states):
        if u >= spec.cost:
            b = eps + (1.0 - 2.0 * eps) * rng.random()
            rows.append([1.0 - b, b])
        else:
            rows.append([1.0, 0.0])
    return p_x1, rows


def exhaustive_observation_loglik(kernel, pi, ch_rows, observed) -> float:
    """log p(observed) by summing over every battery path.

    Valid for deterministic unit arrivals with cost >= 2, where a drop in
    level is possible only through a pulse, so the relay symbol on each
    transition is 1 exactly when the level decreases.
    """
    kernel = np.asarray(kernel, dtype=np.float64)
    pi = np.asarray(pi, dtype=np.float64)
    ch_rows = np.asarray(ch_rows, dtype=np.float64)
    observed = np.asarray(observed, dtype=np.int64)
    states = kernel.shape[0]
    n = len(observed)
    paths = np.array(list(itertools.product(range(states), repeat=n + 1)),
                     dtype=np.int64)
    weight = pi[paths[:, 0]]
    for i in range(n):
        a, b = paths[:, i], paths[:, i + 1]
        weight = weight * kernel[a, b]
        pulse = (b < a).astype(np.int64)
        weight = weight * ch_rows[pulse, observed[i]]
    total = float(weight.sum())
    assert total > 0.0
    return math.log(total)
