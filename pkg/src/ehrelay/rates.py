"""Achievable-rate expressions for the two-hop harvesting link.

Every variant yields a min of two single-letter bounds: what the relay can
reliably absorb from the source (the relay bound) and what the destination
can reliably recover from the relay (the receiver bound). The receiver bound
averages a per-level quantity under the battery steady state; in the noisy
configurations it is corrected by the entropy the relay cannot predict about
its own charging, so it can go negative. The raw min is reported next to its
clamp at zero.

Model map:
  second-hop:  noiseless source-to-relay hop, noisy relay-to-destination hop,
               joint per-level policy.
  timing:      noisy first hop, noiseless second hop, message carried by the
               spacing of relay transmissions (see the timing module).
  both-hops:   noise on both hops, product policy.
  random-loss: both hops noisy plus random per-symbol energy loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .battery import (
    ArrivalModel,
    BatterySpec,
    StatePolicy,
    build_kernel,
    energy_profile,
    stationary,
)
from .errors import ConstraintError, ValidationError
from .pmf import (
    BinaryChannel,
    Pmf,
    binary_entropy,
    entropy,
    mutual_information,
    output_entropy_given_input,
)

CHANNEL_CLASS_TOL = 1e-9
BINDING_TIE = 1e-9


class Model(str, Enum):
    SECOND_HOP = "second-hop"
    TIMING = "timing"
    BOTH_HOPS = "both-hops"
    RANDOM_LOSS = "random-loss"


@dataclass(frozen=True)
class RateBreakdown:
    """Both bounds, their min, the clamp at zero, and which side binds."""

    relay_bound: float
    receiver_bound: float
    rate: float
    achievable: float
    binding: str

    @classmethod
    def from_bounds(cls, relay: float, receiver: float) -> "RateBreakdown":
        rate = min(relay, receiver)
        if abs(relay - receiver) <= BINDING_TIE:
            binding = "both"
        elif receiver < relay:
            binding = "receiver"
        else:
            binding = "relay"
        return cls(relay_bound=relay, receiver_bound=receiver, rate=rate,
                   achievable=max(rate, 0.0), binding=binding)


def require_informative_second_hop(ch2: BinaryChannel) -> None:
    """The receiver bound degenerates when the output law ignores the input."""
    if abs(ch2.q1 + ch2.q2 - 1.0) <= CHANNEL_CLASS_TOL:
        raise ConstraintError(
            "second-hop output is independent of its input (q1 + q2 = 1)"
        )


def per_level_receiver_bits(x2_rows: np.ndarray, ch2: BinaryChannel) -> np.ndarray:
    """I(relay symbol; destination symbol) at each level, vectorized."""
    out0 = x2_rows[:, 0] * ch2.q1 + x2_rows[:, 1] * (1.0 - ch2.q2)
    cond = x2_rows[:, 0] * binary_entropy(ch2.q1) + x2_rows[:, 1] * binary_entropy(ch2.q2)
    return np.maximum(binary_entropy(out0) - cond, 0.0)


def per_level_source_entropy_bits(joint: np.ndarray) -> np.ndarray:
    """H(source symbol | relay symbol) at each level from stacked joint tables."""
    flat = joint.reshape(joint.shape[0], 4)
    mask = flat > 0.0
    logs = np.zeros_like(flat)
    np.log2(flat, out=logs, where=mask)
    h_joint = -(flat * logs).sum(axis=1)
    h_x2 = binary_entropy(joint.sum(axis=1)[:, 1])
    return np.maximum(h_joint - h_x2, 0.0)


def second_hop_rate(spec: BatterySpec, policy: StatePolicy, ch2: BinaryChannel) -> RateBreakdown:
    """Rate of the joint per-level scheme when only the second hop is noisy.

    The relay bound is the steady-state average of H(source | relay symbol),
    the fresh randomness the source can embed per slot; the receiver bound is
    the steady-state average of the per-level second-hop information.
    """
    if policy.mode != "joint":
        raise ValidationError("second-hop rate expects a joint per-level policy")
    require_informative_second_hop(ch2)
    kernel = build_kernel(spec, policy, ArrivalModel.deterministic())
    pi = stationary(kernel).probs
    joint = policy.tensor()
    receiver = float(pi @ per_level_receiver_bits(joint.sum(axis=1), ch2))
    relay = float(pi @ per_level_source_entropy_bits(joint))
    return RateBreakdown.from_bounds(relay, receiver)


def _product_policy(spec: BatterySpec, p_x1, x2_rows) -> tuple[Pmf, StatePolicy]:
    src = p_x1 if isinstance(p_x1, Pmf) else Pmf(p_x1)
    policy = StatePolicy.product_policy(spec, src, x2_rows)
    return src, policy


def both_hops_rate(spec: BatterySpec, p_x1, x2_rows, ch1: BinaryChannel,
                   ch2: BinaryChannel) -> RateBreakdown:
    """Rate of the product scheme when both hops are noisy.

    Charging happens through the first hop, so the receiver bound pays for
    the charge entropy the relay's own observations inject, H(first-hop
    output | source symbol).
    """
    if spec.capacity < spec.cost:
        raise ConstraintError("both-hops scheme assumes capacity >= cost")
    require_informative_second_hop(ch2)
    src, policy = _product_policy(spec, p_x1, x2_rows)
    kernel = build_kernel(spec, policy, ArrivalModel.first_hop(ch1))
    pi = stationary(kernel).probs
    rows = np.stack([policy.x2_row(u) for u in range(spec.states)])
    receiver = float(pi @ per_level_receiver_bits(rows, ch2))
    receiver -= output_entropy_given_input(src, ch1)
    relay = mutual_information(src, ch1)
    return RateBreakdown.from_bounds(relay, receiver)


def random_loss_rate(spec: BatterySpec, p_x1, x2_rows, ch1: BinaryChannel,
                     ch2: BinaryChannel, loss_given_zero: Pmf,
                     loss_given_one: Pmf) -> RateBreakdown:
    """Both hops noisy plus random energy loss on each charged symbol.

    The loss laws give the energy extracted from a received 0 and a received
    1 over {0, ..., cost-1}; the receiver bound pays H(extracted energy |
    source symbol) instead of the full first-hop output entropy.
    """
    if spec.capacity < spec.cost:
        raise ConstraintError("random-loss scheme assumes capacity >= cost")
    require_informative_second_hop(ch2)
    src, policy = _product_policy(spec, p_x1, x2_rows)
    arrival = ArrivalModel.lossy(ch1, loss_given_zero, loss_given_one)
    kernel = build_kernel(spec, policy, arrival)
    pi = stationary(kernel).probs
    rows = np.stack([policy.x2_row(u) for u in range(spec.states)])
    receiver = float(pi @ per_level_receiver_bits(rows, ch2))
    profile = energy_profile(arrival, spec)
    receiver -= float(src.probs[0] * entropy(Pmf(profile[0], tol=1e-12))
                      + src.probs[1] * entropy(Pmf(profile[1], tol=1e-12)))
    relay = mutual_information(src, ch1)
    return RateBreakdown.from_bounds(relay, receiver)


# Violations are compared against the floor with a tiny absolute slack so a
# probability constructed to sit exactly on the floor is not rejected for a
# final rounding ulp.
_FLOOR_SLACK = 1e-15


def feasibility_check(policy: StatePolicy, model: Model, spec: BatterySpec | None = None,
                      eps_pos: float = 1e-6) -> list[str]:
    """List every way a policy violates the conditions of a rate expression.

    Empty list means feasible. Checked: no spending below the cost threshold,
    and the positivity floor ``eps_pos`` on the entries each model requires
    interior (joint cells at funded levels and source marginals at unfunded
    ones for second-hop; product entries at funded levels for both-hops and
    random-loss, whose steady-state existence is instance-dependent and is
    checked when the rate is evaluated).
    """
    if spec is None:
        spec = policy.spec
    elif policy.spec != spec:
        return ["policy was built for a different battery geometry"]
    model = Model(model)
    if model is Model.TIMING:
        raise ValidationError("the timing scheme has no per-level policy to check")
    violations = []
    for u in range(spec.states):
        if u < spec.cost and float(policy.x2_row(u)[1]) != 0.0:
            violations.append(f"spending below cost at level {u}")
    if model is Model.SECOND_HOP:
        if policy.mode != "joint":
            violations.append("second-hop scheme requires a joint per-level policy")
            return violations
        for u in range(spec.states):
            if u < spec.cost:
                row = policy.x1_row(u)
                for x1 in (0, 1):
                    if row[x1] < eps_pos - _FLOOR_SLACK:
                        violations.append(f"source symbol {x1} below the positivity floor at level {u}")
            else:
                table = policy.joint_table(u)
                for x1 in (0, 1):
                    for x2 in (0, 1):
                        if table[x1, x2] < eps_pos - _FLOOR_SLACK:
                            violations.append(
                                f"zero element at level {u} (source {x1}, relay {x2})"
                            )
    else:
        if policy.mode != "product":
            violations.append("this scheme requires a product policy")
            return violations
        for u in range(spec.cost, spec.states):
            table = policy.joint_table(u)
            for x1 in (0, 1):
                for x2 in (0, 1):
                    if table[x1, x2] < eps_pos - _FLOOR_SLACK:
                        violations.append(
                            f"zero element at level {u} (source {x1}, relay {x2})"
                        )
    return violations


def uniform_policy(model: Model, spec: BatterySpec) -> StatePolicy:
    """The fully symmetric interior policy, handy as an optimization floor."""
    model = Model(model)
    if model is Model.SECOND_HOP:
        tables = []
        for u in range(spec.states):
            if u < spec.cost:
                tables.append([[0.5, 0.0], [0.5, 0.0]])
            else:
                tables.append([[0.25, 0.25], [0.25, 0.25]])
        return StatePolicy.joint_policy(spec, tables)
    if model is Model.TIMING:
        raise ValidationError("the timing scheme has no per-level policy")
    rows = [[1.0, 0.0] if u < spec.cost else [0.5, 0.5] for u in range(spec.states)]
    return StatePolicy.product_policy(spec, [0.5, 0.5], rows)
