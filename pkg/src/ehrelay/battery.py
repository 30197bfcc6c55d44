"""Battery-level Markov model for the harvesting relay.

The relay stores at most ``capacity`` energy units and pays ``cost`` units to
transmit a 1 (transmitting a 0 is free). Each slot it may also harvest energy
from the symbol arriving on the first hop. Writing ``e`` for the units
charged and ``x2`` for the relay's transmitted symbol, the level evolves as

    u' = min(u + e - cost * x2,  capacity)

and spending is only allowed when the level covers the cost. This module
builds the state kernel for the three charging models (deterministic charge
equal to the source symbol, charge through a noisy first hop, and random
per-symbol energy loss), checks the sufficient conditions for a steady state
(a single closed communicating class plus at least one self-loop), and
exposes the lagged pair chain (u, u') whose deterministic emission is the
relay symbol, together with a forward-algorithm likelihood for observation
sequences seen through a binary channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConstraintError, NumericalError, ValidationError
from .pmf import INTERNAL_TOL, USER_TOL, BinaryChannel, JointPmf, Pmf

STATIONARY_RESIDUAL = 1e-10
_POWER_ITER_MAX = 1_000_000


@dataclass(frozen=True)
class BatterySpec:
    """Battery geometry: storable units and the cost of transmitting a 1."""

    capacity: int
    cost: int

    def __post_init__(self):
        if not isinstance(self.capacity, (int, np.integer)) or isinstance(self.capacity, bool):
            raise ValidationError("capacity must be an integer")
        if not isinstance(self.cost, (int, np.integer)) or isinstance(self.cost, bool):
            raise ValidationError("cost must be an integer")
        if self.capacity < 1:
            raise ValidationError("capacity must be at least 1")
        if self.cost < 2:
            raise ValidationError("cost must exceed 1 (a unit charge must not cover it)")

    @property
    def states(self) -> int:
        """Number of battery levels, capacity + 1."""
        return self.capacity + 1


@dataclass(frozen=True)
class ArrivalModel:
    """Law of the energy charged per slot, conditioned on the source symbol.

    kind "deterministic": the charge equals the source symbol.
    kind "channel":       the charge is the symbol after the first hop.
    kind "lossy":         the first-hop output is converted to energy through
                          a per-output loss law over {0, ..., cost-1}.
    """

    kind: str
    channel: Optional[BinaryChannel] = None
    loss: Optional[tuple[Pmf, Pmf]] = None

    def __post_init__(self):
        if self.kind not in ("deterministic", "channel", "lossy"):
            raise ValidationError(f"unknown arrival kind {self.kind!r}")
        if self.kind == "deterministic" and (self.channel or self.loss):
            raise ValidationError("deterministic arrivals take no channel or loss law")
        if self.kind == "channel" and (self.channel is None or self.loss is not None):
            raise ValidationError("channel arrivals need a channel and no loss law")
        if self.kind == "lossy" and (self.channel is None or self.loss is None):
            raise ValidationError("lossy arrivals need both a channel and a loss law")

    @classmethod
    def deterministic(cls) -> "ArrivalModel":
        return cls("deterministic")

    @classmethod
    def first_hop(cls, channel: BinaryChannel) -> "ArrivalModel":
        return cls("channel", channel=channel)

    @classmethod
    def lossy(cls, channel: BinaryChannel, loss_given_zero: Pmf, loss_given_one: Pmf) -> "ArrivalModel":
        return cls("lossy", channel=channel, loss=(loss_given_zero, loss_given_one))


def energy_profile(arrival: ArrivalModel, spec: BatterySpec) -> np.ndarray:
    """Rows p(e | source symbol) of the per-slot charge law.

    Deterministic and channel arrivals charge 0 or 1 unit; lossy arrivals
    charge anywhere in {0, ..., cost-1}, with the loss law applied to the
    first-hop output.
    """
    if arrival.kind == "deterministic":
        return np.array([[1.0, 0.0], [0.0, 1.0]])
    if arrival.kind == "channel":
        return arrival.channel.rows.copy()
    loss0, loss1 = arrival.loss
    if len(loss0) != spec.cost or len(loss1) != spec.cost:
        raise ValidationError(
            f"loss laws must cover exactly the energies 0..{spec.cost - 1} "
            f"(got lengths {len(loss0)} and {len(loss1)})"
        )
    rows = arrival.channel.rows
    losses = np.vstack([loss0.probs, loss1.probs])
    return rows @ losses


@dataclass(frozen=True)
class StatePolicy:
    """Per-level input law for one block: joint tables or a product form.

    Joint mode stores, for every battery level, a joint table over
    (source symbol, relay symbol). Product mode stores one source pmf plus a
    per-level relay pmf; the relay then acts independently of the current
    source symbol. Levels below the transmission cost must place no mass on
    spending; constructors enforce that unless ``strict=False``, which exists
    so that candidate policies can still be built and inspected with
    ``feasibility_check``.
    """

    spec: BatterySpec
    mode: str
    joint: Optional[tuple[JointPmf, ...]] = None
    x1: Optional[Pmf] = None
    x2: Optional[tuple[Pmf, ...]] = None

    @classmethod
    def joint_policy(cls, spec: BatterySpec, tables, tol: float = USER_TOL,
                     strict: bool = True) -> "StatePolicy":
        entries = []
        for table in tables:
            jp = table if isinstance(table, JointPmf) else JointPmf(table, tol=tol)
            if jp.table.shape != (2, 2):
                raise ValidationError("joint policy tables must be 2x2 (source x relay)")
            entries.append(jp)
        if len(entries) != spec.states:
            raise ValidationError(
                f"joint policy needs one table per level (expected {spec.states}, got {len(entries)})"
            )
        policy = cls(spec, "joint", joint=tuple(entries))
        if strict:
            _require_no_underfunded_spending(policy)
        return policy

    @classmethod
    def product_policy(cls, spec: BatterySpec, x1, x2_rows, tol: float = USER_TOL,
                       strict: bool = True) -> "StatePolicy":
        src = x1 if isinstance(x1, Pmf) else Pmf(x1, tol=tol)
        if len(src) != 2:
            raise ValidationError("source pmf must be binary")
        rows = []
        for row in x2_rows:
            p = row if isinstance(row, Pmf) else Pmf(row, tol=tol)
            if len(p) != 2:
                raise ValidationError("relay pmfs must be binary")
            rows.append(p)
        if len(rows) != spec.states:
            raise ValidationError(
                f"product policy needs one relay pmf per level (expected {spec.states}, got {len(rows)})"
            )
        policy = cls(spec, "product", x1=src, x2=tuple(rows))
        if strict:
            _require_no_underfunded_spending(policy)
        return policy

    def joint_table(self, u: int) -> np.ndarray:
        if self.mode == "joint":
            return self.joint[u].table
        return np.outer(self.x1.probs, self.x2[u].probs)

    def x1_row(self, u: int) -> np.ndarray:
        """Marginal source law at level u."""
        if self.mode == "joint":
            return self.joint[u].table.sum(axis=1)
        return self.x1.probs

    def x2_row(self, u: int) -> np.ndarray:
        """Marginal relay law at level u."""
        if self.mode == "joint":
            return self.joint[u].table.sum(axis=0)
        return self.x2[u].probs

    def tensor(self) -> np.ndarray:
        """All joint tables stacked: shape (levels, 2, 2)."""
        return np.stack([self.joint_table(u) for u in range(self.spec.states)])


def _require_no_underfunded_spending(policy: StatePolicy) -> None:
    for u in range(policy.spec.cost):
        if u >= policy.spec.states:
            break
        if float(policy.x2_row(u)[1]) != 0.0:
            raise ConstraintError(
                f"policy spends at level {u}, below the transmission cost {policy.spec.cost}"
            )


def transition_tensor(spec: BatterySpec, arrival: ArrivalModel) -> np.ndarray:
    """A[u, x1, x2, u'] = P(next level = u' | level u, symbols x1, x2).

    Entries for spending at an underfunded level are left all zero; callers
    must ensure the policy puts no mass there.
    """
    profile = energy_profile(arrival, spec)
    width = profile.shape[1]
    states = spec.states
    tensor = np.zeros((states, 2, 2, states))
    for u in range(states):
        for x1 in (0, 1):
            for x2 in (0, 1):
                if x2 == 1 and u < spec.cost:
                    continue
                for e in range(width):
                    pe = profile[x1, e]
                    if pe == 0.0:
                        continue
                    dest = min(u + e - spec.cost * x2, spec.capacity)
                    tensor[u, x1, x2, dest] += pe
    return tensor


def build_kernel(spec: BatterySpec, policy: StatePolicy, arrival: ArrivalModel) -> np.ndarray:
    """Battery-level transition matrix induced by a policy and a charge law."""
    if policy.spec != spec:
        raise ValidationError("policy was built for a different battery geometry")
    _require_no_underfunded_spending(policy)
    joint = policy.tensor()
    tensor = transition_tensor(spec, arrival)
    kernel = np.einsum("uab,uabv->uv", joint, tensor)
    if not np.allclose(kernel.sum(axis=1), 1.0, atol=INTERNAL_TOL, rtol=0.0):
        raise NumericalError("kernel rows do not sum to one; transition mass was lost")
    return kernel


@dataclass(frozen=True)
class RegularityReport:
    """Sufficient conditions for a steady state: one closed class + a self-loop."""

    indecomposable: bool
    self_loop_state: Optional[int]


def _validate_kernel(kernel) -> np.ndarray:
    k = np.asarray(kernel, dtype=float)
    if k.ndim != 2 or k.shape[0] != k.shape[1] or k.size == 0:
        raise ValidationError("kernel must be a square matrix")
    if not np.all(np.isfinite(k)) or float(k.min()) < -USER_TOL:
        raise ValidationError("kernel entries must be finite and nonnegative")
    if not np.allclose(k.sum(axis=1), 1.0, atol=USER_TOL, rtol=0.0):
        raise ValidationError("kernel rows must sum to one")
    return np.clip(k, 0.0, None)


def check_regularity(kernel) -> RegularityReport:
    """Graph analysis of the kernel: closed communicating classes and self-loops."""
    k = _validate_kernel(kernel)
    n = k.shape[0]
    adj = k > 0.0
    reach = adj | np.eye(n, dtype=bool)
    while True:
        closure = reach | (reach @ reach)
        if np.array_equal(closure, reach):
            break
        reach = closure
    comm = reach & reach.T
    seen: list[np.ndarray] = []
    labels = np.full(n, -1, dtype=int)
    for i in range(n):
        if labels[i] >= 0:
            continue
        members = comm[i]
        labels[members] = len(seen)
        seen.append(members)
    closed = 0
    for members in seen:
        if not np.any(adj[members][:, ~members]):
            closed += 1
    diag = np.diag(k) > 0.0
    self_loop = int(np.argmax(diag)) if bool(diag.any()) else None
    return RegularityReport(indecomposable=(closed == 1), self_loop_state=self_loop)


def _solve_stationary(k: np.ndarray) -> Optional[np.ndarray]:
    n = k.shape[0]
    a = k.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        pi = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(pi)) or float(pi.min()) < -1e-9:
        return None
    pi = np.clip(pi, 0.0, None)
    total = pi.sum()
    if total <= 0.0:
        return None
    return pi / total


def _power_stationary(k: np.ndarray) -> Optional[np.ndarray]:
    n = k.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(_POWER_ITER_MAX):
        nxt = pi @ k
        nxt /= nxt.sum()
        if float(np.abs(nxt - pi).max()) <= STATIONARY_RESIDUAL / 4:
            return nxt
        pi = nxt
    return None


def stationary(kernel) -> Pmf:
    """Steady-state law of the battery level.

    Requires the regularity check to pass on both counts; solves the balance
    equations directly and falls back to power iteration if the direct solve
    is ill-conditioned. The result satisfies ``max|pi K - pi| <= 1e-10``.
    """
    k = _validate_kernel(kernel)
    report = check_regularity(k)
    if not report.indecomposable or report.self_loop_state is None:
        parts = []
        if not report.indecomposable:
            parts.append("multiple closed communicating classes")
        if report.self_loop_state is None:
            parts.append("no state with a self-loop")
        raise NumericalError("no steady state: " + " and ".join(parts))
    pi = _solve_stationary(k)
    if pi is None or float(np.abs(pi @ k - pi).max()) > STATIONARY_RESIDUAL:
        pi = _power_stationary(k)
    if pi is None or float(np.abs(pi @ k - pi).max()) > STATIONARY_RESIDUAL:
        raise NumericalError("stationary solve did not reach the required residual")
    return Pmf(pi, tol=INTERNAL_TOL)


@dataclass(frozen=True)
class StationaryAnalysis:
    """Kernel, steady state, and the regularity flags that license it."""

    kernel: np.ndarray
    pi: Pmf
    indecomposable: bool
    self_loop_state: Optional[int]


def analyze_chain(spec: BatterySpec, policy: StatePolicy, arrival: ArrivalModel) -> StationaryAnalysis:
    """Build the kernel and solve for its steady state in one step."""
    kernel = build_kernel(spec, policy, arrival)
    report = check_regularity(kernel)
    pi = stationary(kernel)
    return StationaryAnalysis(kernel=kernel, pi=pi,
                              indecomposable=report.indecomposable,
                              self_loop_state=report.self_loop_state)


@dataclass(frozen=True)
class PairChain:
    """Markov chain on consecutive battery levels with the relay symbol as emission.

    States are (u, u') pairs with positive one-step probability. Because the
    charge per slot is at most cost - 1 while spending removes cost units, a
    drop in level certifies a transmitted 1 and a non-drop certifies a 0, so
    the emission is a deterministic function of the pair. If a charge law
    ever made both symbols consistent with the same pair, states are refined
    to (u, u', x2) triples so the emission stays deterministic; the ``refined``
    flag records whether that defensive path was taken.
    """

    states: tuple
    transition: np.ndarray
    pi: np.ndarray
    emissions: np.ndarray
    refined: bool
    index: dict = field(repr=False, default_factory=dict)

    def entropy_weights(self) -> np.ndarray:
        return self.pi


def _spend_split_tensor(spec: BatterySpec, policy: StatePolicy, arrival: ArrivalModel) -> np.ndarray:
    """q[u, x2, u'] = P(relay sends x2 and moves u -> u')."""
    joint = policy.tensor()
    tensor = transition_tensor(spec, arrival)
    return np.einsum("uab,uabv->ubv", joint, tensor)


def pair_chain(spec: BatterySpec, policy: StatePolicy, arrival: ArrivalModel,
               pi: Pmf, kernel=None) -> PairChain:
    """Lift the battery chain to consecutive-level pairs with relay emissions."""
    if policy.spec != spec:
        raise ValidationError("policy was built for a different battery geometry")
    _require_no_underfunded_spending(policy)
    q = _spend_split_tensor(spec, policy, arrival)
    level_kernel = q.sum(axis=1)
    if kernel is not None and not np.allclose(level_kernel, kernel, atol=1e-12, rtol=0.0):
        raise ValidationError("supplied kernel disagrees with the policy and charge law")
    if len(pi) != spec.states:
        raise ValidationError("steady state has the wrong number of levels")
    states = spec.states
    needs_refine = False
    for u in range(states):
        for v in range(states):
            if q[u, 0, v] > 0.0 and q[u, 1, v] > 0.0:
                needs_refine = True
    if needs_refine:
        labels = [(u, v, x2)
                  for u in range(states) for v in range(states) for x2 in (0, 1)
                  if q[u, x2, v] > 0.0]
        emissions = np.array([x2 for (_, _, x2) in labels], dtype=np.int8)
        pis = np.array([pi[u] * q[u, x2, v] for (u, v, x2) in labels])
        t = np.zeros((len(labels), len(labels)))
        for i, (_, v, _) in enumerate(labels):
            for j, (src, dst, x2n) in enumerate(labels):
                if src == v:
                    t[i, j] = q[src, x2n, dst]
    else:
        labels = [(u, v)
                  for u in range(states) for v in range(states)
                  if level_kernel[u, v] > 0.0]
        emissions = np.array([1 if q[u, 1, v] > 0.0 else 0 for (u, v) in labels], dtype=np.int8)
        pis = np.array([pi[u] * level_kernel[u, v] for (u, v) in labels])
        t = np.zeros((len(labels), len(labels)))
        for i, (_, v) in enumerate(labels):
            for j, (src, dst) in enumerate(labels):
                if src == v:
                    t[i, j] = level_kernel[src, dst]
    total = pis.sum()
    if abs(total - 1.0) > 1e-9:
        raise NumericalError("pair-state weights do not sum to one")
    pis = pis / total
    index = {label: i for i, label in enumerate(labels)}
    return PairChain(states=tuple(labels), transition=t, pi=pis,
                     emissions=emissions, refined=needs_refine, index=index)


def emissions_injective(chain: PairChain) -> bool:
    """True when, from every state, distinct successors emit distinct symbols.

    Exactly then does the emitted process carry the full transition
    randomness, making ``markov_entropy_rate`` its true entropy rate.
    """
    t = chain.transition
    emit = chain.emissions
    for i in range(t.shape[0]):
        succ = np.flatnonzero(t[i] > 0.0)
        symbols = emit[succ]
        if symbols.size != np.unique(symbols).size:
            return False
    return True


def markov_entropy_rate(chain: PairChain) -> float:
    """Transition entropy rate of the pair chain, in bits per step.

    This equals the entropy rate of the emitted relay sequence whenever the
    emissions are injective per source state (see ``emissions_injective``).
    Otherwise it is only an upper proxy for the emitted process and an
    empirical estimate from the Monte Carlo lab is authoritative.
    """
    t = chain.transition
    mask = t > 0.0
    logs = np.zeros_like(t)
    np.log2(t, out=logs, where=mask)
    per_state = -(t * logs).sum(axis=1)
    return max(float(chain.pi @ per_state), 0.0)


def forward_loglik(chain: PairChain, channel: Optional[BinaryChannel], observed) -> float:
    """Natural-log probability of an observed binary sequence.

    The hidden state runs over the pair chain started from its stationary
    law; each state emits its relay symbol, which is observed through
    ``channel`` (pass None for a noiseless observation). The forward
    recursion renormalizes each step, so sequences of length 10**5 and more
    are fine. An observation with probability zero is reported as an error
    rather than mapped to -inf, since it signals a support mismatch.
    """
    obs = np.asarray(observed, dtype=int)
    if obs.ndim != 1 or obs.size == 0:
        raise ValidationError("observed sequence must be a nonempty 1-d array")
    if np.any((obs != 0) & (obs != 1)):
        raise ValidationError("observed symbols must be 0 or 1")
    emit = chain.emissions
    if channel is None:
        b = np.zeros((2, emit.size))
        b[0, emit == 0] = 1.0
        b[1, emit == 1] = 1.0
    else:
        rows = channel.rows
        b = np.vstack([rows[emit, 0], rows[emit, 1]])
    step = [chain.transition * b[y][None, :] for y in (0, 1)]
    alpha = chain.pi * b[obs[0]]
    loglik = 0.0
    for i, y in enumerate(obs):
        if i > 0:
            alpha = alpha @ step[y]
        scale = float(alpha.sum())
        if scale <= 0.0:
            raise NumericalError(
                f"observed sequence has probability zero at position {i} (support mismatch)"
            )
        loglik += math.log(scale)
        alpha = alpha / scale
    return float(loglik)
