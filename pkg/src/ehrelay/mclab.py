"""Seeded Monte Carlo experiments behind the stochastic claims.

Every experiment draws from substreams derived by hashing an experiment
label and a trial index into the root seed, so results depend only on
(seed, config) and never on scheduling. Budgets are desk-scale and hard:
paths are capped at ten million steps and materialized codebooks at 2^20
words; the asymptotic statements are checked as finite-size trends, not by
brute force.

Covered: battery occupancy against the steady state, concentration of the
per-symbol log-likelihoods at the destination, exact-match collisions in
conditionally drawn codebooks, the recharge-time law, and the relay
decoder's two error events (incomplete reception and ambiguous reception).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .battery import (
    ArrivalModel,
    BatterySpec,
    PairChain,
    StatePolicy,
    build_kernel,
    forward_loglik,
    stationary,
)
from .errors import BudgetError, NumericalError, ValidationError
from .pmf import BinaryChannel, JointPmf
from .timing import ZNoise, z_pmf

MAX_STEPS = 10_000_000
MAX_CODEBOOK = 2**20
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class RunConfig:
    """Root seed, path length (or sample count), and repetition count."""

    seed: int
    n: int
    trials: int = 1

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError("need at least one step or sample")
        if self.n > MAX_STEPS:
            raise BudgetError(f"n = {self.n} exceeds the desk-scale cap {MAX_STEPS}")
        if self.trials < 1:
            raise ValidationError("need at least one trial")


def substream(seed: int, label: str, index: int = 0) -> np.random.Generator:
    """Independent generator for one (experiment, trial) cell.

    The label is hashed so distinct experiments cannot share a stream even
    when their numeric parameters coincide; the trial index keeps parallel
    trials reproducible regardless of execution order.
    """
    tag = int.from_bytes(hashlib.sha256(label.encode()).digest()[:8], "big")
    return np.random.default_rng(np.random.SeedSequence((seed & (2**64 - 1), tag, index)))


class _UniformStock:
    """Pre-drawn uniforms consumed one at a time, refilled in growing chunks."""

    __slots__ = ("rng", "chunk", "stock")

    def __init__(self, rng: np.random.Generator, chunk: int = 1024):
        self.rng = rng
        self.chunk = chunk
        self.stock: list[float] = []

    def take(self) -> float:
        if not self.stock:
            draws = self.rng.random(self.chunk)
            self.stock = draws[::-1].tolist()
            if self.chunk < 65536:
                self.chunk *= 2
        return self.stock.pop()


def sample_path(transition, init: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Sample n states of a finite Markov chain, starting from ``init``.

    Next-state draws are pre-generated per current state in growing blocks
    and consumed as the path visits that state, which keeps the per-step
    work to a list pop plus an integer copy.
    """
    t = np.asarray(transition, dtype=np.float64)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValidationError("transition must be a square matrix")
    states = t.shape[0]
    if not 0 <= init < states:
        raise ValidationError("initial state out of range")
    if n < 1:
        raise ValidationError("path length must be positive")
    cum = np.cumsum(t, axis=1)
    cum[:, -1] = 1.0
    stocks: list[list[int]] = [[] for _ in range(states)]
    chunks = [1024] * states
    path = np.empty(n, dtype=np.int64)
    state = init
    for i in range(n):
        path[i] = state
        stock = stocks[state]
        if not stock:
            draws = np.searchsorted(cum[state], rng.random(chunks[state]), side="right")
            stocks[state] = stock = np.minimum(draws, states - 1)[::-1].tolist()
            if chunks[state] < 65536:
                chunks[state] *= 2
        state = stock.pop()
    return path


def _draw_index(cum: np.ndarray, rng: np.random.Generator) -> int:
    return min(int(np.searchsorted(cum, rng.random(), side="right")), cum.size - 1)


@dataclass(frozen=True)
class OccupancyResult:
    frequencies: np.ndarray
    stationary: Optional[np.ndarray]
    max_deviation: Optional[float]


def simulate_states(spec: BatterySpec, policy: StatePolicy, arrival: ArrivalModel,
                    cfg: RunConfig, initial_state: int = 0) -> OccupancyResult:
    """Visit frequencies of the battery level over simulated slot dynamics.

    Runs ``cfg.trials`` independent paths of ``cfg.n`` steps each and pools
    the visit counts. The steady state is attached for comparison when it
    exists; chains without one still simulate fine and report None there.
    """
    kernel = build_kernel(spec, policy, arrival)
    if not 0 <= initial_state < spec.states:
        raise ValidationError("initial state outside the battery range")
    counts = np.zeros(spec.states, dtype=np.int64)
    label = f"occupancy/cost={spec.cost}/capacity={spec.capacity}/start={initial_state}"
    for trial in range(cfg.trials):
        rng = substream(cfg.seed, label, trial)
        path = sample_path(kernel, initial_state, cfg.n, rng)
        counts += np.bincount(path, minlength=spec.states)
    freq = counts / float(cfg.n * cfg.trials)
    try:
        pi = stationary(kernel).probs
    except NumericalError:
        return OccupancyResult(frequencies=freq, stationary=None, max_deviation=None)
    return OccupancyResult(frequencies=freq, stationary=pi,
                           max_deviation=float(np.abs(freq - pi).max()))


@dataclass(frozen=True)
class AepResult:
    n: int
    marginal_bits: np.ndarray
    joint_bits: np.ndarray

    @property
    def marginal_mean(self) -> float:
        return float(self.marginal_bits.mean())

    @property
    def marginal_std(self) -> float:
        return float(self.marginal_bits.std(ddof=1)) if self.marginal_bits.size > 1 else 0.0

    @property
    def joint_mean(self) -> float:
        return float(self.joint_bits.mean())

    @property
    def joint_std(self) -> float:
        return float(self.joint_bits.std(ddof=1)) if self.joint_bits.size > 1 else 0.0


def empirical_aep(chain: PairChain, ch2: Optional[BinaryChannel], cfg: RunConfig) -> AepResult:
    """Concentration of the destination's per-symbol log-likelihoods.

    Each trial samples a relay sequence from the pair chain, passes it
    through the second hop (None means a clean wire), and scores both
    -(1/n) log2 p(received sequence) and -(1/n) log2 p(relay, received).
    The marginal uses the forward recursion over the hidden pair state; the
    joint factors into the exact chain probability of the relay sequence
    plus the memoryless channel term, so joint >= marginal holds per trial.
    """
    n, trials = cfg.n, cfg.trials
    pair_cum = np.cumsum(chain.pi)
    marginal = np.empty(trials)
    joint = np.empty(trials)
    label = f"aep/states={len(chain.states)}/refined={chain.refined}"
    for trial in range(trials):
        rng = substream(cfg.seed, label, trial)
        start = _draw_index(pair_cum, rng)
        path = sample_path(chain.transition, start, n, rng)
        x2 = chain.emissions[path]
        log_chain = forward_loglik(chain, None, x2)
        if ch2 is None:
            y = x2
            log_channel = 0.0
        else:
            p_one = np.where(x2 == 1, ch2.q2, 1.0 - ch2.q1)
            y = (rng.random(n) < p_one).astype(np.int8)
            correct = y == x2
            terms = np.where(x2 == 1,
                             np.where(correct, ch2.q2, 1.0 - ch2.q2),
                             np.where(correct, ch2.q1, 1.0 - ch2.q1))
            if np.any(terms <= 0.0):
                raise NumericalError("received a symbol the channel cannot produce")
            log_channel = float(np.log(terms).sum())
        marginal[trial] = -forward_loglik(chain, ch2, y) / (n * _LN2)
        joint[trial] = -(log_chain + log_channel) / (n * _LN2)
    return AepResult(n=n, marginal_bits=marginal, joint_bits=joint)


def _conditional_tables(joint: JointPmf):
    """Marginal over the conditioning symbol and rows p(x | u)."""
    table = joint.table
    p_u = table.sum(axis=1)
    rows = np.zeros_like(table)
    live = p_u > 0.0
    rows[live] = table[live] / p_u[live, None]
    return p_u, rows


def _log_codebook_size(n: int, rate_bits: float) -> float:
    """ln(2^{n R} - 1), -inf when the book has a single word."""
    t = n * rate_bits * _LN2
    if t <= 0.0:
        return -math.inf
    if t < 30.0:
        words = math.floor(math.exp(t))
        return -math.inf if words <= 1 else math.log(words - 1)
    return t


@dataclass(frozen=True)
class CollisionResult:
    n: int
    rate_grid: tuple
    trials: int
    method: str
    fractions: np.ndarray
    mean_probability: Optional[np.ndarray]

    @property
    def fraction(self) -> float:
        return float(self.fractions[0])


def collision_curve(joint: JointPmf, n: int, rate_grid, cfg: RunConfig,
                    method: str = "conditional") -> CollisionResult:
    """Exact-match collision frequencies across a grid of codebook rates.

    A trial draws the conditioning sequence and the reference codeword, then
    asks whether any of the other 2^{nR} - 1 conditionally independent words
    equals the reference. The conditional method computes that probability
    exactly from the realized reference (it is 1 - (1 - q)^{count} with q the
    word's conditional probability) and flips one coin against it; the same
    coin serves every grid point, so the reported fractions are monotone in
    the rate by construction. The materialize method draws the book
    explicitly and is capped at 2^20 words.
    """
    if method not in ("conditional", "materialize"):
        raise ValidationError(f"unknown collision method {method!r}")
    grid = tuple(float(r) for r in rate_grid)
    if not grid or any(r < 0.0 for r in grid):
        raise ValidationError("rate grid must be nonempty and nonnegative")
    if n > MAX_STEPS:
        raise BudgetError(f"n = {n} exceeds the desk-scale cap {MAX_STEPS}")
    p_u, rows = _conditional_tables(joint)
    cum_u = np.cumsum(p_u)
    cum_x = np.cumsum(rows, axis=1)
    trials = cfg.trials
    label = f"collision/n={n}/alphabet={rows.shape}"
    if method == "materialize":
        fractions = np.empty(len(grid))
        for gi, rate in enumerate(grid):
            if n * rate > 20.0 + 1e-9:
                raise BudgetError(
                    f"codebook of 2^({n}*{rate}) words exceeds the cap 2^20"
                )
            words = int(math.floor(2.0 ** (n * rate)))
            hits = 0
            for trial in range(trials):
                rng = substream(cfg.seed, f"{label}/rate={rate!r}", trial)
                u_seq = np.minimum(np.searchsorted(cum_u, rng.random(n), side="right"),
                                   p_u.size - 1)
                ref = _conditional_draw(cum_x, u_seq, rng)
                remaining = words - 1
                while remaining > 0:
                    block = min(remaining, 8192)
                    cand = _conditional_draw(cum_x, u_seq, rng, count=block)
                    if bool(np.any(np.all(cand == ref[None, :], axis=1))):
                        hits += 1
                        break
                    remaining -= block
            fractions[gi] = hits / trials
        return CollisionResult(n=n, rate_grid=grid, trials=trials, method=method,
                               fractions=fractions, mean_probability=None)
    log_sizes = np.array([_log_codebook_size(n, r) for r in grid])
    probs = np.zeros((trials, len(grid)))
    flips = np.zeros((trials, len(grid)), dtype=bool)
    for trial in range(trials):
        rng = substream(cfg.seed, label, trial)
        u_seq = np.minimum(np.searchsorted(cum_u, rng.random(n), side="right"),
                           p_u.size - 1)
        ref = _conditional_draw(cum_x, u_seq, rng)
        lnq = float(np.log(rows[u_seq, ref]).sum())
        coin = rng.random()
        for gi, log_size in enumerate(log_sizes):
            p = _collision_probability(log_size, lnq)
            probs[trial, gi] = p
            flips[trial, gi] = coin < p
    return CollisionResult(n=n, rate_grid=grid, trials=trials, method="conditional",
                           fractions=flips.mean(axis=0),
                           mean_probability=probs.mean(axis=0))


def _conditional_draw(cum_x: np.ndarray, u_seq: np.ndarray,
                      rng: np.random.Generator, count: Optional[int] = None) -> np.ndarray:
    """Draw one codeword (or ``count`` of them) from prod_i p(x | u_i)."""
    shape = (len(u_seq),) if count is None else (count, len(u_seq))
    draws = rng.random(shape)
    thresholds = cum_x[u_seq][..., :-1]
    return (draws[..., None] >= thresholds).sum(axis=-1)


def _collision_probability(log_size: float, lnq: float) -> float:
    """1 - (1 - e^{lnq})^{count} with count = e^{log_size}, stably."""
    if log_size == -math.inf:
        return 0.0
    if lnq >= 0.0:
        return 1.0
    if lnq > -30.0:
        per_word = -math.log1p(-math.exp(lnq))
        log_total = log_size + math.log(per_word)
    else:
        log_total = log_size + lnq
    if log_total > 700.0:
        return 1.0
    return float(-math.expm1(-math.exp(log_total)))


def collision_experiment(joint: JointPmf, n: int, rate_bits: float, cfg: RunConfig,
                         method: str = "auto") -> CollisionResult:
    """Single-rate collision run; auto materializes when the book fits 2^20."""
    if method == "auto":
        words = 2.0 ** (n * rate_bits)
        method = "materialize" if words <= MAX_CODEBOOK else "conditional"
    return collision_curve(joint, n, (rate_bits,), cfg, method=method)


@dataclass(frozen=True)
class ZEmpiricalResult:
    values: np.ndarray
    counts: np.ndarray
    samples: int
    mean: float
    tv_distance: float
    reference: "IntegerPmf"


def z_empirical(cost: int, p1: float, overlap: bool, cfg: RunConfig) -> ZEmpiricalResult:
    """Per-slot simulation of the recharge time against its closed form.

    Slots draw Bernoulli(p1) charge arrivals until the battery holds the
    cost; the histogram of slot counts is compared to ``z_pmf`` by total
    variation (the reference truncation error is far below the tolerance of
    interest).
    """
    noise = ZNoise(cost=cost, p1=p1, overlap=overlap)
    reference = z_pmf(noise)
    samples = cfg.n
    horizon = int(reference.values[-1]) + 8
    label = f"recharge/cost={cost}/p1={p1!r}/overlap={overlap}"
    rng = substream(cfg.seed, label)
    out = np.empty(samples, dtype=np.int64)
    filled = 0
    while filled < samples:
        batch = min(65536, samples - filled)
        if overlap:
            targets = np.where(rng.random(batch) < p1, cost - 1, cost).astype(np.int64)
        else:
            targets = np.full(batch, cost, dtype=np.int64)
        done = np.zeros(batch, dtype=bool)
        z = np.zeros(batch, dtype=np.int64)
        successes = np.zeros(batch, dtype=np.int64)
        span = horizon
        while not done.all():
            hits = rng.random((int((~done).sum()), span)) < p1
            idx = np.flatnonzero(~done)
            cumhits = np.cumsum(hits, axis=1) + successes[idx][:, None]
            reached = cumhits >= targets[idx][:, None]
            found = reached.any(axis=1)
            first = np.argmax(reached, axis=1)
            z[idx[found]] += first[found] + 1
            done[idx[found]] = True
            rest = idx[~found]
            z[rest] += span
            successes[rest] = cumhits[~found, -1]
            span = max(span, 8)
        zero_target = targets == 0
        z[zero_target] = 0
        out[filled:filled + batch] = z
        filled += batch
    lo = int(min(out.min(), reference.values[0]))
    hi = int(max(out.max(), reference.values[-1]))
    values = np.arange(lo, hi + 1, dtype=np.int64)
    counts = np.bincount(out - lo, minlength=values.size)
    emp = counts / samples
    ref = np.zeros(values.size)
    ref[reference.values - lo] = reference.probs
    tv = 0.5 * float(np.abs(emp - ref).sum())
    return ZEmpiricalResult(values=values, counts=counts, samples=samples,
                            mean=float(out.mean()), tv_distance=tv, reference=reference)


@dataclass(frozen=True)
class CodecConfig:
    """Per-level subcodebook plan for the relay-side decoder experiment.

    ``rate_bits[u]`` is the nominal bits-per-symbol of level u's subcodebook;
    with block length n, level u gets a subcodeword of length
    floor(n * (pi_u - slack)) and a book of 2^floor(length * rate) words.
    ``pad`` bounds the extra symbols emitted after a subcodeword is spent;
    None sizes it so padding can never run out.
    """

    spec: BatterySpec
    policy: StatePolicy
    rate_bits: tuple
    slack: float
    pad: Optional[int] = None

    def __post_init__(self):
        if self.policy.mode != "joint":
            raise ValidationError("the codec experiment drives a joint per-level policy")
        if self.policy.spec != self.spec:
            raise ValidationError("policy was built for a different battery geometry")
        rates = tuple(float(r) for r in self.rate_bits)
        if len(rates) != self.spec.states:
            raise ValidationError("need one subcodebook rate per battery level")
        if any(r < 0.0 for r in rates):
            raise ValidationError("subcodebook rates must be nonnegative")
        object.__setattr__(self, "rate_bits", rates)
        if not 0.0 < self.slack < 1.0:
            raise ValidationError("occupancy slack must lie in (0, 1)")
        if self.pad is not None and self.pad < 0:
            raise ValidationError("pad length must be nonnegative")

    def plan(self, n: int, pi: np.ndarray):
        """Subcodeword lengths and allocated bits at block length n."""
        lengths = np.floor(n * np.maximum(pi - self.slack, 0.0)).astype(np.int64)
        bits = np.floor(lengths * np.asarray(self.rate_bits)).astype(np.int64)
        bits[lengths == 0] = 0
        return lengths, bits


@dataclass(frozen=True)
class CodecResult:
    n: int
    blocks: int
    trials: int
    p_incomplete: np.ndarray
    p_ambiguous: np.ndarray
    p_either: np.ndarray
    subcode_lengths: np.ndarray
    bits_allocated: np.ndarray

    @property
    def total_bits(self) -> int:
        return int(self.bits_allocated.sum())


def relay_codec_trial(codec: CodecConfig, blocks: int, cfg: RunConfig) -> CodecResult:
    """Frequencies of the relay decoder's two error events, per block.

    Encoding walks the battery chain with a cursor per level: while at level
    u the source emits the next symbol of level u's subcodeword (then pad
    symbols, same law), the relay draws its symbol from the policy
    conditional, and the level updates noiselessly. A block fails with an
    incomplete reception when some level is visited fewer times than its
    subcodeword length, and with an ambiguous reception when another word of
    some level's book matches the received subcodeword exactly; the latter
    probability is computed exactly from the realized word and decided by
    one coin. Blocks after the first force-charge the battery to full (at
    most capacity extra slots) so every block starts from a known level.
    """
    if blocks < 1:
        raise ValidationError("need at least one block")
    spec, policy = codec.spec, codec.policy
    n = cfg.n
    arrival = ArrivalModel.deterministic()
    kernel = build_kernel(spec, policy, arrival)
    pi = stationary(kernel).probs
    lengths, bits = codec.plan(n, pi)
    if int(lengths.sum()) > n:
        raise ValidationError("subcodeword lengths exceed the block length")
    pad = codec.pad if codec.pad is not None else n
    joint = policy.tensor()
    source_rows = joint.sum(axis=2)
    p_x1 = source_rows[:, 1].tolist()
    spend_given = np.zeros((spec.states, 2))
    for u in range(spec.states):
        for x1 in (0, 1):
            row = joint[u, x1]
            total = row.sum()
            spend_given[u, x1] = row[1] / total if total > 0.0 else 0.0
    spend_given = spend_given.tolist()
    log_rows = np.full((spec.states, 2), -np.inf)
    np.log(source_rows, out=log_rows, where=source_rows > 0.0)
    log_rows = log_rows.tolist()
    pi_cum = np.cumsum(pi)
    incomplete = np.zeros(blocks, dtype=np.int64)
    ambiguous = np.zeros(blocks, dtype=np.int64)
    either = np.zeros(blocks, dtype=np.int64)
    label = f"codec/n={n}/blocks={blocks}"
    for trial in range(cfg.trials):
        rng = substream(cfg.seed, label, trial)
        stock = _UniformStock(rng, chunk=4 * n)
        level = _draw_index(pi_cum, rng)
        for b in range(blocks):
            if b > 0:
                forced = 0
                while level < spec.capacity and forced <= spec.capacity:
                    level = min(level + 1, spec.capacity)
                    forced += 1
            visits = [0] * spec.states
            lnq = [0.0] * spec.states
            overrun = False
            take = stock.take
            cost, cap = spec.cost, spec.capacity
            want = lengths.tolist()
            for _ in range(n):
                seen = visits[level]
                x1 = 1 if take() < p_x1[level] else 0
                if seen < want[level]:
                    lnq[level] += log_rows[level][x1]
                elif seen >= want[level] + pad:
                    overrun = True
                visits[level] = seen + 1
                x2 = 1 if take() < spend_given[level][x1] else 0
                nxt = level + x1 - cost * x2
                level = cap if nxt > cap else nxt
            miss = any(v < w for v, w in zip(visits, want)) or overrun
            log_total = -math.inf
            for u in range(spec.states):
                if bits[u] == 0 or visits[u] < lengths[u]:
                    continue
                count = (1 << int(bits[u])) - 1
                if count == 0:
                    continue
                term = _per_book_exponent(float(lnq[u]), count)
                log_total = np.logaddexp(log_total, term)
            p_amb = 0.0 if log_total == -math.inf else float(
                -math.expm1(-min(math.exp(min(log_total, 700.0)), math.inf))
            )
            clash = stock.take() < p_amb
            incomplete[b] += miss
            ambiguous[b] += clash
            either[b] += miss or clash
    t = float(cfg.trials)
    return CodecResult(n=n, blocks=blocks, trials=cfg.trials,
                       p_incomplete=incomplete / t, p_ambiguous=ambiguous / t,
                       p_either=either / t, subcode_lengths=lengths,
                       bits_allocated=bits)


def _per_book_exponent(lnq: float, count: int) -> float:
    """ln( count * -log1p(-q) ): summand of the no-collision exponent."""
    if lnq >= 0.0:
        return math.inf
    log_count = math.log(count)
    if lnq > -30.0:
        return log_count + math.log(-math.log1p(-math.exp(lnq)))
    return log_count + lnq


@dataclass(frozen=True)
class ReceiverSmokeResult:
    n: int
    message_bits: int
    trials: int
    p_error: float


def receiver_smoke_trial(chain: PairChain, ch2: BinaryChannel, message_bits: int,
                         cfg: RunConfig) -> ReceiverSmokeResult:
    """Tiny end-to-end destination decode over an explicit codebook.

    Each trial draws 2^message_bits relay sequences from the pair chain,
    sends the first through the second hop, and decodes by the largest exact
    joint score: the forward-recursion probability of the candidate sequence
    plus the memoryless channel term. Capped at 12 message bits; this is a
    smoke test, not a rate claim.
    """
    if message_bits < 1 or message_bits > 12:
        raise BudgetError("receiver smoke test supports 1..12 message bits")
    words = 1 << message_bits
    n = cfg.n
    pair_cum = np.cumsum(chain.pi)
    errors = 0
    label = f"receiver/n={n}/bits={message_bits}"
    for trial in range(cfg.trials):
        rng = substream(cfg.seed, label, trial)
        book = np.empty((words, n), dtype=np.int8)
        for w in range(words):
            start = _draw_index(pair_cum, rng)
            book[w] = chain.emissions[sample_path(chain.transition, start, n, rng)]
        x2 = book[0]
        p_one = np.where(x2 == 1, ch2.q2, 1.0 - ch2.q1)
        y = (rng.random(n) < p_one).astype(np.int8)
        scores = _batched_chain_scores(chain, book)
        channel_rows = ch2.rows
        terms = channel_rows[book, y[None, :]]
        with np.errstate(divide="ignore"):
            scores = scores + np.log(terms).sum(axis=1)
        if int(np.argmax(scores)) != 0:
            errors += 1
    return ReceiverSmokeResult(n=n, message_bits=message_bits, trials=cfg.trials,
                               p_error=errors / float(cfg.trials))


def _batched_chain_scores(chain: PairChain, sequences: np.ndarray) -> np.ndarray:
    """log P(sequence) under the pair chain, one row per candidate."""
    emit = chain.emissions
    b = np.zeros((2, emit.size))
    b[0, emit == 0] = 1.0
    b[1, emit == 1] = 1.0
    steps = np.stack([chain.transition * b[y][None, :] for y in (0, 1)])
    alpha = chain.pi[None, :] * b[sequences[:, 0]]
    scores = np.zeros(sequences.shape[0])
    for i in range(sequences.shape[1]):
        if i > 0:
            alpha = np.einsum("ws,wsk->wk", alpha, steps[sequences[:, i]])
        scale = alpha.sum(axis=1)
        dead = scale <= 0.0
        if np.any(dead):
            scores[dead] = -np.inf
            scale = np.where(dead, 1.0, scale)
        scores = scores + np.where(dead, 0.0, np.log(scale))
        alpha = alpha / scale[:, None]
    return scores
