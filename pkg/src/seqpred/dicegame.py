"""Betting game against a dealer who picks between two biased dice.

Each round the dealer applies a deterministic rule to the outcome
history, rolls the selected die, and the player stakes a fixed amount
on a color call; a correct call wins a fixed payout.  Outcome bit 1 is
white, bit 0 is black.  Die 1 shows white with probability 1/3 and die
2 with probability 2/3, so the best informed call always errs with
probability 1/3 and the game is profitable exactly when the per-round
error rate stays below 1 - stake/payout.

The dealer rule family shipped here (constant die, round alternation,
one-bit outcome feedback, and two three-bit automata) is a design
choice: any deterministic rule works, but a small enumerable family
with index-code prior weights makes the complexity of each rule an
exact, inspectable number and the turnaround analysis fully
computable.

Money is integer cents everywhere; expected-value mode produces
fractional cents and keeps them as floats.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .measures import BinaryString, MeasureCursor, MeasureError, SequenceMeasure
from .numerics import fmt17
from .predictors import Predictor, deterministic_wrap
from .universal import MixtureMeasure, WeightedClass

DEFAULT_STAKE_CENTS = 300
DEFAULT_PAYOUT_CENTS = 500


class GameError(MeasureError):
    """Invalid game configuration or an impossible request."""


@dataclass(frozen=True)
class GameSpec:
    """Stakes and dice for the betting game.

    A zero stake is allowed (free bets) so the limiting coefficient in
    the turnaround analysis is reachable; the payout must exceed the
    stake or no strategy can ever profit.
    """

    stake_cents: int = DEFAULT_STAKE_CENTS
    payout_cents: int = DEFAULT_PAYOUT_CENTS
    die1_white: Fraction = Fraction(1, 3)
    die2_white: Fraction = Fraction(2, 3)

    def __post_init__(self):
        if not isinstance(self.stake_cents, int) or not isinstance(
            self.payout_cents, int
        ):
            raise GameError("stake and payout must be integer cents")
        if not 0 <= self.stake_cents < self.payout_cents:
            raise GameError(
                f"need payout > stake >= 0, got stake {self.stake_cents} "
                f"and payout {self.payout_cents}"
            )
        for label, p in (("die1", self.die1_white), ("die2", self.die2_white)):
            if not 0 < p < 1:
                raise GameError(f"{label} white probability {p} not in (0, 1)")

    def white_probability(self, die: int) -> Fraction:
        if die == 1:
            return self.die1_white
        if die == 2:
            return self.die2_white
        raise GameError(f"die must be 1 or 2, got {die}")

    @property
    def winning_threshold(self) -> Fraction:
        """Per-round error rate below which the game turns profitable."""
        return 1 - Fraction(self.stake_cents, self.payout_cents)


@dataclass(frozen=True)
class DealerRule:
    """Deterministic die selection as a finite state machine.

    transition maps (state, outcome bit) to the next state and die_of
    maps a state to the die rolled there.  Both must be total on the
    reachable states; the measure walks them one outcome at a time.
    """

    name: str
    start_state: object
    transition: object
    die_of: object

    def die_sequence(self, outcomes) -> list:
        """Dice chosen along a fixed outcome history, for inspection."""
        state = self.start_state
        dice = []
        for bit in outcomes:
            dice.append(self.die_of(state))
            state = self.transition(state, bit)
        dice.append(self.die_of(state))
        return dice


def _constant(die: int) -> DealerRule:
    return DealerRule(
        name=f"constant-die{die}",
        start_state=None,
        transition=lambda state, bit: None,
        die_of=lambda state: die,
    )


def _alternating(first: int) -> DealerRule:
    second = 3 - first
    return DealerRule(
        name=f"alternate-{first}{second}",
        start_state=0,
        transition=lambda state, bit: state ^ 1,
        die_of=lambda state: first if state == 0 else second,
    )


def _feedback(repeat: bool) -> DealerRule:
    # After a white outcome pick the white-leaning die 2 (repeat) or the
    # black-leaning die 1 (oppose); round one behaves as if after black.
    if repeat:
        return DealerRule(
            name="feedback-repeat",
            start_state=0,
            transition=lambda state, bit: bit,
            die_of=lambda state: 2 if state == 1 else 1,
        )
    return DealerRule(
        name="feedback-oppose",
        start_state=0,
        transition=lambda state, bit: bit,
        die_of=lambda state: 1 if state == 1 else 2,
    )


def _majority3() -> DealerRule:
    # State is the last three outcomes, oldest first, seeded with black.
    return DealerRule(
        name="majority3",
        start_state=(0, 0, 0),
        transition=lambda state, bit: state[1:] + (bit,),
        die_of=lambda state: 2 if sum(state) >= 2 else 1,
    )


def _parity3() -> DealerRule:
    return DealerRule(
        name="parity3",
        start_state=(0, 0, 0),
        transition=lambda state, bit: state[1:] + (bit,),
        die_of=lambda state: 2 if (state[0] ^ state[1] ^ state[2]) else 1,
    )


DEALER_RULES = (
    _constant(1),
    _constant(2),
    _alternating(1),
    _alternating(2),
    _feedback(True),
    _feedback(False),
    _majority3(),
    _parity3(),
)


def dealer_rule(name: str) -> DealerRule:
    for rule in DEALER_RULES:
        if rule.name == name:
            return rule
    known = [rule.name for rule in DEALER_RULES]
    raise GameError(f"unknown dealer rule {name!r}; known rules: {known}")


class GameMeasure(SequenceMeasure):
    """Outcome distribution induced by a dealer rule and the two dice."""

    def __init__(self, rule: DealerRule, spec: GameSpec | None = None):
        self.rule = rule
        self.spec = spec if spec is not None else GameSpec()
        self.name = f"game({rule.name})"

    def _white(self, state) -> float:
        return float(self.spec.white_probability(self.rule.die_of(state)))

    def log_prefix_probability(self, s: BinaryString) -> float:
        state = self.rule.start_state
        total = 0.0
        for bit in s:
            p = self._white(state)
            total += math.log(p if bit == 1 else 1.0 - p)
            state = self.rule.transition(state, bit)
        return total

    def conditional(self, context: BinaryString, bit: int) -> float:
        state = self.rule.start_state
        for seen in context:
            state = self.rule.transition(state, seen)
        p = self._white(state)
        return p if bit == 1 else 1.0 - p

    def cursor(self) -> "_GameCursor":
        return _GameCursor(self, self.rule.start_state, 0.0)


class _GameCursor(MeasureCursor):
    __slots__ = ("state",)

    def __init__(self, measure, state, log_probability):
        self.measure = measure
        self.state = state
        self.log_probability = log_probability

    def conditional(self, bit: int) -> float:
        p = self.measure._white(self.state)
        return p if bit == 1 else 1.0 - p

    def advanced(self, bit: int) -> "_GameCursor":
        p = self.conditional(bit)
        lp = self.log_probability + (math.log(p) if p > 0.0 else -math.inf)
        return _GameCursor(
            self.measure, self.measure.rule.transition(self.state, bit), lp,
        )


def dealer_class(spec: GameSpec | None = None) -> WeightedClass:
    """All shipped dealer rules as game measures with index-code weights.

    The prior weight of rule number i is 2^-(2 floor(log2 i) + 1), so
    the exact description complexity of each rule inside this family is
    the class's complexity surrogate.
    """
    measures = [GameMeasure(rule, spec) for rule in DEALER_RULES]
    return WeightedClass.with_index_code_weights(measures)


def rule_mixture(spec: GameSpec | None = None) -> MixtureMeasure:
    """Bayes mixture over the shipped dealer family."""
    return MixtureMeasure(dealer_class(spec), name="dealer-mixture")


def profit(n: int, errors, spec: GameSpec | None = None):
    """Cents won after n rounds with the given (possibly expected) errors.

    Affine and strictly decreasing in the error count; exact when given
    int or Fraction errors.
    """
    spec = spec if spec is not None else GameSpec()
    if n < 0:
        raise GameError(f"round count must be nonnegative, got {n}")
    if not 0 <= errors <= n:
        raise GameError(f"errors must lie in [0, {n}], got {errors}")
    return (n - errors) * spec.payout_cents - n * spec.stake_cents


def turnaround_coefficient(spec: GameSpec, per_round_error):
    """Rounds per nat of prior penalty before profit must appear.

    Exact arithmetic when the error rate is a Fraction; the defaults
    with an error rate of 1/3 give exactly 330.
    """
    threshold = spec.winning_threshold
    if not per_round_error < threshold:
        raise GameError(
            f"game not winnable: per-round error {per_round_error} is not "
            f"below 1 - stake/payout = {threshold}"
        )
    if per_round_error < 0:
        raise GameError(f"per-round error must be nonnegative, got {per_round_error}")
    return 2 * (threshold + per_round_error) / (threshold - per_round_error) ** 2


def turnaround_bound(
    complexity_bits: float,
    spec: GameSpec | None = None,
    per_round_error=Fraction(1, 3),
) -> float:
    """Rounds after which mean profit of the mixture caller must be positive.

    The bound is conservative; empirically the crossing happens much
    earlier for every shipped rule.
    """
    spec = spec if spec is not None else GameSpec()
    if complexity_bits < 0:
        raise GameError(f"complexity must be nonnegative, got {complexity_bits}")
    coefficient = turnaround_coefficient(spec, per_round_error)
    return float(coefficient) * math.log(2.0) * complexity_bits


@dataclass(frozen=True)
class ProfitTrace:
    """Round-by-round ledger of one simulated game."""

    rule_name: str
    predictor_name: str
    mode: str
    seed: object
    stake_cents: int
    payout_cents: int
    outcomes: tuple
    cumulative_profit: tuple
    cumulative_errors: tuple

    @property
    def rounds(self) -> int:
        return len(self.outcomes)

    @property
    def final_profit(self):
        return self.cumulative_profit[-1] if self.outcomes else 0

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["round", "cumulative_profit_cents", "cumulative_errors"])
            for i in range(self.rounds):
                writer.writerow([
                    i + 1,
                    _cell(self.cumulative_profit[i]),
                    _cell(self.cumulative_errors[i]),
                ])


def _cell(value):
    return fmt17(value) if isinstance(value, float) else value


def play(
    spec: GameSpec,
    rule: DealerRule,
    predictor: Predictor,
    n: int,
    seed,
    mode: str = "sampled",
) -> ProfitTrace:
    """Simulate n rounds of the game with one predictor.

    Each round draws the outcome first and the prediction second from a
    single per-game stream, so traces are reproducible from the seed
    alone.  In sampled mode a probabilistic caller bets a coin flip
    with its own probability; in expected mode the ledger accrues the
    exact conditional expectation of profit and errors instead.
    """
    if n < 1:
        raise GameError(f"round count must be >= 1, got {n}")
    if mode not in ("sampled", "expected"):
        raise GameError(f"mode must be 'sampled' or 'expected', got {mode!r}")
    rng = np.random.default_rng(seed)
    env = GameMeasure(rule, spec).cursor()
    caller = predictor.cursor()
    outcomes = []
    profits = []
    errors = []
    running_profit = 0 if mode == "sampled" else 0.0
    running_errors = 0 if mode == "sampled" else 0.0
    for _ in range(n):
        p_white = env.conditional(1)
        outcome = 1 if rng.random() < p_white else 0
        call_white = caller.probability_of_one()
        if mode == "sampled":
            call = 1 if rng.random() < call_white else 0
            wrong = int(call != outcome)
            running_errors += wrong
            running_profit += (1 - wrong) * spec.payout_cents - spec.stake_cents
        else:
            p_correct = call_white if outcome == 1 else 1.0 - call_white
            running_errors += 1.0 - p_correct
            running_profit += p_correct * spec.payout_cents - spec.stake_cents
        outcomes.append(outcome)
        profits.append(running_profit)
        errors.append(running_errors)
        env = env.advanced(outcome)
        caller = caller.advanced(outcome)
    return ProfitTrace(
        rule_name=rule.name,
        predictor_name=predictor.name,
        mode=mode,
        seed=seed,
        stake_cents=spec.stake_cents,
        payout_cents=spec.payout_cents,
        outcomes=tuple(outcomes),
        cumulative_profit=tuple(profits),
        cumulative_errors=tuple(errors),
    )


def mean_profit_trace(traces) -> np.ndarray:
    """Mean cumulative profit per round across games, in cents."""
    traces = list(traces)
    if not traces:
        raise GameError("need at least one trace")
    rounds = {t.rounds for t in traces}
    if len(rounds) != 1:
        raise GameError(f"traces disagree on length: {sorted(rounds)}")
    return np.mean([t.cumulative_profit for t in traces], axis=0)


def first_profitable_round(values) -> int | None:
    """First 1-based round with positive cumulative profit, if any."""
    for i, v in enumerate(values):
        if v > 0:
            return i + 1
    return None


@dataclass(frozen=True)
class TurnaroundResult:
    """Empirical mixture-caller turnaround against the analytic bound."""

    rule_name: str
    games: int
    rounds: int
    seed: int
    mode: str
    complexity_bits: float
    bound_rounds: float
    crossing_round: int | None
    mean_final_profit: float

    @property
    def within_bound(self) -> bool:
        return self.crossing_round is not None and (
            self.crossing_round <= self.bound_rounds
        )

    def to_dict(self) -> dict:
        return {
            "rule": self.rule_name,
            "games": self.games,
            "rounds": self.rounds,
            "seed": self.seed,
            "mode": self.mode,
            "complexity_bits": self.complexity_bits,
            "bound_rounds": self.bound_rounds,
            "crossing_round": self.crossing_round,
            "mean_final_profit_cents": self.mean_final_profit,
            "within_bound": self.within_bound,
        }


def run_turnaround_experiment(
    rule: DealerRule,
    spec: GameSpec | None = None,
    rounds: int = 400,
    games: int = 100,
    seed: int = 0,
    mode: str = "sampled",
) -> TurnaroundResult:
    """Average the mixture caller over seeded games and find the crossing.

    The caller thresholds the dealer-family mixture; its exact
    complexity inside the family prices the analytic bound.  Game g
    uses the derived seed (seed, g), so results do not depend on
    scheduling or on how many games run.
    """
    spec = spec if spec is not None else GameSpec()
    weighted = dealer_class(spec)
    caller = deterministic_wrap(MixtureMeasure(weighted, name="dealer-mixture"))
    bits = weighted.complexity_surrogate(f"game({rule.name})")
    informed_error = max(
        min(spec.die1_white, 1 - spec.die1_white),
        min(spec.die2_white, 1 - spec.die2_white),
    )
    traces = [
        play(spec, rule, caller, rounds, seed=(seed, g), mode=mode)
        for g in range(games)
    ]
    mean_trace = mean_profit_trace(traces)
    return TurnaroundResult(
        rule_name=rule.name,
        games=games,
        rounds=rounds,
        seed=seed,
        mode=mode,
        complexity_bits=bits,
        bound_rounds=turnaround_bound(bits, spec, informed_error),
        crossing_round=first_profitable_round(mean_trace),
        mean_final_profit=float(mean_trace[-1]),
    )
