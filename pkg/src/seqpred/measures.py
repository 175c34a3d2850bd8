"""Binary strings and probability measures over infinite bit sequences.

A measure is specified by its prefix probabilities rho(s) with rho(empty) = 1
and rho(s0) + rho(s1) = rho(s).  Conditioning follows the Bayes ratio
rho(b | s) = rho(sb) / rho(s); probabilities are accumulated in log space so
long horizons do not underflow.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np

NULL_EVENT_MESSAGE = "conditioning on null event"


class MeasureError(ValueError):
    """Invalid measure parameters or an operation outside the contract."""


class NullEventError(MeasureError):
    """Raised when conditioning on a context of probability zero."""


@dataclass(frozen=True)
class BinaryString:
    """Immutable finite string over the alphabet {0, 1}."""

    bits: tuple[int, ...] = ()

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise MeasureError(f"bits must be 0 or 1, got {self.bits!r}")

    @classmethod
    def parse(cls, text: str) -> "BinaryString":
        if any(ch not in "01" for ch in text):
            raise MeasureError(f"cannot parse {text!r} as a binary string")
        return cls(tuple(int(ch) for ch in text))

    @classmethod
    def empty(cls) -> "BinaryString":
        return cls(())

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)

    def extended(self, bit: int) -> "BinaryString":
        if bit not in (0, 1):
            raise MeasureError(f"bit must be 0 or 1, got {bit!r}")
        return BinaryString(self.bits + (bit,))

    def prefix(self, length: int) -> "BinaryString":
        if not 0 <= length <= len(self.bits):
            raise MeasureError(f"prefix length {length} out of range")
        return BinaryString(self.bits[:length])

    def count(self, bit: int) -> int:
        return self.bits.count(bit)


EMPTY = BinaryString.empty()


class SequenceMeasure(ABC):
    """A probability measure on one-way infinite binary sequences."""

    name: str = "measure"

    @abstractmethod
    def log_prefix_probability(self, s: BinaryString) -> float:
        """ln rho(s); -inf encodes probability zero."""

    def prefix_probability(self, s: BinaryString) -> float:
        return math.exp(self.log_prefix_probability(s))

    def conditional(self, context: BinaryString, bit: int) -> float:
        """rho(bit | context) via the probability ratio.

        Families override this with closed forms where one exists; the
        default keeps the ratio route available as a cross-check.
        """
        lp_ctx = self.log_prefix_probability(context)
        if lp_ctx == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        lp_ext = self.log_prefix_probability(context.extended(bit))
        return math.exp(lp_ext - lp_ctx)

    def cursor(self) -> "MeasureCursor":
        """Stateful reader positioned at the empty context."""
        return MeasureCursor(self, EMPTY, 0.0)

    def sample_path(self, n: int, seed: int) -> BinaryString:
        """Draw x_1..x_n by sampling each conditional in turn."""
        if n < 0:
            raise MeasureError(f"path length must be nonnegative, got {n}")
        rng = np.random.default_rng(seed)
        uniforms = rng.random(n)
        cur = self.cursor()
        bits = []
        for k in range(n):
            p1 = cur.conditional(1)
            bit = 1 if uniforms[k] < p1 else 0
            bits.append(bit)
            cur = cur.advanced(bit)
        return BinaryString(tuple(bits))


class MeasureCursor:
    """Incremental view of a measure along a growing context.

    Cursors are immutable; advanced() returns a new cursor, so branching
    enumerations can share a parent cursor between both children.
    """

    __slots__ = ("measure", "context", "log_probability")

    def __init__(self, measure, context, log_probability):
        self.measure = measure
        self.context = context
        self.log_probability = log_probability

    def conditional(self, bit: int) -> float:
        if self.log_probability == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        return self.measure.conditional(self.context, bit)

    def advanced(self, bit: int) -> "MeasureCursor":
        p = self.conditional(bit)
        lp = self.log_probability + (math.log(p) if p > 0.0 else -math.inf)
        return MeasureCursor(self.measure, self.context.extended(bit), lp)


def chain_probability(measure: SequenceMeasure, s: BinaryString) -> float:
    """Product of conditionals along s; must match prefix_probability."""
    log_total = 0.0
    cur = measure.cursor()
    for bit in s:
        p = cur.conditional(bit)
        if p <= 0.0:
            return 0.0
        log_total += math.log(p)
        cur = cur.advanced(bit)
    return math.exp(log_total)


class BernoulliMeasure(SequenceMeasure):
    """I.i.d. coin flips with P(bit = 1) = theta, theta strictly inside (0, 1)."""

    def __init__(self, theta: float, name: str | None = None):
        if not 0.0 < theta < 1.0:
            raise MeasureError(
                f"theta must lie strictly inside (0, 1), got {theta}; "
                "use a deterministic measure for point masses"
            )
        self.theta = float(theta)
        self.name = name if name is not None else f"bernoulli({self.theta:g})"
        self._log_theta = math.log(self.theta)
        self._log_comp = math.log1p(-self.theta)

    def log_prefix_probability(self, s: BinaryString) -> float:
        ones = s.count(1)
        return ones * self._log_theta + (len(s) - ones) * self._log_comp

    def conditional(self, context: BinaryString, bit: int) -> float:
        return self.theta if bit == 1 else 1.0 - self.theta

    def cursor(self) -> MeasureCursor:
        return _BernoulliCursor(self, EMPTY, 0.0)


class _BernoulliCursor(MeasureCursor):
    __slots__ = ()

    def conditional(self, bit: int) -> float:
        m = self.measure
        return m.theta if bit == 1 else 1.0 - m.theta

    def advanced(self, bit: int) -> "_BernoulliCursor":
        lp = self.log_probability + (
            self.measure._log_theta if bit == 1 else self.measure._log_comp
        )
        # The context tuple is not carried; Bernoulli conditionals ignore it.
        return _BernoulliCursor(self.measure, EMPTY, lp)


class MarkovMeasure(SequenceMeasure):
    """Finite-order Markov chain on bits, order at most 4.

    The table maps every bit pattern of length <= order to P(next bit = 1)
    given that the last min(position, order) bits spell the pattern.  The
    short patterns (including the empty one) cover the start of the
    sequence before a full window is available.
    """

    MAX_ORDER = 4

    def __init__(self, order: int, table, name: str | None = None):
        if not 1 <= order <= self.MAX_ORDER:
            raise MeasureError(
                f"order must be between 1 and {self.MAX_ORDER}, got {order}"
            )
        self.order = order
        normalized: dict[str, float] = {}
        for key, value in dict(table).items():
            if any(ch not in "01" for ch in key) or len(key) > order:
                raise MeasureError(f"bad Markov table key {key!r}")
            if not 0.0 < value < 1.0:
                raise MeasureError(
                    f"transition probabilities must lie strictly inside (0, 1), "
                    f"got {key!r}: {value}"
                )
            normalized[key] = float(value)
        required = [
            format(i, f"0{width}b") if width else ""
            for width in range(order + 1)
            for i in range(2**width)
        ]
        missing = [key for key in required if key not in normalized]
        if missing:
            raise MeasureError(f"Markov table is missing patterns: {missing}")
        self.table = normalized
        self.name = name if name is not None else f"markov{order}"

    def _pattern(self, bits: tuple[int, ...]) -> str:
        window = bits[-self.order:] if len(bits) > self.order else bits
        return "".join(str(b) for b in window)

    def conditional(self, context: BinaryString, bit: int) -> float:
        p1 = self.table[self._pattern(context.bits)]
        return p1 if bit == 1 else 1.0 - p1

    def log_prefix_probability(self, s: BinaryString) -> float:
        total = 0.0
        bits = s.bits
        for k, bit in enumerate(bits):
            p1 = self.table[self._pattern(bits[:k])]
            total += math.log(p1 if bit == 1 else 1.0 - p1)
        return total

    def cursor(self) -> MeasureCursor:
        return _MarkovCursor(self, (), 0.0)

    @classmethod
    def random(cls, order: int, rng, low: float = 0.1, high: float = 0.9,
               name: str | None = None) -> "MarkovMeasure":
        table = {}
        for width in range(order + 1):
            for i in range(2**width):
                key = format(i, f"0{width}b") if width else ""
                table[key] = float(rng.uniform(low, high))
        return cls(order, table, name=name)


class _MarkovCursor(MeasureCursor):
    """Carries only the last `order` bits instead of the full context."""

    __slots__ = ()

    def conditional(self, bit: int) -> float:
        p1 = self.measure.table[self.measure._pattern(self.context)]
        return p1 if bit == 1 else 1.0 - p1

    def advanced(self, bit: int) -> "_MarkovCursor":
        p = self.conditional(bit)
        window = (self.context + (bit,))[-self.measure.order:]
        return _MarkovCursor(self.measure, window, self.log_probability + math.log(p))


class DeterministicMeasure(SequenceMeasure):
    """Point mass on the single sequence produced by a generator function."""

    def __init__(self, generator, name: str):
        self.generator = generator
        self.name = name

    def target_bit(self, index: int) -> int:
        bit = self.generator(index)
        if bit not in (0, 1):
            raise MeasureError(
                f"generator {self.name!r} returned {bit!r} at index {index}"
            )
        return bit

    def log_prefix_probability(self, s: BinaryString) -> float:
        for i, bit in enumerate(s):
            if bit != self.target_bit(i):
                return -math.inf
        return 0.0

    def conditional(self, context: BinaryString, bit: int) -> float:
        if self.log_prefix_probability(context) == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        return 1.0 if bit == self.target_bit(len(context)) else 0.0

    def cursor(self) -> MeasureCursor:
        return _DeterministicCursor(self, 0, 0.0)


class _DeterministicCursor(MeasureCursor):
    """Tracks only the position; context is the target prefix by construction."""

    __slots__ = ()

    def conditional(self, bit: int) -> float:
        if self.log_probability == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        return 1.0 if bit == self.measure.target_bit(self.context) else 0.0

    def advanced(self, bit: int) -> "_DeterministicCursor":
        p = self.conditional(bit)
        lp = self.log_probability if p == 1.0 else -math.inf
        return _DeterministicCursor(self.measure, self.context + 1, lp)


def named_generator(name: str, fuel: int = 100_000):
    """Resolve a generator spec: "alternating", "ones", "zeros", "program:<hex>".

    The program form runs the register machine on the hex-encoded program
    and serves its output bits; reading past the produced output raises.
    """
    if name == "alternating":
        return lambda i: i % 2
    if name == "ones":
        return lambda i: 1
    if name == "zeros":
        return lambda i: 0
    if name.startswith("program:"):
        from .semimeasure import RegisterMachine, program_bits_from_hex

        program = program_bits_from_hex(name[len("program:"):])
        output, _status = RegisterMachine().run(program, fuel)

        def bit_at(index: int, _out=output):
            if index >= len(_out):
                raise MeasureError(
                    f"{name!r} produced only {len(_out)} bits; "
                    f"index {index} is out of range"
                )
            return _out[index]

        return bit_at
    raise MeasureError(f"unknown generator {name!r}")


def deterministic(name: str, fuel: int = 100_000) -> DeterministicMeasure:
    """Deterministic measure from a named generator."""
    return DeterministicMeasure(named_generator(name, fuel=fuel), name)
