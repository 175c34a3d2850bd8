"""Weighted classes of measures and their Bayesian mixture.

The mixture assigns xi(s) = sum_i w_i nu_i(s) / sum_i w_i, so xi(empty) = 1
and every component is majorized: w_i * nu_i(s) <= (sum w) * xi(s).  The
negative log of a component's normalized prior weight acts as its
description-length surrogate in bits.
"""

from __future__ import annotations

import math

from .measures import (
    EMPTY,
    BinaryString,
    MeasureCursor,
    MeasureError,
    NullEventError,
    NULL_EVENT_MESSAGE,
    SequenceMeasure,
)
from .numerics import logsumexp

KRAFT_TOLERANCE = 1e-12


class ClassError(MeasureError):
    """Invalid weighted-class construction."""


def index_code_length(i: int) -> int:
    """Bits needed to name index i >= 1 in a self-delimiting index code."""
    if i < 1:
        raise ClassError(f"index must be >= 1, got {i}")
    return 2 * i.bit_length() - 1


def default_weights(count: int) -> tuple[float, ...]:
    """Prior weights 2**-len(code(i)) for i = 1..count; sums below 1."""
    return tuple(2.0 ** -index_code_length(i) for i in range(1, count + 1))


class WeightedClass:
    """Finite ordered collection of measures with positive prior weights."""

    def __init__(self, components):
        comps = tuple((m, float(w)) for m, w in components)
        if not comps:
            raise ClassError("a weighted class needs at least one component")
        names = [m.name for m, _ in comps]
        if len(set(names)) != len(names):
            raise ClassError(f"component names must be unique, got {names}")
        for m, w in comps:
            if not w > 0.0:
                raise ClassError(f"weight for {m.name!r} must be positive, got {w}")
        total = math.fsum(w for _, w in comps)
        if total > 1.0 + KRAFT_TOLERANCE:
            raise ClassError(
                f"weights sum to {total}, above 1; not a Kraft-style prior"
            )
        self.components = comps
        self.weight_sum = total

    @classmethod
    def with_index_code_weights(cls, measures) -> "WeightedClass":
        measures = list(measures)
        return cls(zip(measures, default_weights(len(measures))))

    @classmethod
    def uniform(cls, measures) -> "WeightedClass":
        measures = list(measures)
        if not measures:
            raise ClassError("a weighted class needs at least one component")
        w = 1.0 / len(measures)
        return cls((m, w) for m in measures)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def measures(self):
        return tuple(m for m, _ in self.components)

    def names(self):
        return tuple(m.name for m, _ in self.components)

    def weight_of(self, name: str) -> float:
        for m, w in self.components:
            if m.name == name:
                return w
        raise ClassError(f"no component named {name!r}")

    def complexity_surrogate(self, name: str) -> float:
        """-log2 of the normalized prior weight of the named component."""
        return -math.log2(self.weight_of(name) / self.weight_sum)

    def entropy_budget_nats(self, name: str) -> float:
        """ln((sum w) / w_name); caps the cumulative relative entropy."""
        return math.log(self.weight_sum / self.weight_of(name))


class MixtureMeasure(SequenceMeasure):
    """Prior-weighted average of the class components, normalized at the root."""

    def __init__(self, weighted_class: WeightedClass, name: str = "mixture"):
        self.weighted_class = weighted_class
        self.name = name
        self._log_weights = tuple(
            math.log(w) for _, w in weighted_class.components
        )
        self._log_weight_sum = math.log(weighted_class.weight_sum)

    def log_prefix_probability(self, s: BinaryString) -> float:
        terms = [
            lw + m.log_prefix_probability(s)
            for (m, _), lw in zip(self.weighted_class.components, self._log_weights)
        ]
        return logsumexp(terms) - self._log_weight_sum

    def cursor(self) -> "_MixtureCursor":
        parts = tuple(m.cursor() for m, _ in self.weighted_class.components)
        return _MixtureCursor(self, EMPTY, 0.0, parts, self._log_weights)

    def posterior(self, context: BinaryString):
        """Posterior component weights given the observed context."""
        terms = [
            lw + m.log_prefix_probability(context)
            for (m, _), lw in zip(self.weighted_class.components, self._log_weights)
        ]
        total = logsumexp(terms)
        if total == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        names = self.weighted_class.names()
        return [(name, math.exp(t - total)) for name, t in zip(names, terms)]


class _MixtureCursor(MeasureCursor):
    """Carries one cursor per component plus their weighted log masses.

    Components that died on the observed path (deterministic measures off
    their target) are kept as None with a -inf term and never revived.
    """

    __slots__ = ("parts", "log_terms")

    def __init__(self, measure, context, log_probability, parts, log_terms):
        super().__init__(measure, context, log_probability)
        self.parts = parts
        self.log_terms = log_terms

    def conditional(self, bit: int) -> float:
        den = logsumexp(self.log_terms)
        if den == -math.inf:
            raise NullEventError(NULL_EVENT_MESSAGE)
        num_terms = []
        for part, term in zip(self.parts, self.log_terms):
            if part is None or term == -math.inf:
                num_terms.append(-math.inf)
                continue
            p = part.conditional(bit)
            num_terms.append(term + math.log(p) if p > 0.0 else -math.inf)
        return math.exp(logsumexp(num_terms) - den)

    def advanced(self, bit: int) -> "_MixtureCursor":
        new_parts = []
        new_terms = []
        for part, term in zip(self.parts, self.log_terms):
            if part is None or term == -math.inf:
                new_parts.append(None)
                new_terms.append(-math.inf)
                continue
            p = part.conditional(bit)
            if p <= 0.0:
                new_parts.append(None)
                new_terms.append(-math.inf)
            else:
                new_parts.append(part.advanced(bit))
                new_terms.append(term + math.log(p))
        lp = logsumexp(new_terms) - self.measure._log_weight_sum
        return _MixtureCursor(
            self.measure, EMPTY, lp, tuple(new_parts), tuple(new_terms)
        )


def mixture(weighted_class: WeightedClass, name: str = "mixture") -> MixtureMeasure:
    return MixtureMeasure(weighted_class, name)


def posterior(weighted_class: WeightedClass, context: BinaryString):
    """Posterior weights of every component given the context."""
    return MixtureMeasure(weighted_class).posterior(context)
