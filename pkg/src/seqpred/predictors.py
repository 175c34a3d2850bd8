"""Predictors, per-step error quantities, and expected-total accounting.

Per step, with y the informed conditional P(next=1), z the mixture
conditional, and r any predictor's conditional:

    informed error            2 y (1 - y)
    mixture error             y (1 - z) + (1 - y) z
    general error             y (1 - r) + (1 - y) r
    threshold mixture error   |y - step(z - 1/2)|
    threshold informed error  min(y, 1 - y)
    distance                  |y - z|
    quadratic distance        (y - z)^2
    relative entropy          y ln(y/z) + (1-y) ln((1-y)/(1-z))

Totals over a horizon are expectations of the per-step quantities under
the informed measure, obtained exactly by enumerating the full context
tree or estimated by seeded Monte Carlo over sampled paths.
"""

from __future__ import annotations

import csv
import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, replace

import numpy as np

from . import numerics
from .measures import (
    EMPTY,
    BinaryString,
    MeasureError,
    SequenceMeasure,
)
from .numerics import kl_bernoulli, threshold_step

EXACT_HORIZON_CAP = 16

SCHEMES = (
    "informed",
    "mixture",
    "general",
    "threshold-informed",
    "threshold-mixture",
)


class PredictionError(MeasureError):
    """Invalid prediction request or report operation."""


@dataclass(frozen=True)
class StepQuantities:
    """Conditionals for one step: informed y, mixture z, optional general r."""

    y: float
    z: float
    r: float | None = None

    def __post_init__(self):
        for label, value in (("y", self.y), ("z", self.z), ("r", self.r)):
            if value is not None and not 0.0 <= value <= 1.0:
                raise PredictionError(f"{label} outside [0, 1]: {value}")

    @property
    def informed_error(self) -> float:
        return 2.0 * self.y * (1.0 - self.y)

    @property
    def mixture_error(self) -> float:
        return self.y * (1.0 - self.z) + (1.0 - self.y) * self.z

    @property
    def general_error(self) -> float:
        if self.r is None:
            raise PredictionError("no general predictor conditional supplied")
        return self.y * (1.0 - self.r) + (1.0 - self.y) * self.r

    @property
    def distance(self) -> float:
        return abs(self.y - self.z)

    @property
    def quadratic_distance(self) -> float:
        return (self.y - self.z) ** 2

    @property
    def relative_entropy(self) -> float:
        return kl_bernoulli(self.y, self.z)

    @property
    def threshold_mixture_error(self) -> float:
        return abs(self.y - threshold_step(self.z - 0.5))

    @property
    def threshold_informed_error(self) -> float:
        return min(self.y, 1.0 - self.y)


def step_error(quantities: StepQuantities, scheme: str) -> float:
    """Expected error of one prediction scheme for a single step."""
    if scheme == "informed":
        return quantities.informed_error
    if scheme == "mixture":
        return quantities.mixture_error
    if scheme == "general":
        return quantities.general_error
    if scheme == "threshold-informed":
        return quantities.threshold_informed_error
    if scheme == "threshold-mixture":
        return quantities.threshold_mixture_error
    raise PredictionError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")


class Predictor(ABC):
    """Assigns a probability to the next bit being 1 given the context."""

    name: str = "predictor"

    @abstractmethod
    def probability_of_one(self, context: BinaryString) -> float:
        ...

    def cursor(self) -> "PredictorCursor":
        return PredictorCursor(self, EMPTY)


class PredictorCursor:
    """Incremental predictor state along a growing context."""

    __slots__ = ("predictor", "state")

    def __init__(self, predictor, state):
        self.predictor = predictor
        self.state = state

    def probability_of_one(self) -> float:
        return self.predictor.probability_of_one(self.state)

    def advanced(self, bit: int) -> "PredictorCursor":
        return PredictorCursor(self.predictor, self.state.extended(bit))


class MeasurePredictor(Predictor):
    """Predict with the conditionals of a sequence measure."""

    def __init__(self, measure: SequenceMeasure, name: str | None = None):
        self.measure = measure
        self.name = name if name is not None else measure.name

    def probability_of_one(self, context: BinaryString) -> float:
        return self.measure.conditional(context, 1)

    def cursor(self) -> PredictorCursor:
        return _MeasurePredictorCursor(self, self.measure.cursor())


class _MeasurePredictorCursor(PredictorCursor):
    __slots__ = ()

    def probability_of_one(self) -> float:
        return self.state.conditional(1)

    def advanced(self, bit: int) -> "_MeasurePredictorCursor":
        return _MeasurePredictorCursor(self.predictor, self.state.advanced(bit))


class ConstantPredictor(Predictor):
    """Always assigns the same probability to the next bit being 1."""

    def __init__(self, p: float, name: str | None = None):
        if not 0.0 <= p <= 1.0:
            raise PredictionError(f"probability outside [0, 1]: {p}")
        self.p = float(p)
        self.name = name if name is not None else f"constant({self.p:g})"

    def probability_of_one(self, context: BinaryString) -> float:
        return self.p

    def cursor(self) -> PredictorCursor:
        return _ConstantCursor(self, None)


class _ConstantCursor(PredictorCursor):
    __slots__ = ()

    def probability_of_one(self) -> float:
        return self.predictor.p

    def advanced(self, bit: int) -> "_ConstantCursor":
        return self


class LaplaceRulePredictor(Predictor):
    """Add-one frequency estimate: (ones + 1) / (length + 2)."""

    name = "laplace-rule"

    def probability_of_one(self, context: BinaryString) -> float:
        return (context.count(1) + 1.0) / (len(context) + 2.0)

    def cursor(self) -> PredictorCursor:
        return _LaplaceCursor(self, (0, 0))


class _LaplaceCursor(PredictorCursor):
    __slots__ = ()

    def probability_of_one(self) -> float:
        length, ones = self.state
        return (ones + 1.0) / (length + 2.0)

    def advanced(self, bit: int) -> "_LaplaceCursor":
        length, ones = self.state
        return _LaplaceCursor(self.predictor, (length + 1, ones + bit))


class ThresholdPredictor(Predictor):
    """Deterministic wrap: predict 1 iff the base probability exceeds 1/2.

    A base probability of exactly 1/2 falls back to the named tie
    constant in numerics.
    """

    def __init__(self, base: Predictor, name: str | None = None):
        self.base = base
        self.name = name if name is not None else f"threshold({base.name})"

    def probability_of_one(self, context: BinaryString) -> float:
        return float(threshold_step(self.base.probability_of_one(context) - 0.5))

    def cursor(self) -> PredictorCursor:
        return _ThresholdCursor(self, self.base.cursor())


class _ThresholdCursor(PredictorCursor):
    __slots__ = ()

    def probability_of_one(self) -> float:
        return float(threshold_step(self.state.probability_of_one() - 0.5))

    def advanced(self, bit: int) -> "_ThresholdCursor":
        return _ThresholdCursor(self.predictor, self.state.advanced(bit))


def deterministic_wrap(source) -> ThresholdPredictor:
    """Threshold a predictor, or a measure's conditionals, at 1/2."""
    if isinstance(source, SequenceMeasure):
        source = MeasurePredictor(source)
    if not isinstance(source, Predictor):
        raise PredictionError(f"cannot wrap {source!r} as a predictor")
    return ThresholdPredictor(source)


_STEP_FIELDS = (
    "informed",
    "mixture",
    "general",
    "distance",
    "quadratic",
    "entropy",
    "threshold_informed",
    "threshold_mixture",
    "threshold_gap",
)


@dataclass(frozen=True)
class ExpectationReport:
    """Per-step expected quantities and their totals over a horizon.

    step_* sequences hold the expectation of the per-step quantity at
    each step k = 1..horizon under the informed measure; totals are their
    sums.  threshold_gap tracks the expected absolute difference between
    the two threshold schemes' step errors, which must telescope to the
    difference of their totals.
    """

    horizon: int
    mode: str
    mu_name: str
    xi_name: str
    rho_name: str | None
    step_informed: tuple[float, ...]
    step_mixture: tuple[float, ...]
    step_general: tuple[float, ...] | None
    step_distance: tuple[float, ...]
    step_quadratic: tuple[float, ...]
    step_entropy: tuple[float, ...]
    step_threshold_informed: tuple[float, ...]
    step_threshold_mixture: tuple[float, ...]
    step_threshold_gap: tuple[float, ...]
    telescoped_entropy: float | None = None
    samples: int | None = None
    seed: int | None = None
    std_errors: dict | None = None

    def steps(self, name: str) -> tuple[float, ...] | None:
        if name not in _STEP_FIELDS:
            raise PredictionError(f"unknown quantity {name!r}")
        return getattr(self, f"step_{name}")

    def total(self, name: str) -> float | None:
        steps = self.steps(name)
        return None if steps is None else math.fsum(steps)

    @property
    def informed_total(self) -> float:
        return self.total("informed")

    @property
    def mixture_total(self) -> float:
        return self.total("mixture")

    @property
    def general_total(self) -> float | None:
        return self.total("general")

    @property
    def distance_total(self) -> float:
        return self.total("distance")

    @property
    def quadratic_total(self) -> float:
        return self.total("quadratic")

    @property
    def entropy_total(self) -> float:
        return self.total("entropy")

    @property
    def threshold_informed_total(self) -> float:
        return self.total("threshold_informed")

    @property
    def threshold_mixture_total(self) -> float:
        return self.total("threshold_mixture")

    @property
    def threshold_gap_total(self) -> float:
        return self.total("threshold_gap")

    def truncated(self, horizon: int) -> "ExpectationReport":
        """Report over the first `horizon` steps of this run."""
        if not 1 <= horizon <= self.horizon:
            raise PredictionError(
                f"truncation horizon {horizon} outside 1..{self.horizon}"
            )
        if horizon == self.horizon:
            return self
        cut = {
            f"step_{name}": (
                None if self.steps(name) is None else self.steps(name)[:horizon]
            )
            for name in _STEP_FIELDS
        }
        return replace(
            self, horizon=horizon, telescoped_entropy=None, std_errors=None, **cut
        )

    def to_dict(self) -> dict:
        body = {
            "schema": "expectation-report/1",
            "horizon": self.horizon,
            "mode": self.mode,
            "mu": self.mu_name,
            "xi": self.xi_name,
            "rho": self.rho_name,
            "totals": {
                name: self.total(name)
                for name in _STEP_FIELDS
                if self.steps(name) is not None
            },
            "steps": {
                name: list(self.steps(name))
                for name in _STEP_FIELDS
                if self.steps(name) is not None
            },
        }
        if self.telescoped_entropy is not None:
            body["telescoped_entropy"] = self.telescoped_entropy
        if self.mode == "monte-carlo":
            body["samples"] = self.samples
            body["seed"] = self.seed
            body["std_errors"] = dict(self.std_errors or {})
        return body

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def write_csv(self, path) -> None:
        names = [n for n in _STEP_FIELDS if self.steps(n) is not None]
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["step"] + names)
            for k in range(self.horizon):
                writer.writerow(
                    [k + 1] + [numerics.fmt17(self.steps(n)[k]) for n in names]
                )


def exact_expectations(
    mu: SequenceMeasure,
    xi: SequenceMeasure,
    n: int,
    rho: Predictor | None = None,
    horizon_cap: int = EXACT_HORIZON_CAP,
) -> ExpectationReport:
    """Exact totals by enumerating every informed-positive context.

    Walks the full depth-n binary tree, weighting each context by its
    informed probability and pruning zero-probability branches.  Also
    recomputes the entropy total from the leaf probability ratios (the
    telescoped form) and insists the two routes agree to 1e-9.
    """
    if n < 1:
        raise PredictionError(f"horizon must be >= 1, got {n}")
    if n > horizon_cap:
        raise PredictionError(
            f"horizon {n} exceeds the exact enumeration cap {horizon_cap}; "
            "use monte_carlo_expectations"
        )
    track_rho = rho is not None
    steps = {name: [0.0] * n for name in _STEP_FIELDS}
    if not track_rho:
        steps["general"] = None
    leaf_terms = []
    path = []

    def walk(k, log_mu, mu_cur, xi_cur, rho_cur):
        if k == n:
            # Independent route for the telescoped entropy total: both
            # prefix probabilities are recomputed from scratch.
            leaf = BinaryString(tuple(path))
            lm = mu.log_prefix_probability(leaf)
            lx = xi.log_prefix_probability(leaf)
            leaf_terms.append(math.exp(lm) * (lm - lx))
            return
        weight = math.exp(log_mu)
        y = mu_cur.conditional(1)
        z = xi_cur.conditional(1)
        e_theta_mix = abs(y - threshold_step(z - 0.5))
        e_theta_inf = y if y < 1.0 - y else 1.0 - y
        steps["informed"][k] += weight * 2.0 * y * (1.0 - y)
        steps["mixture"][k] += weight * (y * (1.0 - z) + (1.0 - y) * z)
        if track_rho:
            r = rho_cur.probability_of_one()
            steps["general"][k] += weight * (y * (1.0 - r) + (1.0 - y) * r)
        steps["distance"][k] += weight * abs(y - z)
        steps["quadratic"][k] += weight * (y - z) ** 2
        steps["entropy"][k] += weight * kl_bernoulli(y, z)
        steps["threshold_informed"][k] += weight * e_theta_inf
        steps["threshold_mixture"][k] += weight * e_theta_mix
        steps["threshold_gap"][k] += weight * abs(e_theta_mix - e_theta_inf)
        for bit, p_mu in ((0, 1.0 - y), (1, y)):
            if p_mu <= 0.0:
                continue
            path.append(bit)
            walk(
                k + 1,
                log_mu + math.log(p_mu),
                mu_cur.advanced(bit),
                xi_cur.advanced(bit),
                rho_cur.advanced(bit) if track_rho else None,
            )
            path.pop()

    walk(0, 0.0, mu.cursor(), xi.cursor(), rho.cursor() if track_rho else None)

    telescoped = math.fsum(leaf_terms)
    entropy_total = math.fsum(steps["entropy"])
    if math.isfinite(entropy_total) and abs(entropy_total - telescoped) > 1e-9:
        raise PredictionError(
            "entropy total disagrees with its telescoped form: "
            f"{entropy_total} vs {telescoped}"
        )
    return ExpectationReport(
        horizon=n,
        mode="exact",
        mu_name=mu.name,
        xi_name=xi.name,
        rho_name=rho.name if track_rho else None,
        telescoped_entropy=telescoped,
        **{
            f"step_{name}": (None if steps[name] is None else tuple(steps[name]))
            for name in _STEP_FIELDS
        },
    )


def monte_carlo_expectations(
    mu: SequenceMeasure,
    xi: SequenceMeasure,
    n: int,
    samples: int,
    seed: int,
    rho: Predictor | None = None,
) -> ExpectationReport:
    """Estimate the same totals from sampled informed paths.

    Paths are sampled in lockstep with one uniform draw per step per
    path; per-path sums give unbiased total estimates and their standard
    errors.  Results depend only on (seed, samples, n), not on scheduling.
    """
    if n < 1:
        raise PredictionError(f"horizon must be >= 1, got {n}")
    if samples < 2:
        raise PredictionError(f"need at least 2 samples, got {samples}")
    if seed is None:
        raise PredictionError("monte carlo mode requires a seed")
    track_rho = rho is not None
    rng = np.random.default_rng(seed)
    names = [name for name in _STEP_FIELDS if track_rho or name != "general"]

    codes = np.ones(samples, dtype=np.int64)  # leading sentinel bit
    cursors = {1: (mu.cursor(), xi.cursor(), rho.cursor() if track_rho else None)}
    per_path = {name: np.zeros(samples) for name in names}
    step_means = {name: [] for name in names}

    for _ in range(n):
        unique, inverse = np.unique(codes, return_inverse=True)
        values = {name: np.empty(len(unique)) for name in names}
        y_vals = np.empty(len(unique))
        for idx, code in enumerate(unique):
            mu_cur, xi_cur, rho_cur = cursors[int(code)]
            y = mu_cur.conditional(1)
            z = xi_cur.conditional(1)
            y_vals[idx] = y
            e_theta_mix = abs(y - threshold_step(z - 0.5))
            e_theta_inf = min(y, 1.0 - y)
            values["informed"][idx] = 2.0 * y * (1.0 - y)
            values["mixture"][idx] = y * (1.0 - z) + (1.0 - y) * z
            if track_rho:
                r = rho_cur.probability_of_one()
                values["general"][idx] = y * (1.0 - r) + (1.0 - y) * r
            values["distance"][idx] = abs(y - z)
            values["quadratic"][idx] = (y - z) ** 2
            values["entropy"][idx] = kl_bernoulli(y, z)
            values["threshold_informed"][idx] = e_theta_inf
            values["threshold_mixture"][idx] = e_theta_mix
            values["threshold_gap"][idx] = abs(e_theta_mix - e_theta_inf)
        for name in names:
            gathered = values[name][inverse]
            per_path[name] += gathered
            step_means[name].append(float(gathered.mean()))
        draws = rng.random(samples)
        bits = (draws < y_vals[inverse]).astype(np.int64)
        new_codes = codes * 2 + bits
        next_cursors = {}
        for child in np.unique(new_codes):
            child = int(child)
            parent, bit = child >> 1, child & 1
            mu_cur, xi_cur, rho_cur = cursors[parent]
            next_cursors[child] = (
                mu_cur.advanced(bit),
                xi_cur.advanced(bit),
                rho_cur.advanced(bit) if track_rho else None,
            )
        codes, cursors = new_codes, next_cursors

    std_errors = {
        name: float(per_path[name].std(ddof=1) / math.sqrt(samples))
        for name in names
    }
    step_fields = {
        f"step_{name}": (
            tuple(step_means[name]) if name in names else None
        )
        for name in _STEP_FIELDS
    }
    return ExpectationReport(
        horizon=n,
        mode="monte-carlo",
        mu_name=mu.name,
        xi_name=xi.name,
        rho_name=rho.name if track_rho else None,
        samples=samples,
        seed=seed,
        std_errors=std_errors,
        **step_fields,
    )
