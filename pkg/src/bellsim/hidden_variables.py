"""Local hidden-variable constructions.

Two families live here. Deterministic strategies assign a fixed outcome
to each of the two settings on each wing; enumerating all sixteen of
them is an executable proof that their CHSH combination never leaves
[-2, 2]. The built-in vector model draws a hidden polarization axis
uniformly over [0, 180) and responds deterministically per wing, which
makes every locality condition hold per lambda by construction.

The vector model's response rule works in doubled-angle space: the
hidden axis and the analyzer axis are doubled, treated as axes again,
and the wing answers V when they lie within 45 degrees of each other.
Equivalently the response is sign(cos(4 * (lambda - setting))). The
resulting correlation is a triangle wave of period 90 degrees in the
setting difference: +1 aligned, 0 at 22.5 degrees, -1 at 45 degrees.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .locality import ProbabilityModel
from .quantum import (
    AngleLike,
    AnalyzerAngle,
    JointDistribution,
    OutcomeLabel,
    ProbabilityPair,
    Wing,
    as_angle,
)

#: Default quadrature resolution for continuous-lambda models.
DEFAULT_LAMBDA_NODES = 2048


@dataclass(frozen=True)
class DeterministicStrategy:
    """Fixed responses for the two settings of each wing.

    ``a0, a1`` are wing A's outcomes for its first and second setting;
    ``b0, b1`` the same for wing B.
    """

    a0: OutcomeLabel
    a1: OutcomeLabel
    b0: OutcomeLabel
    b1: OutcomeLabel

    def response(self, wing: Wing, setting_index: int) -> OutcomeLabel:
        if setting_index not in (0, 1):
            raise ValueError(f"setting index must be 0 or 1, got {setting_index!r}")
        if wing is Wing.A:
            return self.a0 if setting_index == 0 else self.a1
        return self.b0 if setting_index == 0 else self.b1


def all_strategies() -> tuple[DeterministicStrategy, ...]:
    """All sixteen deterministic strategies for the 2x2 setting problem."""
    labels = (OutcomeLabel.V, OutcomeLabel.H)
    return tuple(
        DeterministicStrategy(a0, a1, b0, b1)
        for a0, a1, b0, b1 in itertools.product(labels, repeat=4)
    )


def strategy_chsh(strategy: DeterministicStrategy) -> float:
    """E(a,b) + E(a,b') + E(a',b) - E(a',b') under a fixed strategy."""
    a0, a1 = strategy.a0.sign, strategy.a1.sign
    b0, b1 = strategy.b0.sign, strategy.b1.sign
    return float(a0 * b0 + a0 * b1 + a1 * b0 - a1 * b1)


def deterministic_chsh_maximum(
    a: AngleLike, a_prime: AngleLike, b: AngleLike, b_prime: AngleLike
) -> tuple[float, DeterministicStrategy]:
    """Exact maximum of the CHSH expression over all sixteen strategies.

    The angle arguments label the setting indices; the bound itself does
    not depend on their values.
    """
    del a, a_prime, b, b_prime
    best_value = -math.inf
    best_strategy = None
    for strategy in all_strategies():
        value = strategy_chsh(strategy)
        if value > best_value:
            best_value = value
            best_strategy = strategy
    assert best_strategy is not None
    return best_value, best_strategy


#: Vectorized per-wing response: maps an analyzer angle to the array of
#: V-probabilities over the whole lambda grid at once.
VectorResponse = Callable[[AnalyzerAngle], np.ndarray]


@dataclass(frozen=True, eq=False)
class LhvModel(ProbabilityModel):
    """A probability model whose kernel factorizes per lambda.

    ``vector_responses``, when present, holds (wing A, wing B)
    whole-grid response functions used to evaluate correlations without
    a per-lambda Python loop; they must agree with the kernel.
    """

    vector_responses: tuple[VectorResponse, VectorResponse] | None = None

    def correlation(self, a, b):
        if self.vector_responses is None:
            return super().correlation(a, b)
        aa, bb = as_angle(a), as_angle(b)
        key = (aa.degrees, bb.degrees)
        cached = self._correlations.get(key)
        if cached is None:
            resp_a, resp_b = self.vector_responses
            signs_a = 2.0 * resp_a(aa) - 1.0
            signs_b = 2.0 * resp_b(bb) - 1.0
            cached = float(np.dot(self.weights, signs_a * signs_b))
            self._correlations[key] = cached
        return cached

    @classmethod
    def from_responses(
        cls,
        name: str,
        lambdas: Sequence,
        weights: np.ndarray,
        response_a: Callable[[AnalyzerAngle, object], ProbabilityPair],
        response_b: Callable[[AnalyzerAngle, object], ProbabilityPair],
        vector_responses: tuple[VectorResponse, VectorResponse] | None = None,
    ) -> "LhvModel":
        """Build a model from per-wing response distributions.

        The kernel is assembled as the outer product of the two wings'
        response probabilities, so factorizability per lambda is exact
        by construction.
        """

        def kernel(a: AnalyzerAngle, b: AnalyzerAngle, lam: object) -> JointDistribution:
            pa = response_a(a, lam)
            pb = response_b(b, lam)
            return JointDistribution(
                vv=pa.v * pb.v, vh=pa.v * pb.h, hv=pa.h * pb.v, hh=pa.h * pb.h
            )

        return cls(
            name=name,
            lambdas=tuple(lambdas),
            weights=weights,
            kernel=kernel,
            vector_responses=vector_responses,
        )


def _doubled_axis_response(setting: AnalyzerAngle, lam: object) -> ProbabilityPair:
    agrees = math.cos(4.0 * math.radians(float(lam) - setting.degrees)) >= 0.0
    return ProbabilityPair(v=1.0, h=0.0) if agrees else ProbabilityPair(v=0.0, h=1.0)


def builtin_vector_model(nodes: int = DEFAULT_LAMBDA_NODES) -> LhvModel:
    """Uniform hidden-axis model with the doubled-angle sign response.

    The lambda prior is a midpoint quadrature over [0, 180) with
    ``nodes`` cells, so the response discontinuities fall on cell
    boundaries and grid sums at multiples of 180/nodes degrees are
    exact.
    """
    if nodes < 1:
        raise ValueError("quadrature needs at least one node")
    step = 180.0 / nodes
    lambdas = tuple((i + 0.5) * step for i in range(nodes))
    weights = np.full(nodes, 1.0 / nodes)
    lambda_array = np.asarray(lambdas)

    def vector_response(setting: AnalyzerAngle) -> np.ndarray:
        agrees = np.cos(4.0 * np.radians(lambda_array - setting.degrees)) >= 0.0
        return agrees.astype(float)

    return LhvModel.from_responses(
        name="vector-lhv",
        lambdas=lambdas,
        weights=weights,
        response_a=_doubled_axis_response,
        response_b=_doubled_axis_response,
        vector_responses=(vector_response, vector_response),
    )


def strategy_model(
    a: AngleLike,
    a_prime: AngleLike,
    b: AngleLike,
    b_prime: AngleLike,
    strategies: Sequence[DeterministicStrategy] | None = None,
    weights: np.ndarray | None = None,
) -> LhvModel:
    """Mixture of deterministic strategies bound to a concrete quadruple.

    The kernel resolves each analyzer angle against the quadruple to
    find its setting index, so it is only defined on those four angles.
    Defaults to the uniform mixture over all sixteen strategies.
    """
    chosen = tuple(strategies) if strategies is not None else all_strategies()
    prior = (
        np.asarray(weights, dtype=float)
        if weights is not None
        else np.full(len(chosen), 1.0 / len(chosen))
    )
    index_of = {
        Wing.A: {as_angle(a).degrees: 0, as_angle(a_prime).degrees: 1},
        Wing.B: {as_angle(b).degrees: 0, as_angle(b_prime).degrees: 1},
    }

    def respond(wing: Wing):
        def response(setting: AnalyzerAngle, lam: object) -> ProbabilityPair:
            table = index_of[wing]
            if setting.degrees not in table:
                raise ValueError(
                    f"angle {setting.degrees} is not one of the strategy quadruple"
                )
            label = lam.response(wing, table[setting.degrees])
            if label is OutcomeLabel.V:
                return ProbabilityPair(v=1.0, h=0.0)
            return ProbabilityPair(v=0.0, h=1.0)

        return response

    return LhvModel.from_responses(
        name="strategy-mixture",
        lambdas=chosen,
        weights=prior,
        response_a=respond(Wing.A),
        response_b=respond(Wing.B),
    )
