"""Locality condition checkers over abstract bipartite probability models.

A model assigns, for every pair of analyzer angles and every value of a
hidden variable lambda, a joint outcome distribution. The quantum model
is the degenerate case with a single lambda. The checkers sweep an
angle grid and report the worst-case deviation from each condition:

* parameter independence: a wing's per-lambda marginal must not depend
  on the remote setting;
* outcome independence: a wing's per-lambda probability must not depend
  on the remote outcome;
* factorizability: the per-lambda joint must equal the product of the
  per-lambda marginals.

Sweeps evaluate the kernel once per (a, b, lambda) cell into a cached
table and reduce with numpy, so grids stay cheap even with thousands of
lambda nodes. Kernels must be pure functions for the cache (and any
parallel evaluation) to be sound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .quantum import (
    AngleLike,
    AnalyzerAngle,
    JointDistribution,
    OutcomeLabel,
    PhotonPairState,
    as_angle,
    bell_phi_plus,
    born_joint,
)

#: Default tolerance for a condition to count as holding.
CONDITION_TOL = 1e-12

#: Conditioning outcomes with probability at or below this are skipped.
SKIP_PROBABILITY = 1e-12

_LABELS = (OutcomeLabel.V, OutcomeLabel.H)

Kernel = Callable[[AnalyzerAngle, AnalyzerAngle, object], JointDistribution]


@dataclass(frozen=True, eq=False)
class ProbabilityModel:
    """Bipartite model: prior-weighted lambdas and a per-lambda kernel."""

    name: str
    lambdas: tuple
    weights: np.ndarray
    kernel: Kernel
    _tables: dict = field(default_factory=dict, repr=False)
    _correlations: dict = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.lambdas) != weights.size:
            raise ValueError("lambdas and weights must have equal length")
        if weights.size == 0:
            raise ValueError("a model needs at least one lambda value")
        if weights.min() < 0.0:
            raise ValueError(f"negative prior weight {weights.min()!r}")
        total = float(weights.sum())
        if abs(total - 1.0) > CONDITION_TOL:
            raise ValueError(f"prior weights sum to {total!r}, not 1")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "lambdas", tuple(self.lambdas))

    def joint(self, a: AngleLike, b: AngleLike, index: int) -> JointDistribution:
        return self.kernel(as_angle(a), as_angle(b), self.lambdas[index])

    def table(self, grid: Sequence[AngleLike]) -> np.ndarray:
        """Joint probabilities for every grid cell.

        Shape (len(grid), len(grid), n_lambda, 2, 2), indexed
        [a, b, lambda, outcome_a, outcome_b] with V=0, H=1. Cached per
        grid, keyed by the normalized angles.
        """
        angles = tuple(as_angle(g) for g in grid)
        key = tuple(angle.degrees for angle in angles)
        cached = self._tables.get(key)
        if cached is not None:
            return cached
        n = len(angles)
        m = len(self.lambdas)
        table = np.empty((n, n, m, 2, 2))
        for ia, a in enumerate(angles):
            for ib, b in enumerate(angles):
                for il, lam in enumerate(self.lambdas):
                    table[ia, ib, il] = self.kernel(a, b, lam).as_array()
        table.setflags(write=False)
        self._tables[key] = table
        return table

    def correlation(self, a: AngleLike, b: AngleLike) -> float:
        """Prior-weighted expectation of the +/-1 outcome product.

        Cached per (a, b) pair; sound because kernels are pure.
        """
        aa, bb = as_angle(a), as_angle(b)
        key = (aa.degrees, bb.degrees)
        cached = self._correlations.get(key)
        if cached is None:
            values = [self.kernel(aa, bb, lam).correlation() for lam in self.lambdas]
            cached = float(np.dot(self.weights, values))
            self._correlations[key] = cached
        return cached


def quantum_model(state: PhotonPairState | None = None) -> ProbabilityModel:
    """The orthodox quantum model: one lambda, Born-rule kernel."""
    prepared = state if state is not None else bell_phi_plus()
    return ProbabilityModel(
        name="quantum",
        lambdas=(None,),
        weights=np.array([1.0]),
        kernel=lambda a, b, _lam: born_joint(prepared, a, b),
    )


def signalling_fixture_model(bias: float = 0.25) -> ProbabilityModel:
    """A deliberately signalling model for exercising the checkers.

    Wing A's marginal shifts by ``bias`` whenever the remote analyzer
    sits at or beyond 90 degrees, so the no-signalling deviation over a
    grid spanning both sides of 90 degrees equals ``bias`` exactly.
    """
    if not (0.0 < bias <= 0.25):
        raise ValueError("bias must be in (0, 0.25]")

    def kernel(a: AnalyzerAngle, b: AnalyzerAngle, _lam: object) -> JointDistribution:
        p_va = 0.5 + (bias if b.degrees >= 90.0 else 0.0)
        return JointDistribution(
            vv=p_va * 0.5, vh=p_va * 0.5, hv=(1.0 - p_va) * 0.5, hh=(1.0 - p_va) * 0.5
        )

    return ProbabilityModel(
        name="signalling-fixture",
        lambdas=(None,),
        weights=np.array([1.0]),
        kernel=kernel,
    )


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of one condition sweep, with the worst-case witness."""

    condition: str
    holds: bool
    max_deviation: float
    tolerance: float
    witness: dict | None

    def __post_init__(self) -> None:
        if self.holds != (self.max_deviation <= self.tolerance):
            raise ValueError("holds flag disagrees with deviation vs tolerance")
        if not self.holds and self.witness is None:
            raise ValueError("a failing report must carry a witness")

    def to_json_dict(self) -> dict:
        return {
            "condition": self.condition,
            "holds": self.holds,
            "max_deviation": self.max_deviation,
            "tolerance": self.tolerance,
            "witness": self.witness,
        }


def default_angle_grid(count: int = 8) -> tuple[AnalyzerAngle, ...]:
    """Evenly spaced analyzer axes covering [0, 180)."""
    if count < 1:
        raise ValueError("grid needs at least one angle")
    step = 180.0 / count
    return tuple(AnalyzerAngle(i * step) for i in range(count))


def _require_grid(grid: Sequence[AngleLike]) -> tuple[AnalyzerAngle, ...]:
    angles = tuple(as_angle(g) for g in grid)
    if not angles:
        raise ValueError("angle grid must be nonempty")
    return angles


def _label(index: int) -> str:
    return _LABELS[index].value


def check_parameter_independence(
    model: ProbabilityModel,
    grid: Sequence[AngleLike],
    tol: float = CONDITION_TOL,
) -> ConditionReport:
    """Worst per-lambda dependence of either wing's marginal on the
    remote setting, over all setting pairs drawn from the grid."""
    angles = _require_grid(grid)
    table = model.table(angles)
    best = (-1.0, None)
    for wing_name, marg, remote_axis in (
        ("A", table.sum(axis=4), 1),
        ("B", table.sum(axis=3), 0),
    ):
        # marg has axes [a, b, lambda, outcome]; the remote setting axis
        # is b for wing A and a for wing B.
        hi = marg.max(axis=remote_axis)
        lo = marg.min(axis=remote_axis)
        spread = hi - lo
        deviation = float(spread.max())
        if deviation > best[0]:
            local_i, lam_i, out_i = np.unravel_index(spread.argmax(), spread.shape)
            along = marg[local_i, :, lam_i, out_i] if wing_name == "A" else marg[:, local_i, lam_i, out_i]
            witness = {
                "wing": wing_name,
                "local_angle_deg": angles[local_i].degrees,
                "remote_angle_deg": angles[int(along.argmax())].degrees,
                "remote_angle_alt_deg": angles[int(along.argmin())].degrees,
                "lambda_index": int(lam_i),
                "outcome": _label(out_i),
                "probability_high": float(along.max()),
                "probability_low": float(along.min()),
            }
            best = (deviation, witness)
    deviation, witness = best
    holds = deviation <= tol
    return ConditionReport(
        condition="parameter_independence",
        holds=holds,
        max_deviation=deviation,
        tolerance=tol,
        witness=None if holds else witness,
    )


def check_outcome_independence(
    model: ProbabilityModel,
    grid: Sequence[AngleLike],
    tol: float = CONDITION_TOL,
) -> ConditionReport:
    """Worst per-lambda dependence of either wing's probability on the
    remote outcome. Conditioning outcomes of zero probability are
    skipped, since deterministic branches legitimately produce them."""
    angles = _require_grid(grid)
    table = model.table(angles)
    marg_a = table.sum(axis=4)  # [a, b, lam, oa]
    marg_b = table.sum(axis=3)  # [a, b, lam, ob]
    best = (-1.0, None)
    for wing_name, conditioner, unconditional in (("A", marg_b, marg_a), ("B", marg_a, marg_b)):
        with np.errstate(divide="ignore", invalid="ignore"):
            if wing_name == "A":
                cond = table / conditioner[:, :, :, None, :]  # P(A|B,lam)
                dev = np.abs(cond - unconditional[:, :, :, :, None])
                mask = conditioner[:, :, :, None, :] > SKIP_PROBABILITY
            else:
                cond = table / conditioner[:, :, :, :, None]  # P(B|A,lam)
                dev = np.abs(cond - unconditional[:, :, :, None, :])
                mask = conditioner[:, :, :, :, None] > SKIP_PROBABILITY
        dev = np.where(mask, dev, -np.inf)
        deviation = float(dev.max())
        if deviation > best[0]:
            ia, ib, lam_i, oa, ob = np.unravel_index(dev.argmax(), dev.shape)
            conditioned_on = _label(ob) if wing_name == "A" else _label(oa)
            outcome = _label(oa) if wing_name == "A" else _label(ob)
            witness = {
                "wing": wing_name,
                "a_deg": angles[ia].degrees,
                "b_deg": angles[ib].degrees,
                "lambda_index": int(lam_i),
                "outcome": outcome,
                "remote_outcome": conditioned_on,
                "conditional": float(cond[ia, ib, lam_i, oa, ob]),
                "unconditional": float(
                    unconditional[ia, ib, lam_i, oa if wing_name == "A" else ob]
                ),
            }
            best = (deviation, witness)
    deviation, witness = best
    holds = deviation <= tol
    return ConditionReport(
        condition="outcome_independence",
        holds=holds,
        max_deviation=deviation,
        tolerance=tol,
        witness=None if holds else witness,
    )


def check_factorizability(
    model: ProbabilityModel,
    grid: Sequence[AngleLike],
    tol: float = CONDITION_TOL,
) -> ConditionReport:
    """Worst per-lambda gap between the joint and the product of the
    per-lambda marginals."""
    angles = _require_grid(grid)
    table = model.table(angles)
    marg_a = table.sum(axis=4)
    marg_b = table.sum(axis=3)
    product = marg_a[:, :, :, :, None] * marg_b[:, :, :, None, :]
    dev = np.abs(table - product)
    deviation = float(dev.max())
    holds = deviation <= tol
    witness = None
    if not holds:
        ia, ib, lam_i, oa, ob = np.unravel_index(dev.argmax(), dev.shape)
        witness = {
            "a_deg": angles[ia].degrees,
            "b_deg": angles[ib].degrees,
            "lambda_index": int(lam_i),
            "outcome_a": _label(oa),
            "outcome_b": _label(ob),
            "joint": float(table[ia, ib, lam_i, oa, ob]),
            "product_of_marginals": float(product[ia, ib, lam_i, oa, ob]),
        }
    return ConditionReport(
        condition="factorizability",
        holds=holds,
        max_deviation=deviation,
        tolerance=tol,
        witness=witness,
    )


def chsh(
    model: ProbabilityModel,
    a: AngleLike,
    a_prime: AngleLike,
    b: AngleLike,
    b_prime: AngleLike,
) -> float:
    """E(a,b) + E(a,b') + E(a',b) - E(a',b') for the model's correlations."""
    return (
        model.correlation(a, b)
        + model.correlation(a, b_prime)
        + model.correlation(a_prime, b)
        - model.correlation(a_prime, b_prime)
    )


def no_signalling_deviation(
    model: ProbabilityModel, grid: Sequence[AngleLike]
) -> float:
    """Dependence of the lambda-averaged marginals on the remote setting."""
    angles = _require_grid(grid)
    table = model.table(angles)
    weights = model.weights
    avg_a = np.tensordot(table.sum(axis=4), weights, axes=([2], [0]))  # [a, b, oa]
    avg_b = np.tensordot(table.sum(axis=3), weights, axes=([2], [0]))  # [a, b, ob]
    dev_a = (avg_a.max(axis=1) - avg_a.min(axis=1)).max()
    dev_b = (avg_b.max(axis=0) - avg_b.min(axis=0)).max()
    return float(max(dev_a, dev_b))
