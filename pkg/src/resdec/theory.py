"""Numerical checks for the residual-fusion math.

Two families are exercised:

* an exponential *tilt family* ``p_alpha(y) ∝ p0(y) * exp(alpha * r(y))``,
  for which this module computes the analytic entropy derivative and checks
  the sufficient conditions under which entropy strictly decreases; and
* a *geometric blend* ``p_alpha(y|v,h) ∝ p(y|v,h)^(1-alpha) * r(y|v,h)^alpha``
  over a small discrete triple (history h, vision v, token y), for which this
  module computes a closed-form estimate of the conditional mutual-information
  derivative at ``alpha = 0`` alongside a finite-difference oracle.

Every analytic quantity ships with a matching finite-difference check so the
suite reports agreement/disagreement instead of assuming it.  The suite
runners at the bottom are what the ``verify-theory`` CLI subcommand calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from resdec.errors import ConfigError, DegenerateDistribution, DimensionError, SupportMismatch
from resdec.logitmath import _check_distribution, entropy, log_softmax

__all__ = [
    "TiltFamily",
    "DiscreteJoint",
    "MonotonicityReport",
    "SuiteCase",
    "SuiteReport",
    "tilt",
    "entropy_derivative",
    "entropy_finite_difference",
    "check_entropy_monotonicity",
    "geometric_blend",
    "conditional_mutual_information",
    "blended_mutual_information",
    "mi_derivative_at_zero",
    "mi_finite_difference",
    "random_tilt_family",
    "random_joint_instance",
    "run_entropy_derivative_suite",
    "run_entropy_monotonicity_suite",
    "run_mi_derivative_suite",
    "run_theory_suites",
]

# Central-difference step shared by every oracle in this module.  With the
# modest derivative magnitudes produced by the random-instance generators the
# truncation error at this step sits far below the comparison tolerances.
FD_STEP = 1e-5

ALPHA_GRID = np.round(np.arange(0.0, 1.0 + 1e-9, 0.1), 10)


@dataclass(frozen=True)
class TiltFamily:
    """A base distribution plus per-token residual offsets (in nats).

    ``base`` must be a valid probability vector; ``residual_offsets`` must be
    finite and the same length.  Members of the family are produced by
    :func:`tilt`.
    """

    base: np.ndarray
    residual_offsets: np.ndarray

    def __post_init__(self) -> None:
        base = np.asarray(self.base, dtype=np.float64)
        offsets = np.asarray(self.residual_offsets, dtype=np.float64)
        if base.ndim != 1 or offsets.ndim != 1:
            raise DimensionError("base and residual_offsets must be one-dimensional")
        if base.shape != offsets.shape:
            raise DimensionError(
                f"base has {base.size} entries but residual_offsets has {offsets.size}"
            )
        _check_distribution(base, "base")
        if not np.all(np.isfinite(offsets)):
            raise DegenerateDistribution("residual_offsets contain non-finite values")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "residual_offsets", offsets)

    @property
    def size(self) -> int:
        return int(self.base.size)


def tilt(fam: TiltFamily, alpha: float) -> np.ndarray:
    """Member ``p_alpha ∝ base * exp(alpha * residual_offsets)`` of the family.

    The intended domain is ``alpha in [0, 1]``, but the expression is defined
    for any finite real ``alpha`` and this function evaluates it as given so
    finite-difference probes may step slightly past the endpoints.  ``alpha=0``
    returns ``base`` exactly (bitwise).
    """
    a = float(alpha)
    if not np.isfinite(a):
        raise ConfigError("alpha must be finite")
    if a == 0.0:
        return fam.base.copy()
    with np.errstate(divide="ignore"):
        scores = np.log(fam.base) + a * fam.residual_offsets
    return np.exp(log_softmax(scores))


def entropy_derivative(fam: TiltFamily, alpha: float) -> float:
    """Analytic d/dalpha of the Shannon entropy of ``tilt(fam, alpha)``.

    Evaluates ``-Cov(log base(Y), r(Y)) - alpha * Var(r(Y))`` with both
    moments taken under ``p_alpha``.  Tokens with zero base mass carry zero
    mass in every member, so they are excluded from the moments.
    """
    a = float(alpha)
    p = tilt(fam, a)
    support = fam.base > 0.0
    w = p[support]
    log_base = np.log(fam.base[support])
    r = fam.residual_offsets[support]
    mean_log_base = float(w @ log_base)
    mean_r = float(w @ r)
    cov = float(w @ ((log_base - mean_log_base) * (r - mean_r)))
    var = float(w @ np.square(r - mean_r))
    return -cov - a * var


def entropy_finite_difference(fam: TiltFamily, alpha: float, step: float = FD_STEP) -> float:
    """Central-difference oracle for :func:`entropy_derivative`."""
    hi = entropy(tilt(fam, alpha + step))
    lo = entropy(tilt(fam, alpha - step))
    return (hi - lo) / (2.0 * step)


@dataclass(frozen=True)
class MonotonicityReport:
    """Grid check of the sufficient conditions for entropy decrease.

    At each grid point the hypotheses are ``Cov_{p_alpha}(r, log base) >= 0``
    and ``Var_{p_alpha}(r) > 0``.  When both hold at every grid point the
    report also evaluates the conclusion ``H(p_alpha) < H(base)`` for every
    positive grid alpha; when any hypothesis fails the conclusion is left
    unevaluated and the failing points are listed instead.
    """

    alphas: np.ndarray
    entropies: np.ndarray
    covariances: np.ndarray
    variances: np.ndarray
    hypotheses_hold: bool
    hypothesis_failures: tuple[tuple[float, str], ...]
    conclusion_checked: bool
    conclusion_holds: bool

    @property
    def base_entropy(self) -> float:
        return float(self.entropies[0])


def check_entropy_monotonicity(fam: TiltFamily, alphas=None) -> MonotonicityReport:
    """Check entropy-decrease hypotheses and (where they hold) the conclusion."""
    grid = ALPHA_GRID if alphas is None else np.asarray(alphas, dtype=np.float64)
    support = fam.base > 0.0
    log_base = np.log(fam.base[support])
    r = fam.residual_offsets[support]

    entropies = np.empty(grid.size)
    covs = np.empty(grid.size)
    variances = np.empty(grid.size)
    failures: list[tuple[float, str]] = []
    for i, a in enumerate(grid):
        p = tilt(fam, float(a))
        entropies[i] = entropy(p)
        w = p[support]
        mean_log_base = float(w @ log_base)
        mean_r = float(w @ r)
        covs[i] = float(w @ ((r - mean_r) * (log_base - mean_log_base)))
        variances[i] = float(w @ np.square(r - mean_r))
        if covs[i] < 0.0:
            failures.append((float(a), f"covariance {covs[i]:.6g} < 0"))
        if variances[i] <= 0.0:
            failures.append((float(a), f"variance {variances[i]:.6g} not positive"))

    hold = not failures
    conclusion = False
    if hold:
        base_h = entropies[np.isclose(grid, 0.0)]
        base_entropy = float(base_h[0]) if base_h.size else float(entropy(fam.base))
        positive = grid > 0.0
        conclusion = bool(np.all(entropies[positive] < base_entropy))
    return MonotonicityReport(
        alphas=grid,
        entropies=entropies,
        covariances=covs,
        variances=variances,
        hypotheses_hold=hold,
        hypothesis_failures=tuple(failures),
        conclusion_checked=hold,
        conclusion_holds=conclusion,
    )


@dataclass(frozen=True)
class DiscreteJoint:
    """Per-history joint table ``p(v, y | h)`` of shape (n_h, n_v, n_y).

    Every history cell must be a nonnegative table summing to 1 within 1e-9.
    History cells are weighted equally by every consumer in this module.
    """

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.float64)
        if table.ndim != 3:
            raise DimensionError(
                f"joint table must have shape (n_h, n_v, n_y), got {table.shape}"
            )
        if table.size == 0:
            raise DimensionError("joint table must be non-empty")
        if not np.all(np.isfinite(table)):
            raise DegenerateDistribution("joint table contains non-finite mass")
        if np.any(table < 0.0):
            raise DegenerateDistribution("joint table contains negative mass")
        sums = table.sum(axis=(1, 2))
        if np.any(np.abs(sums - 1.0) > 1e-9):
            raise DegenerateDistribution(
                f"each history cell must sum to 1 within 1e-9, got sums {sums!r}"
            )
        object.__setattr__(self, "table", table)

    @property
    def n_histories(self) -> int:
        return int(self.table.shape[0])

    @property
    def n_visions(self) -> int:
        return int(self.table.shape[1])

    @property
    def n_tokens(self) -> int:
        return int(self.table.shape[2])

    def vision_weights(self) -> np.ndarray:
        """p(v | h) for each history cell, shape (n_h, n_v)."""
        return self.table.sum(axis=2)


def _check_channel(channel, joint: DiscreteJoint, name: str) -> np.ndarray:
    ch = np.asarray(channel, dtype=np.float64)
    if ch.shape != joint.table.shape:
        raise DimensionError(
            f"{name} must have shape {joint.table.shape}, got {ch.shape}"
        )
    if not np.all(np.isfinite(ch)):
        raise DegenerateDistribution(f"{name} contains non-finite mass")
    if np.any(ch < 0.0):
        raise DegenerateDistribution(f"{name} contains negative mass")
    sums = ch.sum(axis=2)
    if np.any(np.abs(sums - 1.0) > 1e-9):
        raise DegenerateDistribution(f"{name} rows over y must sum to 1 within 1e-9")
    return ch


def geometric_blend(base, residual, alpha: float) -> np.ndarray:
    """Normalized ``base^(1-alpha) * residual^alpha`` along the last axis.

    Requires ``residual > 0`` wherever ``base > 0`` (and vice versa for
    blending past the endpoints); violations raise SupportMismatch because a
    zero would send the blend's log weight to -inf on supported mass.
    """
    p = np.asarray(base, dtype=np.float64)
    r = np.asarray(residual, dtype=np.float64)
    if p.shape != r.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {r.shape}")
    if np.any((p > 0.0) != (r > 0.0)):
        raise SupportMismatch("base and residual channels must share support")
    a = float(alpha)
    out = np.zeros_like(p)
    pos = p > 0.0
    log_w = np.zeros_like(p)
    log_w[pos] = (1.0 - a) * np.log(p[pos]) + a * np.log(r[pos])
    log_w[~pos] = -np.inf
    shifted = log_w - log_w.max(axis=-1, keepdims=True)
    w = np.exp(shifted)
    out = w / w.sum(axis=-1, keepdims=True)
    return out


def conditional_mutual_information(vision_weights, channel) -> float:
    """I(V; Y | H) with equal history weights.

    ``vision_weights`` has shape (n_h, n_v) with rows summing to 1;
    ``channel`` has shape (n_h, n_v, n_y) with y-rows summing to 1.
    """
    w = np.asarray(vision_weights, dtype=np.float64)
    ch = np.asarray(channel, dtype=np.float64)
    if ch.ndim != 3 or w.shape != ch.shape[:2]:
        raise DimensionError("vision_weights and channel shapes are inconsistent")
    total = 0.0
    for h in range(ch.shape[0]):
        joint = w[h][:, None] * ch[h]
        marginal = np.broadcast_to(joint.sum(axis=0), joint.shape)
        mask = joint > 0.0
        log_ratio = np.log(ch[h][mask]) - np.log(marginal[mask])
        total += float(joint[mask] @ log_ratio)
    return total / ch.shape[0]


def blended_mutual_information(joint: DiscreteJoint, base, residual, alpha: float) -> float:
    """I(V; Y | H) when the token channel is the geometric blend at ``alpha``."""
    base = _check_channel(base, joint, "base_channel")
    residual = _check_channel(residual, joint, "residual_channel")
    blended = geometric_blend(base, residual, alpha)
    return conditional_mutual_information(joint.vision_weights(), blended)


def mi_derivative_at_zero(joint: DiscreteJoint, base_channel, residual_channel) -> float:
    """Closed-form estimate of d/dalpha I(V; Y | H) at ``alpha = 0``.

    Returns ``E_h E_{v|h} E_{y~base(.|v,h)}[ log residual(y|v,h) -
    log residual_bar(y|h) ]`` where ``residual_bar(y|h)`` mixes the residual
    channel over ``p(v|h)``.  The companion oracle
    :func:`mi_finite_difference` differentiates the blended mutual
    information directly; the ``verify-theory`` suite reports both so any
    discrepancy between the estimate and the measured derivative is visible
    rather than assumed away.
    """
    base = _check_channel(base_channel, joint, "base_channel")
    residual = _check_channel(residual_channel, joint, "residual_channel")
    weights = joint.vision_weights()

    total = 0.0
    for h in range(joint.n_histories):
        w = weights[h]
        mixed = w @ residual[h]  # residual_bar(y | h)
        for v in range(joint.n_visions):
            if w[v] == 0.0:
                continue
            p_row = base[h, v]
            r_row = residual[h, v]
            support = p_row > 0.0
            if np.any(r_row[support] <= 0.0) or np.any(mixed[support] <= 0.0):
                raise SupportMismatch(
                    "residual channel must be positive wherever the base channel is"
                )
            a_vals = np.log(r_row[support]) - np.log(mixed[support])
            total += float(w[v]) * float(p_row[support] @ a_vals)
    return total / joint.n_histories


def mi_finite_difference(
    joint: DiscreteJoint, base_channel, residual_channel, step: float = FD_STEP
) -> float:
    """Central-difference oracle for the blended-MI derivative at alpha = 0."""
    hi = blended_mutual_information(joint, base_channel, residual_channel, step)
    lo = blended_mutual_information(joint, base_channel, residual_channel, -step)
    return (hi - lo) / (2.0 * step)


# ---------------------------------------------------------------------------
# Random-instance generators and suite runners (used by tests and the CLI).
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SuiteCase:
    """One comparison inside a suite: analytic value vs. oracle value."""

    index: int
    analytic: float
    oracle: float

    @property
    def abs_error(self) -> float:
        return abs(self.analytic - self.oracle)


@dataclass(frozen=True)
class SuiteReport:
    """Machine-readable outcome of one verification suite."""

    name: str
    n_cases: int
    tolerance: float
    max_abs_error: float
    n_failures: int
    passed: bool
    worst_cases: tuple[SuiteCase, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n_cases": self.n_cases,
            "tolerance": self.tolerance,
            "max_abs_error": self.max_abs_error,
            "n_failures": self.n_failures,
            "passed": self.passed,
            "worst_cases": [
                {
                    "index": c.index,
                    "analytic": c.analytic,
                    "oracle": c.oracle,
                    "abs_error": c.abs_error,
                }
                for c in self.worst_cases
            ],
        }


def random_tilt_family(rng: np.random.Generator, min_dim: int = 2, max_dim: int = 16) -> TiltFamily:
    """Random family: Dirichlet base over 2-16 tokens, Gaussian offsets."""
    dim = int(rng.integers(min_dim, max_dim + 1))
    base = rng.dirichlet(np.ones(dim))
    offsets = rng.normal(0.0, 1.5, size=dim)
    return TiltFamily(base=base, residual_offsets=offsets)


def random_joint_instance(
    rng: np.random.Generator,
    max_histories: int = 3,
    max_visions: int = 4,
    max_tokens: int = 4,
) -> tuple[DiscreteJoint, np.ndarray, np.ndarray]:
    """Random (joint, base_channel, residual_channel) triple on a small grid.

    The joint is built as ``p(v|h) * base(y|v,h)`` so the base channel is the
    joint's own conditional; the residual channel is an independent draw with
    full support.
    """
    n_h = int(rng.integers(1, max_histories + 1))
    n_v = int(rng.integers(2, max_visions + 1))
    n_y = int(rng.integers(2, max_tokens + 1))
    vision = rng.dirichlet(np.ones(n_v), size=n_h)
    base = rng.dirichlet(np.ones(n_y), size=(n_h, n_v))
    residual = rng.dirichlet(np.ones(n_y), size=(n_h, n_v))
    table = vision[:, :, None] * base
    return DiscreteJoint(table=table), base, residual


def _suite_report(name, pairs, tolerance, keep_worst=5) -> SuiteReport:
    cases = [SuiteCase(i, float(a), float(o)) for i, (a, o) in enumerate(pairs)]
    errors = np.array([c.abs_error for c in cases]) if cases else np.zeros(0)
    failures = int(np.sum(errors > tolerance)) if cases else 0
    worst = tuple(sorted(cases, key=lambda c: -c.abs_error)[:keep_worst])
    return SuiteReport(
        name=name,
        n_cases=len(cases),
        tolerance=tolerance,
        max_abs_error=float(errors.max()) if cases else 0.0,
        n_failures=failures,
        passed=failures == 0,
        worst_cases=worst,
    )


def run_entropy_derivative_suite(
    n_cases: int = 1000, seed: int = 0, tolerance: float = 1e-6
) -> SuiteReport:
    """Analytic entropy derivative vs. central differences on random families.

    Each family is probed at every grid alpha; the reported case error is the
    family's worst grid point.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_cases):
        fam = random_tilt_family(rng)
        worst = (0.0, 0.0)
        worst_err = -1.0
        for a in ALPHA_GRID:
            analytic = entropy_derivative(fam, float(a))
            oracle = entropy_finite_difference(fam, float(a))
            err = abs(analytic - oracle)
            if err > worst_err:
                worst_err = err
                worst = (analytic, oracle)
        pairs.append(worst)
    return _suite_report("entropy-derivative-vs-fd", pairs, tolerance)


def run_entropy_monotonicity_suite(n_cases: int = 200, seed: int = 1) -> SuiteReport:
    """Entropy-decrease conclusion on every instance whose hypotheses hold.

    Mixes unconstrained random families with aligned ones (offsets set to a
    positive multiple of log base, which satisfy the hypotheses by
    construction) so both branches of the grid check are exercised.  A case
    fails only if the hypotheses hold across the grid yet some positive-alpha
    entropy is not strictly below the base entropy; the analytic/oracle pair
    stores the base and worst positive-alpha entropies for inspection.
    """
    rng = np.random.default_rng(seed)
    pairs = []
    n_checked = 0
    for i in range(n_cases):
        fam = random_tilt_family(rng)
        if i % 2 == 0:
            scale = float(rng.uniform(0.2, 2.0))
            offsets = scale * np.log(np.maximum(fam.base, 1e-300))
            fam = TiltFamily(base=fam.base, residual_offsets=offsets)
        report = check_entropy_monotonicity(fam)
        if not report.conclusion_checked:
            continue
        n_checked += 1
        positive = report.alphas > 0.0
        worst_entropy = float(report.entropies[positive].max())
        if report.conclusion_holds:
            pairs.append((0.0, 0.0))
        else:
            pairs.append((worst_entropy, report.base_entropy))
    report = _suite_report("entropy-monotonicity", pairs, tolerance=0.0)
    # passed means: no hypothesis-satisfying instance violated the conclusion.
    return SuiteReport(
        name=report.name,
        n_cases=n_checked,
        tolerance=0.0,
        max_abs_error=report.max_abs_error,
        n_failures=report.n_failures,
        passed=report.n_failures == 0,
        worst_cases=report.worst_cases,
    )


def run_mi_derivative_suite(
    n_cases: int = 100, seed: int = 2, tolerance: float = 1e-5
) -> SuiteReport:
    """Closed-form MI-derivative estimate vs. the finite-difference oracle."""
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_cases):
        joint, base, residual = random_joint_instance(rng)
        analytic = mi_derivative_at_zero(joint, base, residual)
        oracle = mi_finite_difference(joint, base, residual)
        pairs.append((analytic, oracle))
    return _suite_report("mi-derivative-vs-fd", pairs, tolerance)


def run_theory_suites(seed: int = 0) -> list[SuiteReport]:
    """All three suites at their pinned sizes and tolerances."""
    return [
        run_entropy_derivative_suite(n_cases=1000, seed=seed),
        run_mi_derivative_suite(n_cases=100, seed=seed + 1),
        run_entropy_monotonicity_suite(n_cases=200, seed=seed + 2),
    ]
