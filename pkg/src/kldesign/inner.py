"""Inner minimization of the averaged divergence over the rival parameters.

Solves min_{beta2 in box} sum_i w_i I(x_i, beta2) with a multistart,
box-clipped Nelder-Mead descent. The multistart pool is one warm start
(perturbed by relative noise so the search does not stagnate on a stale
optimum) plus uniform draws from the parameter box. The spread of the
near-optimal multistart endpoints doubles as a singularity diagnostic: a
design whose minimizer is far from unique shows a large dispersion.
"""

from dataclasses import dataclass

import numpy as np

from .designs import Design
from .errors import DomainError, UnsupportedModelError
from .models import GaussianRegressionPair, ModelPair, ParamBox

# Multistart values within this (relative) distance of the best tie for the
# dispersion diagnostic.
VALUE_TIE_RTOL = 1e-8
# Exact-tie window for the lexicographic tie-break of beta2_hat.
EXACT_TIE_TOL = 1e-12
# Additive floor inside the warm-start perturbation magnitude.
WARM_NOISE_FLOOR = 0.01


@dataclass(frozen=True)
class InnerConfig:
    """Knobs for the multistart box-constrained inner solve."""

    multistart_count: int = 8
    local_tolerance: float = 1e-9
    max_local_iterations: int = 800
    warm_start_noise_scale: float = 0.1
    dispersion_threshold: float | None = None  # None: 1e-3 x box diameter

    def __post_init__(self):
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")
        if self.local_tolerance <= 0 or self.max_local_iterations <= 0:
            raise ValueError("local tolerance and iteration budget must be positive")
        if self.warm_start_noise_scale <= 0:
            raise ValueError("warm_start_noise_scale must be positive")
        if self.dispersion_threshold is not None and self.dispersion_threshold <= 0:
            raise ValueError("dispersion_threshold must be positive")


@dataclass(frozen=True)
class InnerSolution:
    """Best box-constrained minimizer found, plus the multistart evidence."""

    beta2_hat: np.ndarray
    value: float
    all_minima: tuple[tuple[np.ndarray, float], ...]
    dispersion: float
    singular_flag: bool
    at_boundary: bool


def _as_generator(rng) -> np.random.Generator:
    if rng is None:
        return np.random.default_rng(0)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _nelder_mead_box(f, x0: np.ndarray, lower: np.ndarray, upper: np.ndarray,
                     xatol: float, fatol: float, max_iter: int,
                     initial_step: np.ndarray):
    """Nelder-Mead with every candidate clipped into [lower, upper].

    Returns (best point, best value). Termination: simplex extent below
    `xatol` and value spread below `fatol`, or the iteration budget.
    """
    d = x0.size
    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    sim = np.empty((d + 1, d))
    sim[0] = x0
    for j in range(d):
        v = x0.copy()
        step = initial_step[j]
        v[j] = v[j] + step if v[j] + step <= upper[j] else v[j] - step
        sim[j + 1] = np.clip(v, lower, upper)
    fs = np.array([f(s) for s in sim])
    for _ in range(max_iter):
        order = np.argsort(fs, kind="stable")
        sim, fs = sim[order], fs[order]
        if (np.max(np.abs(sim[1:] - sim[0])) <= xatol
                and np.max(np.abs(fs[1:] - fs[0])) <= fatol * max(1.0, abs(fs[0]))):
            break
        centroid = sim[:-1].mean(axis=0)
        xr = np.clip(centroid + alpha * (centroid - sim[-1]), lower, upper)
        fr = f(xr)
        if fr < fs[0]:
            xe = np.clip(centroid + gamma * (xr - centroid), lower, upper)
            fe = f(xe)
            if fe < fr:
                sim[-1], fs[-1] = xe, fe
            else:
                sim[-1], fs[-1] = xr, fr
        elif fr < fs[-2]:
            sim[-1], fs[-1] = xr, fr
        else:
            if fr < fs[-1]:
                xc = np.clip(centroid + rho * (xr - centroid), lower, upper)
                fc = f(xc)
                shrink = fc > fr
            else:
                xc = centroid + rho * (sim[-1] - centroid)
                fc = f(xc)
                shrink = fc >= fs[-1]
            if shrink:
                sim[1:] = sim[0] + sigma * (sim[1:] - sim[0])
                fs[1:] = [f(s) for s in sim[1:]]
            else:
                sim[-1], fs[-1] = xc, fc
    i = int(np.argmin(fs))
    return sim[i], float(fs[i])


def _local_minimize(f, x0: np.ndarray, box: ParamBox, tol: float, max_iter: int):
    """Nelder-Mead descent with restart polishing from progressively smaller simplexes."""
    lower, upper = box.lower, box.upper
    span = upper - lower
    x, fx = _nelder_mead_box(f, np.clip(x0, lower, upper), lower, upper,
                             xatol=tol, fatol=1e-13, max_iter=max_iter,
                             initial_step=0.05 * span)
    step = np.maximum(1e-5 * span, 100.0 * tol)
    for _ in range(3):
        x2, f2 = _nelder_mead_box(f, x, lower, upper, xatol=tol, fatol=1e-14,
                                  max_iter=max_iter, initial_step=step)
        if f2 < fx:
            x, fx = x2, f2
            step = np.maximum(step * 0.01, 10.0 * tol)
        else:
            break
    return x, fx


def minimize_beta2(pair: ModelPair, design: Design, config: InnerConfig = InnerConfig(),
                   warm_start=None, rng=None) -> InnerSolution:
    """Multistart minimization of the design-averaged divergence over beta2.

    The start pool is the warm start perturbed componentwise by Gaussian
    noise of scale ``warm_start_noise_scale * (|beta_j| + 0.01)`` (the box
    midpoint when no warm start is given), followed by
    ``multistart_count - 1`` uniform draws from the box. Draws come from
    `rng` (seed, Generator, or None for a fixed default), so the solve is
    pure given its inputs and seed, and enlarging the pool under the same
    seed only extends it.
    """
    if design.size < 1:
        raise DomainError("design has no support points")
    box = pair.theta2
    gen = _as_generator(rng)
    weights = design.weights
    evaluator = getattr(pair, "divergence_evaluator", None)
    if evaluator is not None:
        pointwise = evaluator(design.points)
    else:
        points = design.points
        pointwise = lambda b: pair.divergence(points, b)  # noqa: E731

    def objective(b: np.ndarray) -> float:
        return float(weights @ pointwise(b))

    if warm_start is not None:
        b0 = box.clip(warm_start)
        noise = gen.normal(0.0, config.warm_start_noise_scale * (np.abs(b0) + WARM_NOISE_FLOOR))
        first = box.clip(b0 + noise)
    else:
        first = box.midpoint
    starts = [first]
    if config.multistart_count > 1:
        starts.extend(box.sample(gen, config.multistart_count - 1))

    minima = [_local_minimize(objective, s, box, config.local_tolerance,
                              config.max_local_iterations) for s in starts]
    values = np.array([v for _, v in minima])
    best_value = float(values.min())

    # Deterministic tie-break: lexicographically smallest beta2 among exact ties.
    tied = [b for b, v in minima if v <= best_value + EXACT_TIE_TOL]
    tied.sort(key=lambda b: tuple(b))
    beta2_hat = tied[0]
    value = objective(beta2_hat)

    near = [b for b, v in minima if v <= best_value + VALUE_TIE_RTOL * max(1.0, abs(best_value))]
    dispersion = 0.0
    for i in range(len(near)):
        for j in range(i + 1, len(near)):
            dispersion = max(dispersion, float(np.linalg.norm(near[i] - near[j])))
    threshold = config.dispersion_threshold
    if threshold is None:
        threshold = 1e-3 * box.diameter
    edge = 1e-9 * (box.upper - box.lower)
    at_boundary = bool(np.any(beta2_hat <= box.lower + edge)
                       or np.any(beta2_hat >= box.upper - edge))
    return InnerSolution(
        beta2_hat=beta2_hat,
        value=value,
        all_minima=tuple((b, float(v)) for b, v in minima),
        dispersion=dispersion,
        singular_flag=dispersion > threshold,
        at_boundary=at_boundary,
    )


def criterion_value(pair: ModelPair, design: Design, config: InnerConfig = InnerConfig(),
                    warm_start=None, rng=None) -> float:
    """Min-divergence criterion value: the minimum of the averaged divergence."""
    return minimize_beta2(pair, design, config, warm_start, rng).value


def least_squares_oracle(pair: GaussianRegressionPair, design: Design):
    """Closed-form weighted least-squares solution of the Gaussian inner problem.

    For Gaussian pairs the inner problem is linear least squares in beta2;
    this independent route (normal equations via lstsq, box ignored) is used
    to cross-check the numeric solver.
    """
    if not isinstance(pair, GaussianRegressionPair):
        raise UnsupportedModelError("least-squares oracle applies to Gaussian pairs only")
    x = design.points
    y = pair.true_values(x)
    basis = pair.rival_matrix(x)
    sw = np.sqrt(design.weights)
    beta, *_ = np.linalg.lstsq(sw[:, None] * basis, sw * y, rcond=None)
    resid = y - basis @ beta
    value = float(design.weights @ (resid * resid)) / (2.0 * pair.sigma2)
    return beta, value
