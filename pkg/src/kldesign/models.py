"""Rival model pairs and their pointwise Kullback-Leibler divergence.

Each pair fixes the true model's parameters and leaves the rival's
parameters free inside a compact box. The pair exposes the closed-form
pointwise divergence I(x, beta2) between the two conditional response
distributions; its design average is what the inner solver minimizes.

Built-in kinds:

* :class:`GaussianRegressionPair` -- equal-variance Gaussian responses with
  polynomial means; divergence (m1(x) - m2(x, beta2))^2 / (2 sigma2).
* :class:`LogisticGlmPair` -- Bernoulli responses with logistic link and
  polynomial linear predictors.
* :class:`SyntheticFamily` -- a fixed piecewise divergence family on [0, 1]
  whose design averages under (truncated) uniform measures have closed
  forms; useful for probing discontinuity of the min-divergence criterion.
"""

from dataclasses import dataclass, field
from typing import ClassVar, Union

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import expit

from .designs import Design, AffineMap, _freeze
from .errors import DomainError, UnsupportedModelError


@dataclass(frozen=True)
class ParamBox:
    """Closed box approximating the rival model's open parameter set."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float)).ravel()
        hi = np.atleast_1d(np.asarray(self.upper, dtype=float)).ravel()
        if lo.size != hi.size or lo.size < 1:
            raise ValueError("lower and upper must be vectors of equal length >= 1")
        if not np.all(lo < hi):
            raise ValueError("parameter box must satisfy lower[j] < upper[j]")
        object.__setattr__(self, "lower", _freeze(lo))
        object.__setattr__(self, "upper", _freeze(hi))

    @property
    def dimension(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, beta2, slack: float = 0.0) -> bool:
        b = np.asarray(beta2, dtype=float).ravel()
        return bool(np.all(b >= self.lower - slack) and np.all(b <= self.upper + slack))

    def clip(self, beta2) -> np.ndarray:
        return np.clip(np.asarray(beta2, dtype=float).ravel(), self.lower, self.upper)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dimension))


def softplus(x) -> np.ndarray:
    """log(1 + exp(x)) without overflow for |x| up to the float64 range."""
    return np.logaddexp(0.0, np.asarray(x, dtype=float))


def _coef(c) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(c, dtype=float)).ravel()
    if arr.size == 0:
        raise ValueError("empty coefficient vector")
    return arr


def monomial_basis(exponents) -> tuple[np.ndarray, ...]:
    """Coefficient vectors (ascending) of the monomials x^e for each exponent."""
    exps = [int(e) for e in exponents]
    if len(set(exps)) != len(exps):
        raise ValueError("basis exponents must be distinct")
    basis = []
    for e in exps:
        if e < 0:
            raise ValueError("exponents must be nonnegative")
        c = np.zeros(e + 1)
        c[e] = 1.0
        basis.append(c)
    return tuple(basis)


def _scalar_inputs(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 2:
        if pts.shape[1] != 1:
            raise DomainError("built-in model pairs take scalar experimental conditions")
        pts = pts[:, 0]
    return np.atleast_1d(pts)


def _poly_matrix(basis: tuple[np.ndarray, ...], x: np.ndarray) -> np.ndarray:
    return np.column_stack([np.polynomial.polynomial.polyval(x, c) for c in basis])


def _check_basis(basis: tuple[np.ndarray, ...], box: ParamBox):
    if len(basis) != box.dimension:
        raise ValueError(f"{len(basis)} basis functions but parameter box of "
                         f"dimension {box.dimension}")
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            a, b = basis[i], basis[j]
            m = max(a.size, b.size)
            if np.array_equal(np.pad(a, (0, m - a.size)), np.pad(b, (0, m - b.size))):
                raise ValueError("rival basis polynomials must be distinct")


@dataclass(frozen=True)
class GaussianRegressionPair:
    """Equal-variance Gaussian responses; true polynomial mean vs rival span.

    `beta1` holds the ascending monomial coefficients of the known true mean;
    the rival mean is sum_j beta2[j] * basis_j(x) with each basis function a
    polynomial given by its ascending coefficient vector. The pointwise
    divergence is (m1(x) - m2(x, beta2))^2 / (2 sigma2).
    """

    beta1: np.ndarray
    rival_basis: tuple[np.ndarray, ...]
    theta2: ParamBox
    sigma2: float = 0.5

    kind: ClassVar[str] = "gaussian-regression"
    glm_family: ClassVar[str] = "gaussian"

    def __post_init__(self):
        if self.sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        object.__setattr__(self, "beta1", _freeze(_coef(self.beta1)))
        basis = tuple(_freeze(_coef(c)) for c in self.rival_basis)
        _check_basis(basis, self.theta2)
        object.__setattr__(self, "rival_basis", basis)

    @classmethod
    def from_exponents(cls, beta1, exponents, theta2: ParamBox,
                       sigma2: float = 0.5) -> "GaussianRegressionPair":
        return cls(_coef(beta1), monomial_basis(exponents), theta2, sigma2)

    @property
    def dimension(self) -> int:
        return self.theta2.dimension

    def true_values(self, points) -> np.ndarray:
        return np.polynomial.polynomial.polyval(_scalar_inputs(points), self.beta1)

    def rival_matrix(self, points) -> np.ndarray:
        return _poly_matrix(self.rival_basis, _scalar_inputs(points))

    def divergence(self, points, beta2) -> np.ndarray:
        x = _scalar_inputs(points)
        resid = self.true_values(x) - self.rival_matrix(x) @ np.asarray(beta2, dtype=float)
        return resid * resid / (2.0 * self.sigma2)

    def divergence_evaluator(self, points):
        """Closure over fixed points for repeated beta2 evaluation (hot path)."""
        x = _scalar_inputs(points)
        y = self.true_values(x)
        basis = self.rival_matrix(x)
        half_inv_var = 0.5 / self.sigma2

        def values(beta2) -> np.ndarray:
            resid = y - basis @ beta2
            return resid * resid * half_inv_var

        return values


@dataclass(frozen=True)
class LogisticGlmPair:
    """Bernoulli responses P(Y=1|x) = expit(eta_i(x)) with polynomial predictors.

    `beta1` holds the ascending coefficients of the true predictor eta1
    (intercept included); the rival predictor is eta2 = sum_j beta2[j] *
    basis_j(x). The divergence is evaluated in the softplus form

        (eta1 - eta2) * expit(eta1) + softplus(eta2) - softplus(eta1),

    which is exact and stable for |eta| <= 700.
    """

    beta1: np.ndarray
    rival_basis: tuple[np.ndarray, ...]
    theta2: ParamBox

    kind: ClassVar[str] = "logistic-glm"
    glm_family: ClassVar[str] = "logistic"

    def __post_init__(self):
        object.__setattr__(self, "beta1", _freeze(_coef(self.beta1)))
        basis = tuple(_freeze(_coef(c)) for c in self.rival_basis)
        _check_basis(basis, self.theta2)
        object.__setattr__(self, "rival_basis", basis)

    @classmethod
    def from_exponents(cls, beta1, exponents, theta2: ParamBox) -> "LogisticGlmPair":
        return cls(_coef(beta1), monomial_basis(exponents), theta2)

    @property
    def dimension(self) -> int:
        return self.theta2.dimension

    def true_predictor(self, points) -> np.ndarray:
        return np.polynomial.polynomial.polyval(_scalar_inputs(points), self.beta1)

    def rival_matrix(self, points) -> np.ndarray:
        return _poly_matrix(self.rival_basis, _scalar_inputs(points))

    def divergence(self, points, beta2) -> np.ndarray:
        x = _scalar_inputs(points)
        eta1 = self.true_predictor(x)
        eta2 = self.rival_matrix(x) @ np.asarray(beta2, dtype=float)
        val = (eta1 - eta2) * expit(eta1) + softplus(eta2) - softplus(eta1)
        return np.maximum(val, 0.0)  # clamp rounding noise; KL is nonnegative

    def divergence_evaluator(self, points):
        """Closure over fixed points for repeated beta2 evaluation (hot path)."""
        x = _scalar_inputs(points)
        eta1 = self.true_predictor(x)
        basis = self.rival_matrix(x)
        mean1 = expit(eta1)
        soft1 = softplus(eta1)

        def values(beta2) -> np.ndarray:
            eta2 = basis @ beta2
            val = (eta1 - eta2) * mean1 + softplus(eta2) - soft1
            return np.maximum(val, 0.0)

        return values


def _default_synthetic_box() -> ParamBox:
    return ParamBox([1e-6], [1000.0])


@dataclass(frozen=True)
class SyntheticFamily:
    """Fixed piecewise divergence family on [0, 1] with a scalar parameter.

        I(x, b) = 2((2b - 1)x + (1 - b))   for b <= 1
        I(x, b) = (b + 1) x^b              for b > 1

    Both branches equal 2x at b = 1. Every one-point design has criterion
    value 0, yet the average under the uniform measure on [0, 1] is
    identically 1; the closed-form averages below expose that gap without
    needing continuous-support designs.
    """

    theta2: ParamBox = field(default_factory=_default_synthetic_box)

    kind: ClassVar[str] = "synthetic-family"
    glm_family: ClassVar[str] = ""

    def __post_init__(self):
        if self.theta2.dimension != 1:
            raise ValueError("synthetic family has a single scalar parameter")

    @property
    def dimension(self) -> int:
        return 1

    def rival_matrix(self, points):
        return None

    def divergence(self, points, beta2) -> np.ndarray:
        x = _scalar_inputs(points)
        b = float(np.asarray(beta2, dtype=float).ravel()[0])
        if b <= 1.0:
            val = 2.0 * ((2.0 * b - 1.0) * x + (1.0 - b))
        else:
            val = (b + 1.0) * np.power(x, b)
        return np.maximum(val, 0.0)

    def divergence_evaluator(self, points):
        x = _scalar_inputs(points)
        return lambda beta2: self.divergence(x, beta2)

    # Closed-form averages for the continuous fixtures.

    def truncated_uniform_average(self, beta2: float, n: int) -> float:
        """Average divergence under the uniform measure on [0, 1 - 1/n]."""
        if n < 2:
            raise ValueError("n must be >= 2")
        b = float(beta2)
        if b <= 1.0:
            return 1.0 - (2.0 * b - 1.0) / n
        return float((1.0 - 1.0 / n) ** b)

    def uniform_average(self, beta2: float) -> float:
        """Average divergence under the uniform measure on [0, 1]; equals 1."""
        return 1.0

    def truncated_uniform_criterion(self, n: int, box: ParamBox | None = None) -> float:
        """Infimum over the box of the truncated-uniform average (closed form).

        Both branches decrease in the parameter and agree at 1, so the average
        is decreasing over the whole box and the infimum sits at its upper end.
        """
        box = box or self.theta2
        return self.truncated_uniform_average(float(box.upper[0]), n)

    def uniform_criterion(self, box: ParamBox | None = None) -> float:
        """Infimum over the box of the uniform-[0,1] average; identically 1."""
        return 1.0


ModelPair = Union[GaussianRegressionPair, LogisticGlmPair, SyntheticFamily]


def kl_pointwise(pair: ModelPair, x, beta2) -> float:
    """Pointwise divergence I(x, beta2) at a single experimental condition."""
    pt = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    return float(pair.divergence(pt, beta2)[0])


def kl_average(pair: ModelPair, design: Design, beta2) -> float:
    """Design-weighted average of the pointwise divergence."""
    return float(design.weights @ pair.divergence(design.points, beta2))


@dataclass(frozen=True)
class GlmDesignMatrix:
    """Rival-model regressor rows X at the support points, with the beta2 they
    are evaluated at (the GLM weight matrix depends on beta2)."""

    rows: np.ndarray
    beta2: np.ndarray

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        b = np.atleast_1d(np.asarray(self.beta2, dtype=float)).ravel()
        if rows.shape[0] < 1:
            raise ValueError("design matrix needs at least one row")
        if rows.shape[1] != b.size:
            raise ValueError(f"matrix has {rows.shape[1]} columns but beta2 has "
                             f"{b.size} entries")
        object.__setattr__(self, "rows", _freeze(rows))
        object.__setattr__(self, "beta2", _freeze(b))

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d2(self) -> int:
        return self.rows.shape[1]


def glm_weight_vector(m: GlmDesignMatrix, family: str = "logistic",
                      sigma2: float = 1.0) -> np.ndarray:
    """Diagonal of the GLM weight matrix W = diag[(dmu/deta)^2 / Var(Y)]."""
    if family == "logistic":
        p = expit(m.rows @ m.beta2)
        return p * (1.0 - p)
    if family == "gaussian":
        if sigma2 <= 0:
            raise ValueError("sigma2 must be positive")
        return np.full(m.n, 1.0 / sigma2)
    raise ValueError(f"unknown GLM family {family!r}")


def glm_fisher_information(m: GlmDesignMatrix, family: str = "logistic",
                           sigma2: float = 1.0) -> np.ndarray:
    """Fisher information J = X^T W X for the rival GLM."""
    w = glm_weight_vector(m, family, sigma2)
    j = m.rows.T @ (w[:, None] * m.rows)
    return 0.5 * (j + j.T)


def glm_is_regular(m: GlmDesignMatrix) -> bool:
    """True iff rank(X) = d2, i.e. the Fisher information is nonsingular.

    Rank is decided from singular values with the threshold
    max(n, d2) * sigma_max * 1e-12.
    """
    s = np.linalg.svd(m.rows, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return False
    threshold = max(m.n, m.d2) * s[0] * 1e-12
    return int(np.sum(s > threshold)) == m.d2


def _compose_affine(coeffs: np.ndarray, a: float, b: float) -> np.ndarray:
    # Exact expansion of p((z - a) / b) in ascending monomial coefficients.
    p = Polynomial(np.asarray(coeffs, dtype=float))
    inner = Polynomial([-a / b, 1.0 / b])
    comp = p(inner)
    out = np.zeros(len(coeffs))
    c = np.atleast_1d(comp.coef if isinstance(comp, Polynomial) else comp)
    out[:c.size] = c
    return out


def reparametrize_under_affine(pair: ModelPair, amap: AffineMap) -> ModelPair:
    """Re-express a polynomial-predictor pair on the image domain z = a + Bx.

    The true-model coefficients are the exact expansion of the original
    polynomial composed with x = B^{-1}(z - a); each rival basis function is
    composed the same way, so the rival span on the image domain equals the
    original span and beta2 keeps its meaning (the induced coefficient map is
    the identity in this representation).
    """
    if isinstance(pair, SyntheticFamily):
        raise UnsupportedModelError("synthetic family has no polynomial predictor")
    if amap.q != 1:
        raise UnsupportedModelError("built-in reparametrization covers scalar "
                                    "experimental conditions only")
    a = float(amap.offset[0])
    b = float(amap.matrix[0, 0])
    beta1 = _compose_affine(pair.beta1, a, b)
    basis = tuple(_compose_affine(c, a, b) for c in pair.rival_basis)
    if isinstance(pair, GaussianRegressionPair):
        return GaussianRegressionPair(beta1, basis, pair.theta2, pair.sigma2)
    return LogisticGlmPair(beta1, basis, pair.theta2)
