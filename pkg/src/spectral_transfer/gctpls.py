"""Graph-regularized PLS1 for calibration transfer (GCT-PLS).

Each latent variable is extracted NIPALS-style, except that the weight
vector is the closed-form minimizer of

    ||X - y w'||_F^2 + gamma * w' G w,   G = (Xp - Xs)' (Xp - Xs),

i.e. ``w = (y'y I + gamma G)^-1 X'y``. The penalty pulls the primary and
secondary projections of every matched standard together. After a
component is extracted, X and both standards blocks are deflated with their
own loadings; y is left untouched. With ``gamma = 0`` the fit is ordinary
NIPALS PLS1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CollinearityError,
    DegenerateInputError,
    InputError,
    RankExhaustedError,
    ShapeError,
)
from .graphreg import Regularizer, StandardsPair
from .numcore import CenteringInfo, as_matrix, as_vector, mean_center, recenter, solve_spd

logger = logging.getLogger(__name__)

# Channel count above which the weight system is solved through the rank-K factor.
DENSE_MAX_CHANNELS = 256

# Relative size below which a score vector counts as zero.
_SCORE_RTOL = 1e-10
_COND_MAX = 1e12


@dataclass(frozen=True)
class FitConfig:
    gamma: float = 1e6
    n_components: int = 2
    center_standards: bool = False

    def __post_init__(self):
        gamma = float(self.gamma)
        if not np.isfinite(gamma) or gamma < 0:
            raise InputError(f"gamma must be a finite non-negative number, got {self.gamma!r}")
        if int(self.n_components) != self.n_components or self.n_components < 1:
            raise InputError(f"n_components must be a positive integer, got {self.n_components!r}")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "n_components", int(self.n_components))
        object.__setattr__(self, "center_standards", bool(self.center_standards))

    def check_data(self, n_samples: int, n_channels: int) -> None:
        limit = min(n_samples - 1, n_channels)
        if self.n_components > limit:
            raise InputError(
                f"n_components={self.n_components} exceeds min(N-1, d)={limit}"
            )


@dataclass(frozen=True)
class ComponentFit:
    """Everything computed while extracting one latent variable."""

    w: np.ndarray
    t: np.ndarray
    p: np.ndarray
    c: float
    t_p: np.ndarray
    t_s: np.ndarray
    p_p: np.ndarray
    p_s: np.ndarray


@dataclass(frozen=True)
class StandardsResidual:
    """Deflated standards after ``component`` latent variables (0 = before any)."""

    component: int
    primary_norm: float
    secondary_norm: float
    cross_norm: float
    Xp: np.ndarray | None = None
    Xs: np.ndarray | None = None


@dataclass(frozen=True)
class LatentModel:
    W: np.ndarray
    P: np.ndarray
    c_vec: np.ndarray
    b: np.ndarray
    centering: CenteringInfo
    config: FitConfig
    components: tuple[ComponentFit, ...] = ()
    residuals: tuple[StandardsResidual, ...] = ()
    final_residual: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_components(self) -> int:
        return self.W.shape[1]

    @property
    def n_channels(self) -> int:
        return self.W.shape[0]

    def predict(self, X_new) -> np.ndarray:
        return predict(self, X_new)

    def transform(self, X_new, n_lv: int | None = None) -> np.ndarray:
        return transform(self, X_new, n_lv)

    def reconstruct(self, X_new, n_lv: int | None = None) -> np.ndarray:
        return reconstruct(self, X_new, n_lv)


def solve_weights(X, y, reg: Regularizer | None, gamma: float, method: str = "auto") -> np.ndarray:
    """Unnormalized regularized weight vector.

    Solves ``(y'y I + gamma G) w = X'y`` where ``G`` is the standards
    penalty held by ``reg``. ``method`` is ``"dense"`` (Cholesky on the
    d x d system), ``"woodbury"`` (K x K solve through ``Xp - Xs``) or
    ``"auto"``, which picks dense for ``d <= DENSE_MAX_CHANNELS``.
    """
    X = as_matrix(X)
    y = as_vector(y)
    if X.shape[0] != y.shape[0]:
        raise ShapeError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    gamma = float(gamma)
    if not np.isfinite(gamma) or gamma < 0:
        raise InputError(f"gamma must be non-negative, got {gamma!r}")
    yy = float(y @ y)
    if not yy > np.finfo(float).tiny:
        raise DegenerateInputError("y'y is zero; the weight system is undefined")
    rhs = X.T @ y
    if reg is None or gamma == 0.0:
        return rhs / yy
    if reg.n_channels != X.shape[1]:
        raise ShapeError(f"regularizer has {reg.n_channels} channels, X has {X.shape[1]}")

    if method == "auto":
        method = "dense" if X.shape[1] <= DENSE_MAX_CHANNELS else "woodbury"
    if method == "dense":
        S = gamma * reg.dense
        S[np.diag_indices_from(S)] += yy
        return solve_spd(S, rhs)
    if method == "woodbury":
        # (yy I + g D'D)^-1 = (I - D' (yy/g I + D D')^-1 D) / yy
        Dm = reg.difference
        inner = Dm @ Dm.T
        inner = 0.5 * (inner + inner.T)
        inner[np.diag_indices_from(inner)] += yy / gamma
        z = solve_spd(inner, Dm @ rhs)
        return (rhs - Dm.T @ z) / yy
    raise InputError(f"unknown solve method {method!r}")


def objective_and_gradient(w, X, y, reg: Regularizer | None, gamma: float) -> tuple[float, np.ndarray]:
    """Penalized reconstruction objective for one component and its gradient in ``w``."""
    w = as_vector(w, "w")
    X = as_matrix(X)
    y = as_vector(y)
    if X.shape != (y.shape[0], w.shape[0]):
        raise ShapeError(f"shapes disagree: X {X.shape}, y {y.shape}, w {w.shape}")
    resid = X - np.outer(y, w)
    obj = float(np.sum(resid * resid))
    grad = 2.0 * (-(X.T @ y) + float(y @ y) * w)
    if reg is not None and gamma != 0.0:
        obj += gamma * reg.value(w)
        grad += 2.0 * gamma * reg.matvec(w)
    return obj, grad


def _orient(w: np.ndarray) -> np.ndarray:
    # fixed sign: largest-magnitude entry positive
    return -w if w[np.argmax(np.abs(w))] < 0 else w


def _loading(M: np.ndarray, t: np.ndarray, floor: float) -> np.ndarray:
    tt = float(t @ t)
    if tt <= floor:
        # block already deflated to zero along this direction
        return np.zeros(M.shape[1])
    return M.T @ t / tt


def _residual(component: int, Xp: np.ndarray, Xs: np.ndarray) -> StandardsResidual:
    return StandardsResidual(
        component=component,
        primary_norm=float(np.linalg.norm(Xp)),
        secondary_norm=float(np.linalg.norm(Xs)),
        cross_norm=float(np.linalg.norm(Xp - Xs)),
        Xp=Xp.copy(),
        Xs=Xs.copy(),
    )


def fit(X0, y0, standards: StandardsPair | None, config: FitConfig | None = None,
        solve_method: str = "auto") -> LatentModel:
    """Fit a GCT-PLS model.

    Parameters
    ----------
    X0, y0
        Raw (uncentered) primary calibration spectra and responses.
    standards
        Matched standards measured on both instruments. ``None`` is only
        allowed with ``gamma = 0`` and gives plain PLS1.
    config
        Regularization strength, number of latent variables and whether
        the standards are centered on their own means first.

    Raises
    ------
    RankExhaustedError
        If the scores of some component vanish.
    CollinearityError
        If ``P'W`` is numerically singular.
    """
    config = config or FitConfig()
    X, y, centering = mean_center(X0, y0)
    n, d = X.shape
    config.check_data(n, d)
    if float(np.linalg.norm(y)) <= 1e-12 * max(float(np.linalg.norm(as_vector(y0))), 1e-300):
        raise DegenerateInputError("response is constant after centering")

    if standards is None:
        if config.gamma != 0.0:
            raise InputError("standards are required when gamma > 0")
        Xp = np.zeros((1, d))
        Xs = np.zeros((1, d))
    else:
        if standards.n_channels != d:
            raise ShapeError(f"standards have {standards.n_channels} channels, X has {d}")
        if config.center_standards:
            standards = standards.centered()
        Xp = standards.Xp.copy()
        Xs = standards.Xs.copy()

    x_scale2 = float(np.sum(X * X))
    std_floor = (_SCORE_RTOL ** 2) * max(float(np.sum(Xp * Xp)), float(np.sum(Xs * Xs)))
    components = []
    residuals = [_residual(0, Xp, Xs)]

    for a in range(config.n_components):
        reg = Regularizer(StandardsPair(Xp, Xs)) if standards is not None else None
        w = solve_weights(X, y, reg, config.gamma, method=solve_method)
        w_norm = float(np.linalg.norm(w))
        if not w_norm > 0.0:
            raise RankExhaustedError(a + 1, f"weight vector vanished at component {a + 1}")
        w = _orient(w / w_norm)

        t = X @ w
        tt = float(t @ t)
        if tt <= (_SCORE_RTOL ** 2) * x_scale2:
            raise RankExhaustedError(a + 1, f"scores vanished at component {a + 1}")
        t_p = Xp @ w
        t_s = Xs @ w

        c = float(t @ y) / tt
        p = X.T @ t / tt
        p_p = _loading(Xp, t_p, std_floor)
        p_s = _loading(Xs, t_s, std_floor)

        X = X - np.outer(t, p)
        Xp = Xp - np.outer(t_p, p_p)
        Xs = Xs - np.outer(t_s, p_s)

        components.append(ComponentFit(w=w, t=t, p=p, c=c, t_p=t_p, t_s=t_s, p_p=p_p, p_s=p_s))
        residuals.append(_residual(a + 1, Xp, Xs))
        logger.debug("component %d: c=%.6g, cross-residual=%.6g", a + 1, c, residuals[-1].cross_norm)

    W = np.column_stack([comp.w for comp in components])
    P = np.column_stack([comp.p for comp in components])
    c_vec = np.array([comp.c for comp in components])
    b = regression_coefficients(W, P, c_vec)
    return LatentModel(
        W=W,
        P=P,
        c_vec=c_vec,
        b=b,
        centering=centering,
        config=config,
        components=tuple(components),
        residuals=tuple(residuals) if standards is not None else (),
        final_residual=X,
    )


def regression_coefficients(W: np.ndarray, P: np.ndarray, c_vec: np.ndarray) -> np.ndarray:
    """``b = W (P'W)^-1 c``."""
    PtW = P.T @ W
    if np.linalg.cond(PtW) > _COND_MAX:
        raise CollinearityError("P'W is numerically singular")
    return W @ np.linalg.solve(PtW, c_vec)


def _checked_lv(model: LatentModel, n_lv: int | None) -> int:
    if n_lv is None:
        return model.n_components
    if int(n_lv) != n_lv or not 1 <= n_lv <= model.n_components:
        raise InputError(f"n_lv must be in 1..{model.n_components}, got {n_lv!r}")
    return int(n_lv)


def predict(model: LatentModel, X_new) -> np.ndarray:
    """Predicted responses for raw spectra, using the calibration centering."""
    Xc = recenter(X_new, model.centering)
    return Xc @ model.b + model.centering.y_mean


def transform(model: LatentModel, X_new, n_lv: int | None = None) -> np.ndarray:
    """Scores of new spectra, each computed on the running deflated residual."""
    n_lv = _checked_lv(model, n_lv)
    Xr = recenter(X_new, model.centering)
    T = np.empty((Xr.shape[0], n_lv))
    for a in range(n_lv):
        t = Xr @ model.W[:, a]
        Xr = Xr - np.outer(t, model.P[:, a])
        T[:, a] = t
    return T


def reconstruct(model: LatentModel, X_new, n_lv: int | None = None) -> np.ndarray:
    """Spectra rebuilt from the first ``n_lv`` latent variables, in raw units."""
    n_lv = _checked_lv(model, n_lv)
    T = transform(model, X_new, n_lv)
    return T @ model.P[:, :n_lv].T + model.centering.x_mean


def standards_residuals(model: LatentModel) -> tuple[StandardsResidual, ...]:
    """Deflated standards before (entry 0) and after each component.

    ``cross_norm`` is ``||Xp_res - Xs_res||_F``. Once it stops carrying
    structure, further components cannot be aligned by these standards.
    """
    return model.residuals


def standards_score_gap(model: LatentModel) -> float:
    """``||T_p - T_s||_F`` over all components' standards scores."""
    if not model.components:
        raise InputError("model carries no per-component standards scores")
    Tp = np.column_stack([comp.t_p for comp in model.components])
    Ts = np.column_stack([comp.t_s for comp in model.components])
    return float(np.linalg.norm(Tp - Ts))


def flag_transferable_lv(residuals, fraction: float = 0.01) -> int | None:
    """First component after which the cross-instrument residual norm is at most
    ``fraction`` of its value before deflation; 0 when the standards already agree
    and ``None`` when the threshold is never reached.
    """
    if not residuals:
        return None
    initial = residuals[0].cross_norm
    for res in residuals:
        if res.cross_norm <= fraction * initial:
            return res.component
    return None
