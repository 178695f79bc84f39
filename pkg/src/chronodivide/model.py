"""Soft-margin linear SVM training, scoring, and SVM-RFE feature ranking.

The trainer minimizes (1/2)||w||^2 + C * sum_i hinge(y_i (w.x_i + b)) with an
unregularized bias, solved in the dual by sequential minimal optimization
with second-order working-set selection. The solver keeps the Gram matrix of
the active feature set and supports warm-started resolves after adding or
removing a feature, which is what makes the elimination sweeps cheap.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConvergenceWarning, TrainingError

try:
    from numba import njit as _njit

    _HAVE_NUMBA = True
except ImportError:  # pure-Python fallback: same code, just slower
    _HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap


_TAU = 1e-12

# pair steps between attempts at the face-Newton rescue
_NEWTON_CADENCE = 128


@_njit(cache=True, nogil=True)
def _smo_chunk(Q, QD, y, alpha, G, C, tol, max_steps):
    """Up to max_steps SMO pair iterations in place; (steps, converged).

    Selection is maximal-violating i with second-order j; ties resolve to
    the lowest index, so results do not depend on how the caller laid the
    rows out beyond their values. Runs identically with or without JIT.
    """
    n = alpha.shape[0]
    for step in range(max_steps):
        m = -np.inf
        i = -1
        for t in range(n):
            if (y[t] > 0.0 and alpha[t] < C) or (y[t] < 0.0 and alpha[t] > 0.0):
                v = (-y[t]) * G[t]
                if v > m:
                    m = v
                    i = t
        M = np.inf
        for t in range(n):
            if (y[t] > 0.0 and alpha[t] > 0.0) or (y[t] < 0.0 and alpha[t] < C):
                v = (-y[t]) * G[t]
                if v < M:
                    M = v
        if i < 0 or M == np.inf:
            return step, True
        if m - M <= tol:
            return step, True

        best_gain = -np.inf
        j = -1
        for t in range(n):
            if (y[t] > 0.0 and alpha[t] > 0.0) or (y[t] < 0.0 and alpha[t] < C):
                v = (-y[t]) * G[t]
                if v < m:
                    b = m - v
                    a = (QD[i] + QD[t]) - (2.0 * (y[i] * (y[t] * Q[i, t])))
                    if a < _TAU:
                        a = _TAU
                    gain = (b * b) / a
                    if gain > best_gain:
                        best_gain = gain
                        j = t
        if j < 0:
            return step, True

        old_i = alpha[i]
        old_j = alpha[j]
        if y[i] != y[j]:
            quad = QD[i] + QD[j] + 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = _TAU
            delta = (-G[i] - G[j]) / quad
            diff = old_i - old_j
            ai = old_i + delta
            aj = old_j + delta
            if diff > 0.0:
                if aj < 0.0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = -diff
            if diff > 0.0:
                if ai > C:
                    ai = C
                    aj = C - diff
            else:
                if aj > C:
                    aj = C
                    ai = C + diff
        else:
            quad = QD[i] + QD[j] - 2.0 * Q[i, j]
            if quad <= 0.0:
                quad = _TAU
            delta = (G[i] - G[j]) / quad
            total = old_i + old_j
            ai = old_i - delta
            aj = old_j + delta
            if total > C:
                if ai > C:
                    ai = C
                    aj = total - C
            else:
                if aj < 0.0:
                    aj = 0.0
                    ai = total
            if total > C:
                if aj > C:
                    aj = C
                    ai = total - C
            else:
                if ai < 0.0:
                    ai = 0.0
                    aj = total
        alpha[i] = ai
        alpha[j] = aj
        dai = ai - old_i
        daj = aj - old_j
        for t in range(n):
            G[t] = G[t] + ((Q[i, t] * dai) + (Q[j, t] * daj))
    return max_steps, False


@dataclass(frozen=True)
class TrainConfig:
    regularization_c: float = 1.0
    tolerance: float = 1e-6
    max_iterations: int = 100_000
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regularization_c <= 0:
            raise TrainingError("regularization_c must be positive")
        if self.tolerance <= 0:
            raise TrainingError("tolerance must be positive")
        if self.max_iterations < 1:
            raise TrainingError("max_iterations must be >= 1")


@dataclass
class LinearModel:
    """Trained classifier over an ordered subset of feature columns."""

    weights: np.ndarray
    bias: float
    active_features: list[int]
    regularization_c: float
    validation_accuracy: float | None = None
    converged: bool = True
    iterations: int = 0
    dual_coef: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if len(self.weights) != len(self.active_features):
            raise TrainingError("weights and active_features lengths differ")
        if len(self.active_features) < 1:
            raise TrainingError("model needs at least one active feature")

    @property
    def subset_size(self) -> int:
        return len(self.active_features)


class AccuracyResult(NamedTuple):
    accuracy: float
    errors: int
    total: int

    def error_fraction_str(self) -> str:
        return f"{self.errors}/{self.total}"


def _as_values(X) -> np.ndarray:
    values = getattr(X, "values", X)
    return np.asarray(values, dtype=float)


def _check_labels(y: np.ndarray) -> None:
    classes = np.unique(y)
    if not np.all(np.isin(classes, (-1.0, 1.0))):
        raise TrainingError("labels must be in {-1, +1}")
    if classes.size < 2:
        raise TrainingError("training data contains a single class")


class IncrementalSvm:
    """Dual SMO state over a mutable active-feature set, for sweep reuse.

    Q = (X_active X_active^T) * y y^T is kept up to date as features are
    added or removed; alpha and the dual gradient persist across resolves,
    so retraining after a one-feature change takes few iterations.
    """

    def __init__(
        self,
        X: np.ndarray,
        y: np.ndarray,
        cfg: TrainConfig,
        active: Sequence[int] = (),
    ):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_labels(y)
        self.X = X
        self.y = y
        self.cfg = cfg
        self.Xy = X * y[:, None]
        n = X.shape[0]
        self.active: list[int] = []
        self.Q = np.zeros((n, n))
        self.alpha = np.zeros(n)
        self.G = -np.ones(n)
        self.converged = True
        self.iterations = 0
        self._pos = y > 0
        for f in active:
            self.add_feature(f)

    def add_feature(self, f: int) -> None:
        v = self.Xy[:, f]
        self.Q += np.outer(v, v)
        if self.alpha.any():
            self.G += v * (v @ self.alpha)
        self.active.append(f)

    def remove_feature(self, f: int) -> None:
        v = self.Xy[:, f]
        self.Q -= np.outer(v, v)
        if self.alpha.any():
            self.G -= v * (v @ self.alpha)
        self.active.remove(f)

    def solve(self) -> None:
        """Run SMO from the current alpha until the KKT gap <= tolerance.

        Pair steps alone crawl on rank-deficient duals (few features, many
        free points), so between step chunks an exact Newton descent on the
        free-variable face is attempted; it never increases the dual
        objective and usually collapses the flat directions at once.
        """
        C = self.cfg.regularization_c
        tol = self.cfg.tolerance
        budget = self.cfg.max_iterations
        QD = np.ascontiguousarray(np.diag(self.Q))
        done = 0
        converged = False
        while done < budget:
            chunk = min(_NEWTON_CADENCE, budget - done)
            steps, converged = _smo_chunk(
                self.Q, QD, self.y, self.alpha, self.G, C, tol, chunk
            )
            done += steps
            if converged:
                break
            self._face_newton_step()
        self.iterations = done
        self.converged = converged
        if not converged:
            warnings.warn(
                f"SMO hit max_iterations={self.cfg.max_iterations} "
                f"before reaching tolerance {self.cfg.tolerance}",
                ConvergenceWarning,
                stacklevel=2,
            )

    def _face_newton_step(self) -> None:
        """Active-set descent over the free and KKT-violating alphas.

        The working set is the free variables plus bound variables whose
        violation exceeds tolerance. Each pass solves the equality-
        constrained stationarity system on the set, prunes directions that
        would push a bound variable outward, moves to the exact line-search
        optimum clipped to the box, and drops newly-bound variables. Every
        move strictly decreases the dual objective, so the surrounding SMO
        loop keeps its convergence guarantees.
        """
        alpha, G, Q, y = self.alpha, self.G, self.Q, self.y
        C = self.cfg.regularization_c
        tol = self.cfg.tolerance
        pos = self._pos
        neg = ~pos
        at_upper = alpha >= C
        at_lower = alpha <= 0
        up = (pos & ~at_upper) | (neg & ~at_lower)
        low = (pos & ~at_lower) | (neg & ~at_upper)
        if not up.any() or not low.any():
            return
        vals = -y * G
        m = float(np.max(np.where(up, vals, -np.inf)))
        M = float(np.min(np.where(low, vals, np.inf)))
        free = ~at_upper & ~at_lower
        entering = (up & (vals > M + tol)) | (low & (vals < m - tol))
        work = np.flatnonzero(free | entering)
        for _ in range(2 * work.size + 2):
            if work.size == 0:
                return
            QWW = Q[np.ix_(work, work)]
            yW = y[work]
            g = G[work]
            k = work.size
            aw = alpha[work]

            # one symmetric eigendecomposition of the KKT matrix yields both
            # the pseudo-inverse step and the flat (null) directions; the
            # face objective is linear along null(Q_WW) ∩ null(y_W')
            A = np.zeros((k + 1, k + 1))
            A[:k, :k] = QWW
            A[:k, k] = yW
            A[k, :k] = yW
            try:
                lam, W = np.linalg.eigh(A)
            except np.linalg.LinAlgError:
                return
            scale = float(np.max(np.abs(lam))) if k else 0.0
            null_mask = np.abs(lam) <= max(scale, 1.0) * 1e-11
            step = None
            if null_mask.any():
                # null(A) = null(Q_WW)∩null(y') × {0}; project out the b part
                null_vecs = W[:k, null_mask]
                null_grads = g @ null_vecs
                pick = int(np.argmax(np.abs(null_grads)))
                if abs(null_grads[pick]) > 1e-12:
                    step = -np.sign(null_grads[pick]) * null_vecs[:, pick]
                    step -= yW * (yW @ step) / k
                    t_opt = np.inf  # linear descent, run to the box
            if step is None:
                rhs = np.concatenate((-g, [0.0]))
                inv = np.where(null_mask, 0.0, 1.0 / np.where(null_mask, 1.0, lam))
                sol = W @ (inv * (W.T @ rhs))
                step = sol[:k]
                step -= yW * (yW @ step) / k  # exact sum-constraint feasibility
                curv = float(step @ (QWW @ step))
                dd0 = float(g @ step)
                t_opt = -dd0 / curv if curv > 0 else np.inf

            outward = ((aw <= 0) & (step < 0)) | ((aw >= C) & (step > 0))
            if outward.any():
                work = work[~outward]
                continue
            dd = float(g @ step)
            if not np.isfinite(dd) or dd >= 0.0:
                return
            with np.errstate(divide="ignore", invalid="ignore"):
                room = np.where(step > 0, (C - aw) / step, aw / -step)
            room = np.where(np.abs(step) > 0, room, np.inf)
            t_max = float(room.min()) if room.size else 0.0
            t = min(t_opt, t_max)
            if t <= 0.0 or not np.isfinite(t):
                return
            new_vals = np.clip(aw + t * step, 0.0, C)
            delta = new_vals - aw
            alpha[work] = new_vals
            G += Q[:, work] @ delta
            if t_opt <= t_max:
                return  # interior optimum of this working set reached
            still_interior = (alpha[work] > 0) & (alpha[work] < C)
            if still_interior.all():
                return  # numerically pinned; avoid spinning
            work = work[still_interior]

    def weights(self) -> np.ndarray:
        return self.X[:, self.active].T @ (self.alpha * self.y)

    def model(self, validation_accuracy: float | None = None) -> LinearModel:
        return LinearModel(
            weights=self.weights(),
            bias=self.bias_value(),
            active_features=list(self.active),
            regularization_c=self.cfg.regularization_c,
            validation_accuracy=validation_accuracy,
            converged=self.converged,
            iterations=self.iterations,
            dual_coef=self.alpha.copy(),
        )

    def bias_value(self) -> float:
        """Offset from the KKT conditions.

        vals_i = y_i - w.x_i equals b exactly at free support vectors; with
        none free, any b between the I_up max and I_low min is optimal and
        the midpoint minimizes the worst violation.
        """
        alpha, G, y = self.alpha, self.G, self.y
        C = self.cfg.regularization_c
        vals = -y * G
        pos = self._pos
        neg = ~pos
        free = (alpha > 0) & (alpha < C)
        if free.any():
            return float(vals[free].mean())
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        hi = np.max(np.where(up, vals, -np.inf)) if up.any() else -np.inf
        lo = np.min(np.where(low, vals, np.inf)) if low.any() else np.inf
        if np.isfinite(hi) and np.isfinite(lo):
            return float((hi + lo) / 2.0)
        if np.isfinite(hi):
            return float(hi)
        if np.isfinite(lo):
            return float(lo)
        return 0.0

    def decision_on(self, X: np.ndarray) -> np.ndarray:
        return X[:, self.active] @ self.weights() + self.bias_value()


def train_linear_svm(
    X,
    y: Sequence[float],
    cfg: TrainConfig | None = None,
    feature_indices: Sequence[int] | None = None,
) -> LinearModel:
    """Train on X restricted to the given columns (all columns by default).

    The returned model's active_features carry the supplied column labels so
    decision_values can pick them out of a full-width matrix later.
    """
    cfg = cfg or TrainConfig()
    X = _as_values(X)
    y = np.asarray(y, dtype=float)
    if X.shape[0] != y.shape[0]:
        raise TrainingError("X and y row counts differ")
    if feature_indices is None:
        feature_indices = list(range(X.shape[1]))
        X_used = X
    else:
        feature_indices = list(feature_indices)
        X_used = X[:, feature_indices]
    solver = IncrementalSvm(X_used, y, cfg, active=range(X_used.shape[1]))
    solver.solve()
    model = solver.model()
    model.active_features = feature_indices
    return model


def decision_values(model: LinearModel, X) -> np.ndarray:
    """w.x + b per row, in row order; sign classifies, 0 counts as positive."""
    X = _as_values(X)
    if X.shape[1] <= max(model.active_features):
        raise TrainingError(
            f"matrix has {X.shape[1]} columns but the model needs "
            f"feature {max(model.active_features)}"
        )
    return X[:, model.active_features] @ model.weights + model.bias


def classify(values: np.ndarray) -> np.ndarray:
    """Signs of decision values with 0 mapped to +1."""
    return np.where(np.asarray(values) >= 0, 1.0, -1.0)


def accuracy(model: LinearModel, X, y: Sequence[float]) -> AccuracyResult:
    y = np.asarray(y, dtype=float)
    if y.size == 0:
        raise TrainingError("empty evaluation set")
    predicted = classify(decision_values(model, X))
    errors = int(np.sum(predicted != y))
    return AccuracyResult(1.0 - errors / y.size, errors, int(y.size))


def rfe_rank(X, y: Sequence[float], cfg: TrainConfig | None = None) -> list[int]:
    """Recursive feature elimination ranking, most important column first.

    Retrains after every single-feature removal (the feature with the
    smallest |w|, ties removing the higher column index); D-1 retrainings
    for D columns.
    """
    cfg = cfg or TrainConfig()
    X = _as_values(X)
    y = np.asarray(y, dtype=float)
    n_features = X.shape[1]
    if n_features < 1:
        raise TrainingError("need at least one feature")
    if n_features == 1:
        return [0]
    solver = IncrementalSvm(X, y, cfg, active=range(n_features))
    removed = []
    while len(solver.active) > 1:
        solver.solve()
        w = solver.weights()
        worst = _pick_elimination(w, solver.active)
        solver.remove_feature(worst)
        removed.append(worst)
    ranking = [solver.active[0]] + removed[::-1]
    return ranking


def _pick_elimination(w: np.ndarray, active: Sequence[int]) -> int:
    magnitudes = np.abs(w)
    lowest = magnitudes.min()
    tied = [active[k] for k in np.flatnonzero(magnitudes == lowest)]
    return max(tied)


def kkt_violations(
    X, y: Sequence[float], alpha: np.ndarray, w: np.ndarray, b: float, C: float
) -> np.ndarray:
    """Per-point violation of the soft-margin KKT conditions at (alpha, w, b)."""
    X = _as_values(X)
    y = np.asarray(y, dtype=float)
    margins = y * (X @ w + b)
    viol = np.empty(len(y))
    at_lower = alpha <= 1e-9
    at_upper = alpha >= C - 1e-9
    free = ~at_lower & ~at_upper
    viol[at_lower] = np.maximum(0.0, 1.0 - margins[at_lower])
    viol[at_upper] = np.maximum(0.0, margins[at_upper] - 1.0)
    viol[free] = np.abs(margins[free] - 1.0)
    return viol


def primal_objective(X, y: Sequence[float], w: np.ndarray, b: float, C: float) -> float:
    X = _as_values(X)
    y = np.asarray(y, dtype=float)
    hinge = np.maximum(0.0, 1.0 - y * (X @ w + b))
    return 0.5 * float(w @ w) + C * float(hinge.sum())


def write_model_json(model: LinearModel, path: str | Path) -> None:
    payload = {
        "active_features": list(model.active_features),
        "weights": model.weights.tolist(),
        "bias": model.bias,
        "regularization_c": model.regularization_c,
        "validation_accuracy": model.validation_accuracy,
        "subset_size": model.subset_size,
        "convergence_flag": model.converged,
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )


def read_model_json(path: str | Path) -> LinearModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return LinearModel(
        weights=np.array(payload["weights"], dtype=float),
        bias=float(payload["bias"]),
        active_features=[int(i) for i in payload["active_features"]],
        regularization_c=float(payload["regularization_c"]),
        validation_accuracy=payload["validation_accuracy"],
        converged=bool(payload["convergence_flag"]),
    )
