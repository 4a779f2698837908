"""Discrete AdaBoost over decision stumps.

One vectorized pass per round scans every (feature, threshold, polarity)
stump, so feature banks with 10^5 columns are fine.  The final score is the
usual vote margin sum(alpha_t * h_t(x)); probabilities come from the
logistic link 1 / (1 + exp(-2 * margin)).

The classifier follows the familiar estimator surface (``fit``,
``decision_function``, ``predict_proba``, ``get_params``/``set_params``)
so it drops into pipeline code unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import TrainingError, ValidationError

_ERR_CLAMP = 1e-6


@dataclass(frozen=True)
class Stump:
    """Predicts ``polarity`` where x[feature] > threshold, else ``-polarity``."""

    feature: int
    threshold: float
    polarity: int
    alpha: float

    def predict(self, X):
        out = np.where(X[:, self.feature] > self.threshold, self.polarity, -self.polarity)
        return out.astype(np.float64)


def _best_stump(X, y, w):
    """Exhaustive weighted-error scan over all stumps; deterministic ties.

    Ties break toward the lowest error, then lowest feature index, then the
    lowest split position, then polarity +1.
    """
    n, f = X.shape
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    wy = (w * y)[order]  # (n, f)
    S = np.cumsum(wy, axis=0)
    total_pos = float(np.sum(w[y > 0]))
    total_neg = float(np.sum(w[y < 0]))

    # split after row i: "x > thr" predicts +polarity
    err_plus = total_neg + S
    err_minus = total_pos - S
    invalid = np.zeros((n, f), dtype=bool)
    if n > 1:
        invalid[: n - 1] = Xs[:-1] >= Xs[1:]  # no threshold inside equal-value runs
    err_plus = np.where(invalid, np.inf, err_plus)
    err_minus = np.where(invalid, np.inf, err_minus)

    def pick(err):
        pos = np.argmin(err, axis=0)  # first minimum per column (lowest split)
        vals = err[pos, np.arange(f)]
        col = int(np.argmin(vals))  # first minimum (lowest feature index)
        return float(vals[col]), col, int(pos[col])

    e_p, col_p, row_p = pick(err_plus)
    e_m, col_m, row_m = pick(err_minus)
    if e_p <= e_m:  # polarity +1 preferred on exact ties
        err, col, row, polarity = e_p, col_p, row_p, 1
    else:
        err, col, row, polarity = e_m, col_m, row_m, -1
    if row < n - 1:
        threshold = 0.5 * (Xs[row, col] + Xs[row + 1, col])
    else:
        threshold = float(Xs[row, col])  # "x > max" is empty: constant stump
    return err, Stump(feature=col, threshold=float(threshold), polarity=polarity, alpha=0.0)


class StumpBoost:
    """AdaBoost.M1 with decision stumps.

    Parameters
    ----------
    n_rounds : int
        Boosting rounds T (>= 1).  Each round selects the globally best
        stump under the current sample weights.
    """

    def __init__(self, n_rounds: int = 64):
        self.n_rounds = n_rounds

    def get_params(self, deep=True):
        return {"n_rounds": self.n_rounds}

    def set_params(self, **params):
        for key, value in params.items():
            if not hasattr(self, key):
                raise ValidationError(f"unknown parameter {key!r}")
            setattr(self, key, value)
        return self

    def fit(self, X, y, sample_weight=None):
        if self.n_rounds < 1:
            raise ValidationError("n_rounds must be >= 1")
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValidationError("X must be 2D (samples, features)")
        y = np.asarray(y)
        classes = np.unique(y)
        if classes.size != 2:
            raise TrainingError(f"need exactly 2 classes in y, got {classes.size}")
        self.classes_ = classes
        ypm = np.where(y == classes[1], 1.0, -1.0)
        n = X.shape[0]
        w = np.full(n, 1.0 / n) if sample_weight is None else np.asarray(sample_weight, float)
        w = w / w.sum()

        self.stumps_ = []
        self.stump_errors_ = []
        self.staged_training_errors_ = []
        margin = np.zeros(n)
        for _ in range(self.n_rounds):
            err, stump = _best_stump(X, ypm, w)
            err = float(np.clip(err, _ERR_CLAMP, 1.0 - _ERR_CLAMP))
            alpha = 0.5 * np.log((1.0 - err) / err)
            stump = Stump(stump.feature, stump.threshold, stump.polarity, float(alpha))
            pred = stump.predict(X)
            w = w * np.exp(-alpha * ypm * pred)
            w = w / w.sum()
            self.stumps_.append(stump)
            self.stump_errors_.append(err)
            margin += alpha * pred
            self.staged_training_errors_.append(float(np.mean(np.sign(margin) != ypm)))
        return self

    def _check_fitted(self):
        if not hasattr(self, "stumps_"):
            raise ValidationError("classifier is not fitted")

    def decision_function(self, X):
        """Vote margin sum(alpha_t * h_t(x))."""
        self._check_fitted()
        X = np.asarray(X, dtype=np.float64)
        margin = np.zeros(X.shape[0])
        for stump in self.stumps_:
            margin += stump.alpha * stump.predict(X)
        return margin

    def predict_proba(self, X):
        """(n, 2) class probabilities via the logistic link on 2x the margin."""
        p1 = 1.0 / (1.0 + np.exp(-2.0 * self.decision_function(X)))
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        self._check_fitted()
        p1 = self.predict_proba(X)[:, 1]
        return np.where(p1 > 0.5, self.classes_[1], self.classes_[0])

    def selected_features(self):
        """Distinct feature indices used by the ensemble, in selection order."""
        self._check_fitted()
        seen = []
        for stump in self.stumps_:
            if stump.feature not in seen:
                seen.append(stump.feature)
        return seen

    def to_json_dict(self) -> dict:
        self._check_fitted()
        return {
            "n_rounds": int(self.n_rounds),
            "classes": [int(c) for c in self.classes_],
            "stumps": [
                {
                    "feature": int(s.feature),
                    "threshold": float(s.threshold),
                    "polarity": int(s.polarity),
                    "alpha": float(s.alpha),
                }
                for s in self.stumps_
            ],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "StumpBoost":
        clf = cls(n_rounds=int(doc["n_rounds"]))
        clf.classes_ = np.array(doc["classes"])
        clf.stumps_ = [
            Stump(int(s["feature"]), float(s["threshold"]), int(s["polarity"]), float(s["alpha"]))
            for s in doc["stumps"]
        ]
        clf.stump_errors_ = []
        clf.staged_training_errors_ = []
        return clf
