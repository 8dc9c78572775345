"""
Multinomial logistic re-scorer trained by full-batch gradient descent.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.special import logsumexp, softmax

from stancelab.constants import DEFAULT_TAU, FEATURE_NAMES, K
from stancelab.errors import CalibrationDivergenceError, ConfigError, ModelManifestError

logger = logging.getLogger(__name__)

MODEL_FORMAT = 1


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    epochs: int = 500
    l2: float = 1e-3
    seed: int = 0
    tolerance: float = 1e-9
    balance_recall: bool = True

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}.")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be at least 1, got {self.epochs}.")
        if self.l2 < 0:
            raise ConfigError(f"l2 can't be negative, got {self.l2}.")

    def with_seed(self, seed):
        return replace(self, seed=seed)


def _check_tau(tau, error=ConfigError):
    if not 0.5 < tau <= 1.0:
        raise error(f"The consensus threshold tau must be in (0.5, 1], got {tau}.")


@dataclass
class CalibratorModel:
    weights: np.ndarray  # (3, n_features)
    tau: float = DEFAULT_TAU
    feature_names: tuple = FEATURE_NAMES
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (K, len(self.feature_names)):
            raise ModelManifestError(
                f"Weight matrix has shape {self.weights.shape}, expected {(K, len(self.feature_names))}."
            )
        if not np.all(np.isfinite(self.weights)):
            raise ModelManifestError("Weight matrix contains non-finite values.")
        _check_tau(self.tau, ModelManifestError)

    def predict_proba(self, X):
        """Softmax(W f) for each row of X."""
        return softmax(np.atleast_2d(X) @ self.weights.T, axis=1)

    def to_dict(self):
        return {
            "format": MODEL_FORMAT,
            "feature_names": list(self.feature_names),
            "weights": self.weights.tolist(),
            "tau": self.tau,
            "metadata": self.metadata,
        }

    def save(self, path):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path):
        """
        Load a model file, refusing it when its feature manifest differs from ours.

        Raises:
            ModelManifestError: Wrong format, feature order, missing or malformed weights, or bad tau.
        """
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ModelManifestError(f"{path} is not a model file: {e}") from e
        if not isinstance(raw, dict):
            raise ModelManifestError(f"{path} is not a model file: expected a JSON object.")
        if raw.get("format") != MODEL_FORMAT:
            raise ModelManifestError(f"{path} has model format {raw.get('format')!r}; I can read {MODEL_FORMAT}.")
        names = tuple(raw.get("feature_names", ()))
        if names != FEATURE_NAMES:
            raise ModelManifestError(
                f"{path} was trained on features {list(names)}, but this version extracts {list(FEATURE_NAMES)}."
            )
        try:
            weights = np.asarray(raw["weights"], dtype=float)
        except KeyError:
            raise ModelManifestError(f"{path} has no 'weights' entry.") from None
        except (TypeError, ValueError) as e:
            raise ModelManifestError(f"{path} has an unreadable weight matrix: {e}") from e
        return cls(
            weights=weights,
            tau=float(raw.get("tau", DEFAULT_TAU)),
            feature_names=names,
            metadata=raw.get("metadata", {}),
        )


def loss_and_gradient(W, X, y, l2):
    """
    Mean cross-entropy of softmax(X W^T) against y, plus 0.5 * l2 * ||W||^2.

    Args:
        W (numpy.ndarray): (3, d) weights.
        X (numpy.ndarray): (n, d) features, n >= 1.
        y (numpy.ndarray): (n,) gold class indices.
        l2 (float): L2 coefficient.

    Returns:
        tuple: (loss, gradient with W's shape)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if X.shape[0] == 0:
        raise ValueError("I can't compute a loss on an empty batch.")
    if not np.all(np.isfinite(X)):
        raise ValueError("Features contain non-finite values.")
    n = X.shape[0]
    logits = X @ W.T
    log_norm = logsumexp(logits, axis=1)
    loss = float(np.mean(log_norm - logits[np.arange(n), y]) + 0.5 * l2 * np.sum(W * W))
    probs = np.exp(logits - log_norm[:, None])
    probs[np.arange(n), y] -= 1.0
    grad = probs.T @ X / n + l2 * W
    return loss, grad


def max_stable_learning_rate(X, l2):
    """
    Largest step size for which gradient descent on this problem never raises the loss.

    The softmax cross-entropy Hessian is bounded by ||X||_2^2 / (2n) plus the L2
    term, so any learning rate at or below the inverse of that bound descends.
    """
    X = np.asarray(X, dtype=float)
    return 1.0 / (np.linalg.norm(X, 2) ** 2 / (2 * X.shape[0]) + l2)


def train_weights(X, y, config, on_epoch=None):
    """
    Full-batch gradient descent from a seeded N(0, 0.01^2) start.

    Stops after `config.epochs` steps or once the loss improves by less than
    `config.tolerance`. The lowest-loss iterate is returned, so the final
    loss never exceeds the initial one. `on_epoch(epoch, loss)` is called
    after every step.

    Returns:
        tuple: (W, metadata dict)

    Raises:
        CalibrationDivergenceError: If the loss stops being finite.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    rng = np.random.Generator(np.random.PCG64(config.seed))
    W = rng.normal(0.0, 0.01, size=(K, X.shape[1]))

    initial_loss, grad = loss_and_gradient(W, X, y, config.l2)
    best_W, best_loss = W.copy(), initial_loss
    previous = initial_loss
    epochs_run = 0
    for epoch in range(1, config.epochs + 1):
        W = W - config.learning_rate * grad
        loss, grad = loss_and_gradient(W, X, y, config.l2)
        epochs_run = epoch
        if not np.isfinite(loss) or not np.all(np.isfinite(grad)):
            raise CalibrationDivergenceError(
                f"Training diverged at epoch {epoch} (loss={loss}). "
                f"Try a smaller learning rate than {config.learning_rate}."
            )
        if on_epoch is not None:
            on_epoch(epoch, loss)
        if loss < best_loss:
            best_W, best_loss = W.copy(), loss
        if abs(previous - loss) < config.tolerance:
            logger.debug("Converged after %d epochs (loss %.6f)", epoch, loss)
            break
        previous = loss

    metadata = {
        "epochs": epochs_run,
        "initial_loss": initial_loss,
        "final_loss": best_loss,
        "seed": config.seed,
        "learning_rate": config.learning_rate,
        "l2": config.l2,
        "n_train": int(X.shape[0]),
    }
    logger.info("Trained re-scorer: loss %.4f -> %.4f in %d epochs", initial_loss, best_loss, epochs_run)
    return best_W, metadata


def recall_balancing_offsets(logits, y, span=2.0, step=0.02, slack=0.005):
    """
    Per-class intercept shifts that even out recall on the fitting rows.

    The support shift stays at 0; against and neutral shifts are searched on a
    grid over [-span, span]. Among shifts whose recall spread is within `slack`
    of the smallest one reachable, the highest mean recall wins, then the
    smallest total shift.

    Args:
        logits (numpy.ndarray): (n, 3) scores of the trained model.
        y (numpy.ndarray): (n,) gold class indices.

    Returns:
        numpy.ndarray: (3,) shifts to add to the bias column of W.

    Raises:
        ValueError: If some class has no gold row.
    """
    logits = np.asarray(logits, dtype=float)
    y = np.asarray(y, dtype=int)
    totals = np.bincount(y, minlength=K)
    if np.any(totals == 0):
        raise ValueError("I need at least one row per stance class to balance recall.")
    m = int(round(span / step))
    grid = step * np.arange(-m, m + 1)
    gold = np.eye(K, dtype=bool)[y]

    recalls = np.empty((len(grid), len(grid), K))
    for i, a in enumerate(grid):
        shifts = np.stack([np.zeros_like(grid), np.full_like(grid, a), grid], axis=1)
        predicted = (logits[None, :, :] + shifts[:, None, :]).argmax(axis=2)
        hits = (predicted == y[None, :])[:, :, None] & gold[None, :, :]
        recalls[i] = hits.sum(axis=1) / totals

    spread = recalls.std(axis=2)
    mean = recalls.mean(axis=2)
    candidates = spread <= spread.min() + slack
    candidates &= mean >= mean[candidates].max() - 1e-12
    cost = np.where(candidates, np.abs(grid)[:, None] + np.abs(grid)[None, :], np.inf)
    i, j = np.unravel_index(np.argmin(cost), cost.shape)
    return np.array([0.0, grid[i], grid[j]])
