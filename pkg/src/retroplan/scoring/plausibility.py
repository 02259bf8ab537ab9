"""Reaction plausibility classifier interface and fingerprint baseline.

The baseline is logistic regression over concatenated
(product fingerprint, OR of reactant fingerprints, XOR difference)
bit vectors, trained full-batch with a backtracking line search so the
training loss is non-increasing by construction. Loss and gradient are
exposed as pure functions of the packed parameter vector for gradient
checking.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from ..chem import circular_fingerprint
from ..errors import DegenerateData
from ..reactions import Reaction


class PlausibilityClassifier(Protocol):
    """Contract: reaction -> plausibility score in [0, 1]."""

    def score(self, rxn: Reaction) -> float: ...


def reaction_features(rxn: Reaction, radius: int = 2,
                      n_bits: int = 1024) -> np.ndarray:
    """(product | reactant-OR | XOR-difference) concatenated bit vector."""
    prod = circular_fingerprint(rxn.product.without_maps(), radius, n_bits)
    react = 0
    for mol in rxn.reactants:
        react |= circular_fingerprint(mol.without_maps(), radius, n_bits).bits
    diff = prod.bits ^ react
    out = np.zeros(3 * n_bits, dtype=np.float64)
    for base, bits in ((0, prod.bits), (n_bits, react), (2 * n_bits, diff)):
        while bits:
            low = bits & -bits
            out[base + low.bit_length() - 1] = 1.0
            bits ^= low
    return out


def loss_and_grad(theta: np.ndarray, x: np.ndarray, y: np.ndarray,
                  l2: float) -> tuple[float, np.ndarray]:
    """Mean cross-entropy + L2 on weights (bias unregularized)."""
    w, b = theta[:-1], theta[-1]
    z = x @ w + b
    # softplus(z) - y*z == -[y log s + (1-y) log(1-s)], stable on both tails
    softplus = np.where(z > 0, z + np.log1p(np.exp(-z)), np.log1p(np.exp(z)))
    loss = float(np.mean(softplus - y * z) + 0.5 * l2 * w @ w)
    s = 1.0 / (1.0 + np.exp(-z))
    residual = (s - y) / len(y)
    grad = np.concatenate([x.T @ residual + l2 * w, [residual.sum()]])
    return loss, grad


@dataclass
class FingerprintClassifier:
    weights: np.ndarray
    bias: float
    fp_radius: int
    n_bits: int
    meta: dict

    def score_features(self, feats: np.ndarray) -> float:
        return float(1.0 / (1.0 + np.exp(-(feats @ self.weights + self.bias))))

    def score(self, rxn: Reaction) -> float:
        return self.score_features(
            reaction_features(rxn, self.fp_radius, self.n_bits))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "format": "retroplan-classifier-v1",
                    "fp_radius": self.fp_radius,
                    "n_bits": self.n_bits,
                    "bias": self.bias,
                    "weights": self.weights.tolist(),
                    "meta": self.meta,
                },
                fh)

    @staticmethod
    def load(path) -> "FingerprintClassifier":
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
        return FingerprintClassifier(
            np.array(d["weights"], dtype=np.float64), float(d["bias"]),
            int(d["fp_radius"]), int(d["n_bits"]), d.get("meta", {}))


def _fit(x: np.ndarray, y: np.ndarray, l2: float, max_iters: int,
         tol: float) -> tuple[np.ndarray, list[float]]:
    theta = np.zeros(x.shape[1] + 1)
    loss, grad = loss_and_grad(theta, x, y, l2)
    history = [loss]
    step = 1.0
    for _ in range(max_iters):
        gnorm2 = grad @ grad
        if gnorm2 < tol * tol:
            break
        # backtracking line search (Armijo) keeps the loss non-increasing
        step = min(step * 2.0, 64.0)
        while True:
            trial = theta - step * grad
            trial_loss, trial_grad = loss_and_grad(trial, x, y, l2)
            if trial_loss <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
            if step < 1e-12:
                trial, trial_loss, trial_grad = theta, loss, grad
                break
        if trial_loss >= loss - 1e-12 and step < 1e-12:
            break
        theta, loss, grad = trial, trial_loss, trial_grad
        history.append(loss)
    return theta, history


def train_plausibility_baseline(positives: list[Reaction],
                                negatives: list[Reaction],
                                fp_radius: int = 2, n_bits: int = 1024,
                                l2: float = 1e-4, seed: int = 0,
                                holdout_fraction: float = 0.2,
                                max_iters: int = 300,
                                ) -> FingerprintClassifier:
    """Train the fingerprint baseline; held-out ROC-AUC lands in meta."""
    if not positives or not negatives:
        raise DegenerateData("need both positive and negative reactions")
    feats = [reaction_features(r, fp_radius, n_bits)
             for r in positives + negatives]
    labels = np.array([1.0] * len(positives) + [0.0] * len(negatives))
    x = np.stack(feats)
    rng = np.random.RandomState(seed)
    order = rng.permutation(len(labels))
    x, labels = x[order], labels[order]
    n_holdout = int(len(labels) * holdout_fraction)
    x_ho, y_ho = x[:n_holdout], labels[:n_holdout]
    x_tr, y_tr = x[n_holdout:], labels[n_holdout:]
    if len(np.unique(y_tr)) < 2:
        raise DegenerateData("training split lost one class")

    theta, history = _fit(x_tr, y_tr, l2, max_iters, tol=1e-7)
    clf = FingerprintClassifier(
        theta[:-1], float(theta[-1]), fp_radius, n_bits, meta={})

    heldout_auc = None
    if len(y_ho) and len(np.unique(y_ho)) == 2:
        from ..evalproto import roc_auc

        scores = [clf.score_features(f) for f in x_ho]
        heldout_auc = roc_auc(scores, [int(v) for v in y_ho])
    clf.meta = {
        "heldout_auc": heldout_auc,
        "final_loss": history[-1],
        "loss_history_monotone": all(
            b <= a + 1e-12 for a, b in zip(history, history[1:])),
        "iterations": len(history) - 1,
        "seed": seed,
        "n_train": int(len(y_tr)),
        "n_holdout": int(len(y_ho)),
    }
    return clf
