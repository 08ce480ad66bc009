"""Nearest-center classification over density features.

Each subcategory gets a center vector (the mean of its labeled feature
vectors). Prediction picks the center with the smallest Euclidean
distance. Unlabeled vectors can sharpen the centers: they are assigned to
their nearest center, and each center is re-blended as

    refined = alpha * labeled_center + (1 - alpha) * mean(assigned)

so alpha = 1 keeps the labeled centers untouched and alpha = 0 trusts the
pseudo-labeled mean alone. Centers with no assigned vectors keep their
labeled value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .taxonomy import SubcategoryId


@dataclass(frozen=True)
class PrototypeModel:
    classes: tuple[SubcategoryId, ...]
    centers_labeled: np.ndarray
    centers_refined: np.ndarray
    alpha: float

    def __post_init__(self):
        if not self.classes:
            raise ValueError("model needs at least one class")
        if list(self.classes) != sorted(self.classes):
            raise ValueError("classes must be sorted by subcategory index")
        if len(set(self.classes)) != len(self.classes):
            raise ValueError("duplicate class in model")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        k = len(self.classes)
        for name in ("centers_labeled", "centers_refined"):
            c = np.asarray(getattr(self, name), dtype=np.float64)
            if c.ndim != 2 or c.shape[0] != k:
                raise ValueError(f"{name} must be a (n_classes, dim) array")
            if not np.isfinite(c).all():
                raise ValueError(f"{name} must be finite")
            c.flags.writeable = False
            object.__setattr__(self, name, c)
        if self.centers_labeled.shape != self.centers_refined.shape:
            raise ValueError("labeled and refined centers must share a shape")

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def feature_dim(self) -> int:
        return int(self.centers_labeled.shape[1])


def compute_centers(
    pairs: Iterable[tuple[SubcategoryId, np.ndarray]],
    classes: Sequence[SubcategoryId] | None = None,
) -> tuple[tuple[SubcategoryId, ...], np.ndarray]:
    """Per-class mean vectors, classes sorted by subcategory index.

    When classes is given it fixes the class set; a listed class with no
    vectors is an error, and vectors outside the set are an error too.
    """
    buckets: dict[SubcategoryId, list[np.ndarray]] = {}
    dim = None
    for subcat, vec in pairs:
        v = np.asarray(vec, dtype=np.float64).reshape(-1)
        if not np.isfinite(v).all():
            raise ValueError(f"non-finite feature vector for {subcat.label}")
        if dim is None:
            dim = v.size
        elif v.size != dim:
            raise ValueError(f"feature dim mismatch: {v.size} vs {dim}")
        buckets.setdefault(subcat, []).append(v)
    if dim is None:
        raise ValueError("no labeled vectors provided")
    if classes is None:
        ordered = tuple(sorted(buckets))
    else:
        ordered = tuple(sorted(classes))
        extra = set(buckets) - set(ordered)
        if extra:
            raise ValueError(f"vectors for classes outside the model: {sorted(extra)}")
        missing = [c.label for c in ordered if c not in buckets]
        if missing:
            raise ValueError(f"no labeled vectors for: {missing}")
    centers = np.stack([np.mean(buckets[c], axis=0) for c in ordered])
    return ordered, centers


def build_model(
    labeled_pairs: Iterable[tuple[SubcategoryId, np.ndarray]],
    alpha: float = 0.5,
    classes: Sequence[SubcategoryId] | None = None,
) -> PrototypeModel:
    ordered, centers = compute_centers(labeled_pairs, classes=classes)
    return PrototypeModel(
        classes=ordered, centers_labeled=centers, centers_refined=centers, alpha=alpha
    )


def distance(v, c) -> float:
    """Euclidean distance between a feature vector and a class center."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if v.size != c.size:
        raise ValueError(f"length mismatch: {v.size} vs {c.size}")
    return float(np.sqrt(np.square(v - c).sum()))


def distances_to_centers(v: np.ndarray, centers: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size != centers.shape[1]:
        raise ValueError(f"feature dim {v.size} does not match centers dim {centers.shape[1]}")
    return np.sqrt(np.square(centers - v[None, :]).sum(axis=1))


@dataclass(frozen=True)
class Posterior:
    classes: tuple[SubcategoryId, ...]
    distances: np.ndarray
    probs: np.ndarray
    predicted: SubcategoryId

    def __post_init__(self):
        for name in ("distances", "probs"):
            a = np.asarray(getattr(self, name), dtype=np.float64)
            a.flags.writeable = False
            object.__setattr__(self, name, a)


def posterior(v, model: PrototypeModel, use_refined: bool = True) -> Posterior:
    """Distances, softmax(-distance) probabilities, and the nearest class.

    The prediction is the argmin of the distances directly (first class on
    ties, i.e. the lowest subcategory index), not an argmax over the
    floating-point probabilities.
    """
    centers = model.centers_refined if use_refined else model.centers_labeled
    d = distances_to_centers(v, centers)
    z = -d
    z = z - z.max()
    e = np.exp(z)
    probs = e / e.sum()
    predicted = model.classes[int(np.argmin(d))]
    return Posterior(classes=model.classes, distances=d, probs=probs, predicted=predicted)


def classify(v, model: PrototypeModel, use_refined: bool = True) -> SubcategoryId:
    centers = model.centers_refined if use_refined else model.centers_labeled
    return model.classes[int(np.argmin(distances_to_centers(v, centers)))]


def classify_many(
    vectors, model: PrototypeModel, use_refined: bool = True
) -> list[SubcategoryId]:
    centers = model.centers_refined if use_refined else model.centers_labeled
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != centers.shape[1]:
        raise ValueError("vectors must be (n, feature_dim)")
    d2 = np.square(x[:, None, :] - centers[None, :, :]).sum(axis=2)
    return [model.classes[i] for i in np.argmin(d2, axis=1)]


def refine_centers(model: PrototypeModel, unlabeled, iters: int = 1) -> PrototypeModel:
    """Blend labeled centers with pseudo-labeled unlabeled means.

    Each pass assigns every unlabeled vector to its nearest current center,
    then sets refined = alpha * labeled + (1 - alpha) * assigned-mean. The
    blend is always anchored to the labeled centers; only the assignment
    uses the centers from the previous pass. With alpha = 1 or with no
    unlabeled vectors, the refined centers equal the labeled centers
    exactly.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x = np.asarray(unlabeled, dtype=np.float64)
    if x.size == 0:
        x = x.reshape(0, model.feature_dim)
    if x.ndim != 2 or x.shape[1] != model.feature_dim:
        raise ValueError("unlabeled vectors must be (n, feature_dim)")
    if not np.isfinite(x).all():
        raise ValueError("unlabeled vectors must be finite")
    labeled = model.centers_labeled
    current = model.centers_refined
    alpha = model.alpha
    for _ in range(iters):
        updated = labeled.copy()
        if x.shape[0] > 0:
            d2 = np.square(x[:, None, :] - current[None, :, :]).sum(axis=2)
            assign = np.argmin(d2, axis=1)
            for m in range(model.n_classes):
                members = x[assign == m]
                if members.shape[0] > 0:
                    updated[m] = alpha * labeled[m] + (1.0 - alpha) * members.mean(axis=0)
        current = updated
    return PrototypeModel(
        classes=model.classes,
        centers_labeled=labeled,
        centers_refined=current,
        alpha=alpha,
    )


def model_to_dict(model: PrototypeModel) -> dict:
    return {
        "alpha": model.alpha,
        "feature_dim": model.feature_dim,
        "classes": [
            {"equipment_type": c.equipment_type.value, "status": c.status.value}
            for c in model.classes
        ],
        "centers_labeled": [[float(v) for v in row] for row in model.centers_labeled],
        "centers_refined": [[float(v) for v in row] for row in model.centers_refined],
    }


def model_from_dict(d: dict) -> PrototypeModel:
    from .taxonomy import parse_equipment_type, parse_status

    classes = []
    for entry in d["classes"]:
        status = parse_status(entry["status"])
        if status is None:
            raise ValueError("model classes must carry a status")
        classes.append(SubcategoryId(parse_equipment_type(entry["equipment_type"]), status))
    model = PrototypeModel(
        classes=tuple(classes),
        centers_labeled=np.asarray(d["centers_labeled"], dtype=np.float64),
        centers_refined=np.asarray(d["centers_refined"], dtype=np.float64),
        alpha=float(d["alpha"]),
    )
    if model.feature_dim != int(d["feature_dim"]):
        raise ValueError("feature_dim does not match the stored centers")
    return model


__all__ = [
    "PrototypeModel",
    "Posterior",
    "build_model",
    "compute_centers",
    "classify",
    "classify_many",
    "distances_to_centers",
    "model_from_dict",
    "model_to_dict",
    "posterior",
    "refine_centers",
]
