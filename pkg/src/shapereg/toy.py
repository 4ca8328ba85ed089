"""Separable five-axis benchmark function with a verified shape-constraint set.

The function is a sum of univariate pieces plus an offset, cheap to sample
at any size, and satisfies a small catalogue of shape constraints that can
be checked in closed form: it increases in the first axis, decreases and is
convex in the second, and stays strictly inside (0, 1) on the whole cube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraints import ConstraintKind, ShapeConstraint

TOY_DIM = 5
TOY_SIGMA = 0.03408
TOY_N_TRAIN = 30
TOY_DEGREES = (1, 5, 2, 2, 2)


@dataclass(frozen=True)
class ToySpec:
    sigma: float = TOY_SIGMA
    n_train: int = TOY_N_TRAIN
    seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.n_train < 1:
            raise ValueError("n_train must be at least 1")


def toy_eval(x) -> float:
    """Benchmark value at one point of [0, 1]^5."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != TOY_DIM:
        raise ValueError(f"point must have {TOY_DIM} coordinates")
    return float(toy_eval_batch(x[None, :])[0])


def toy_eval_batch(x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != TOY_DIM:
        raise ValueError(f"points must have {TOY_DIM} coordinates")
    f1 = 0.12 * (x[:, 0] - 0.5) ** 3
    f2 = 0.002 / (x[:, 1] + 0.1) ** 2
    f3 = 0.1 * (x[:, 2] - 0.6) ** 2 * (x[:, 2] - 2.4) ** 2
    f4 = 0.02 * (x[:, 3] - 0.6) ** 2 * (x[:, 3] - 2.4) ** 2
    f5 = 0.02 * (x[:, 4] - 1.1) ** 2 * (x[:, 4] - 3.0) ** 2
    return 0.1 + f1 + f2 + f3 + f4 + f5


def toy_sample(spec: ToySpec = ToySpec()) -> tuple[np.ndarray, np.ndarray]:
    """Seeded uniform inputs with Gaussian-noised outputs: returns (x, y)."""
    rng = np.random.default_rng(spec.seed)
    x = rng.uniform(size=(spec.n_train, TOY_DIM))
    y = toy_eval_batch(x) + rng.normal(0.0, spec.sigma, size=spec.n_train)
    return x, y


def toy_constraints() -> tuple[ShapeConstraint, ...]:
    """Shape constraints the benchmark function satisfies in closed form.

    Increasing in axis 0 (its derivative 0.36 (x-0.5)^2 is non-negative),
    decreasing and convex in axis 1 (derivatives -0.004 (x+0.1)^-3 < 0 and
    0.012 (x+0.1)^-4 > 0), and globally inside the bounds 0 and 1.
    """
    return (
        ShapeConstraint(ConstraintKind.MONOTONE_INCREASING, axis=0),
        ShapeConstraint(ConstraintKind.MONOTONE_DECREASING, axis=1),
        ShapeConstraint(ConstraintKind.CONVEX, axis=1),
        ShapeConstraint(ConstraintKind.LOWER_BOUND, level=0.0),
        ShapeConstraint(ConstraintKind.UPPER_BOUND, level=1.0),
    )


def toy_csv(x: np.ndarray, y: np.ndarray) -> str:
    """Dataset CSV with the canonical header (inputs x1..x5, output y)."""
    lines = [",".join([f"x{j + 1}" for j in range(TOY_DIM)] + ["y"])]
    for row, val in zip(x, y):
        lines.append(",".join(repr(float(v)) for v in row) + f",{float(val)!r}")
    return "\n".join(lines) + "\n"
