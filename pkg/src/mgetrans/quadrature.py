"""Level-symmetric discrete-ordinates quadrature sets (S2 to S8)."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

# Smallest direction cosine of each set and the per-octant point weights
# (octant total 1), keyed by the sorted level-index triple of the point.
# Weights solve the even-moment conditions sum(w mu^2k) = 1/(2k+1).
_MU1 = {
    2: 1.0 / np.sqrt(3.0),
    4: 0.3500211745815407,
    6: 0.2666355,
    8: 0.2182179,
}
_WEIGHTS = {
    2: {(0, 0, 0): 1.0},
    4: {(0, 0, 1): 1.0 / 3.0},
    6: {(0, 0, 2): 0.17612624591274795, (0, 1, 1): 0.1572070874205853},
    8: {
        (0, 0, 3): 0.12098765973449631,
        (0, 1, 2): 0.09074074074074082,
        (1, 1, 1): 0.09259257635206705,
    },
}
SUPPORTED_ORDERS = tuple(sorted(_MU1))


@dataclass(frozen=True)
class AngularQuadrature:
    ordinates: np.ndarray  # (M, 3) direction cosines
    weights: np.ndarray    # (M,), sums to 4 pi
    order: int = 0

    def __post_init__(self):
        ords = np.array(self.ordinates, dtype=float).reshape(-1, 3)
        w = np.array(self.weights, dtype=float)
        if len(w) != len(ords):
            raise ValueError("one weight per ordinate required")
        ords.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "ordinates", ords)
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)

    def first_octant(self):
        """(|cosines|, weights) of the positive octant, canonically ordered.

        Raises ValueError when the set is not closed under sign flips.
        """
        pos = np.all(self.ordinates > 0, axis=1)
        base = self.ordinates[pos]
        wb = self.weights[pos]
        order = np.lexsort((base[:, 2], base[:, 1], base[:, 0]))
        base, wb = base[order], wb[order]
        key = {tuple(np.round(o, 12)): w for o, w in zip(base, wb)}
        if len(key) * 8 != len(self):
            raise ValueError("quadrature is not octant-symmetric")
        for o, w in zip(self.ordinates, self.weights):
            k = tuple(np.round(np.abs(o), 12))
            if k not in key or abs(key[k] - w) > 1e-12 * abs(w):
                raise ValueError("quadrature is not octant-symmetric")
        return base, wb


def octant_signs():
    """The eight (sx, sy, sz) sign triples in a fixed order."""
    return [tuple(s) for s in itertools.product((1, -1), repeat=3)]


def build_quadrature(order: int) -> AngularQuadrature:
    """Level-symmetric S_N set with N(N+2) ordinates and weights summing to 4 pi."""
    if order not in _MU1:
        raise ValueError(f"unsupported order S{order}; choose from {SUPPORTED_ORDERS}")
    n = order // 2
    mu1 = _MU1[order]
    step = 2.0 * (1.0 - 3.0 * mu1**2) / (order - 2) if order > 2 else 0.0
    levels = np.sqrt(mu1**2 + step * np.arange(n))

    base, wts = [], []
    for i, j, k in itertools.product(range(n), repeat=3):
        if i + j + k != n - 1:
            continue
        v = levels[[i, j, k]]
        base.append(v / np.linalg.norm(v))
        wts.append(_WEIGHTS[order][tuple(sorted((i, j, k)))])
    base = np.array(base)
    wts = np.array(wts) / np.sum(wts) * (np.pi / 2.0)

    ords, weights = [], []
    for signs in octant_signs():
        ords.append(base * np.array(signs))
        weights.append(wts)
    return AngularQuadrature(np.vstack(ords), np.concatenate(weights), order)
