"""Symmetric quadrature rules on the reference triangle (0,0), (1,0), (0,1).

Weights are scaled so that they sum to the reference area 1/2. The orbit
parameters of the degree 4 and degree 6 Dunavant rules were re-solved
against the exact moment equations in extended precision, so every
monomial up to the rule degree is integrated to round-off.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from surfstokes.errors import UnsupportedDegree


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (Q, 2) reference coordinates
    weights: np.ndarray  # (Q,)
    degree: int

    @property
    def barycentric(self):
        """(Q, 3) barycentric coordinates (1 - x - y, x, y)."""
        x, y = self.points[:, 0], self.points[:, 1]
        return np.stack([1.0 - x - y, x, y], axis=1)

    def __len__(self):
        return len(self.weights)


def _orbit3(a, w):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)], [w] * 3


def _orbit6(a, b, w):
    c = 1.0 - a - b
    bary = [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)]
    return bary, [w] * 6


_ORBITS = {
    2: [("3", 1.0 / 6.0, 1.0 / 6.0)],
    4: [
        ("3", 0.44594849091596488632, 0.11169079483900573285),
        ("3", 0.09157621350977074346, 0.054975871827660933819),
    ],
    6: [
        ("3", 0.24928674517091042129, 0.058393137863189683013),
        ("3", 0.06308901449150222834, 0.02542245318510340846),
        ("6", 0.053145049844816947353, 0.31035245103378440542, 0.041425537809186787597),
    ],
}


def monomial_integral(a, b):
    """Exact integral of x^a y^b over the reference triangle."""
    return factorial(a) * factorial(b) / factorial(a + b + 2)


def quadrature_rule(degree=6):
    """Return the symmetric rule exact for polynomials of total degree `degree`.

    Exactness is checked against ``monomial_integral`` before returning.
    """
    if degree not in _ORBITS:
        raise UnsupportedDegree(f"no triangle rule of degree {degree}; use one of {sorted(_ORBITS)}")
    bary, weights = [], []
    for orbit in _ORBITS[degree]:
        if orbit[0] == "3":
            pts, ws = _orbit3(orbit[1], orbit[2])
        else:
            pts, ws = _orbit6(orbit[1], orbit[2], orbit[3])
        bary.extend(pts)
        weights.extend(ws)
    bary = np.array(bary)
    rule = QuadratureRule(points=bary[:, 1:].copy(), weights=np.array(weights), degree=degree)
    x, y = rule.points[:, 0], rule.points[:, 1]
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            err = abs(rule.weights @ (x**a * y**b) - monomial_integral(a, b))
            if err > 1e-15:
                raise AssertionError(f"degree {degree} rule inexact for x^{a} y^{b}: {err:.2e}")
    return rule
