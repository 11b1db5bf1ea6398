"""Second-order forward-mode automatic differentiation in three variables.

A :class:`Jet` carries the value, gradient and Hessian of a scalar field
at a batch of points. Arithmetic propagates all three exactly (truncated
Taylor arithmetic), so composing elementary operations yields exact first
and second derivatives without finite differences.
"""

import numpy as np


class Jet:
    """Truncated second-order Taylor expansion of a scalar field.

    Attributes:
        val: (N,) values.
        grad: (N, 3) first derivatives.
        hess: (N, 3, 3) second derivatives.
    """

    __slots__ = ("val", "grad", "hess")
    __array_priority__ = 100

    def __init__(self, val, grad, hess):
        self.val = val
        self.grad = grad
        self.hess = hess

    @classmethod
    def variables(cls, x):
        """Independent coordinate jets (x, y, z) for points of shape (N, 3)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[0]
        out = []
        for k in range(3):
            g = np.zeros((n, 3))
            g[:, k] = 1.0
            out.append(cls(x[:, k].copy(), g, np.zeros((n, 3, 3))))
        return out

    @classmethod
    def constant(cls, c, n):
        return cls(np.full(n, float(c)), np.zeros((n, 3)), np.zeros((n, 3, 3)))

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet(np.broadcast_to(np.asarray(other, dtype=float), self.val.shape),
                   np.zeros_like(self.grad), np.zeros_like(self.hess))

    def __add__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val + other, self.grad, self.hess)
        return Jet(self.val + other.val, self.grad + other.grad, self.hess + other.hess)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.val, -self.grad, -self.hess)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.val * other, self.grad * np.asarray(other)[..., None],
                       self.hess * np.asarray(other)[..., None, None])
        f, g = self, other
        cross = f.grad[:, :, None] * g.grad[:, None, :]
        return Jet(
            f.val * g.val,
            f.grad * g.val[:, None] + f.val[:, None] * g.grad,
            f.hess * g.val[:, None, None] + f.val[:, None, None] * g.hess + cross + cross.transpose(0, 2, 1),
        )

    __rmul__ = __mul__

    def reciprocal(self):
        g = self.val
        outer = self.grad[:, :, None] * self.grad[:, None, :]
        return Jet(
            1.0 / g,
            -self.grad / g[:, None] ** 2,
            -self.hess / g[:, None, None] ** 2 + 2.0 * outer / g[:, None, None] ** 3,
        )

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return self * (1.0 / np.asarray(other, dtype=float))
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("Jet only supports non-negative integer powers")
        out = Jet.constant(1.0, len(self.val))
        for _ in range(n):
            out = out * self
        return out

    def sqrt(self):
        s = np.sqrt(self.val)
        outer = self.grad[:, :, None] * self.grad[:, None, :]
        return Jet(
            s,
            self.grad / (2.0 * s[:, None]),
            self.hess / (2.0 * s[:, None, None]) - outer / (4.0 * s[:, None, None] ** 3),
        )

    def __repr__(self):
        return f"Jet(n={len(self.val)})"


def stack_values(jets):
    """Values of a list of jets as an (N, len(jets)) array."""
    return np.stack([j.val for j in jets], axis=-1)


def stack_jacobian(jets):
    """Jacobian rows of a list of jets: (N, len(jets), 3)."""
    return np.stack([j.grad for j in jets], axis=1)


def stack_hessians(jets):
    """(N, len(jets), 3, 3) with entry [n, i, j, k] = d_j d_k f_i."""
    return np.stack([j.hess for j in jets], axis=1)
