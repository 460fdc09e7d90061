"""Forward-mode differentiable scalars with named partials."""

from __future__ import annotations

from typing import Mapping, Union


class DiffScalar:
    """A value together with its partial derivatives w.r.t. named variables.

    Arithmetic propagates first derivatives by the sum, product and quotient
    rules. Plain ints/floats mix in as constants.
    """

    __slots__ = ("value", "partials")

    def __init__(self, value: float, partials: Mapping[str, float] | None = None):
        self.value = float(value)
        self.partials = dict(partials) if partials else {}

    @classmethod
    def variable(cls, name: str, value: float) -> "DiffScalar":
        return cls(value, {name: 1.0})

    @classmethod
    def lift(cls, x: "Number") -> "DiffScalar":
        return x if isinstance(x, DiffScalar) else cls(x)

    @property
    def is_constant(self) -> bool:
        return not any(self.partials.values())

    def d(self, name: str) -> float:
        return self.partials.get(name, 0.0)

    def chain(self, value: float, derivative: float) -> "DiffScalar":
        """Apply a scalar function with known value and derivative at ``self.value``."""
        return DiffScalar(value, {k: derivative * v for k, v in self.partials.items()})

    def _combine(self, other: "DiffScalar", da: float, db: float, value: float) -> "DiffScalar":
        partials = {k: da * v for k, v in self.partials.items()}
        for k, v in other.partials.items():
            partials[k] = partials.get(k, 0.0) + db * v
        return DiffScalar(value, partials)

    def __add__(self, other):
        if not isinstance(other, DiffScalar):
            return DiffScalar(self.value + other, self.partials)
        return self._combine(other, 1.0, 1.0, self.value + other.value)

    __radd__ = __add__

    def __neg__(self):
        return self.chain(-self.value, -1.0)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, DiffScalar):
            return self.chain(self.value * other, float(other))
        return self._combine(other, other.value, self.value, self.value * other.value)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, DiffScalar):
            return self.chain(self.value / other, 1.0 / other)
        if other.value == 0.0:
            raise ZeroDivisionError("division by a DiffScalar with zero value")
        inv = 1.0 / other.value
        q = self.value * inv
        return self._combine(other, inv, -q * inv, q)

    def __rtruediv__(self, other):
        return DiffScalar(other) / self

    def __pow__(self, exponent: float):
        if isinstance(exponent, DiffScalar):
            raise TypeError("only constant exponents are supported")
        return self.chain(self.value ** exponent, exponent * self.value ** (exponent - 1))

    def __float__(self):
        return self.value

    def __eq__(self, other):
        if isinstance(other, DiffScalar):
            return self.value == other.value and self.partials == other.partials
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"DiffScalar({self.value!r}, {self.partials!r})"


Number = Union[int, float, DiffScalar]

