"""Exact probability mass functions on a contiguous integer support."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class ExactPmf:
    """Law on ``offset, offset+1, ..., offset+len(mass)-1``.

    ``mass`` is a float array, or a tuple of ``Fraction`` in rational mode.
    """

    offset: int
    mass: Sequence

    def __post_init__(self):
        if isinstance(self.mass, np.ndarray):
            object.__setattr__(self, "mass", np.asarray(self.mass, dtype=float))
        else:
            object.__setattr__(self, "mass", tuple(Fraction(m) for m in self.mass))

    @classmethod
    def point(cls, x: int, exact: bool = True) -> "ExactPmf":
        return cls(x, (Fraction(1),) if exact else np.ones(1))

    @classmethod
    def from_dict(cls, probs: dict, exact: bool = True) -> "ExactPmf":
        lo, hi = min(probs), max(probs)
        zero = Fraction(0) if exact else 0.0
        mass = [probs.get(x, zero) for x in range(lo, hi + 1)]
        return cls(lo, tuple(mass) if exact else np.array(mass, dtype=float))

    @property
    def exact(self) -> bool:
        return not isinstance(self.mass, np.ndarray)

    def __len__(self):
        return len(self.mass)

    @property
    def support(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + len(self.mass))

    def items(self):
        return zip(range(self.offset, self.offset + len(self.mass)), self.mass)

    def prob(self, x: int):
        i = x - self.offset
        if 0 <= i < len(self.mass):
            return self.mass[i]
        return Fraction(0) if self.exact else 0.0

    def as_dict(self, drop_zeros: bool = True) -> dict:
        return {x: m for x, m in self.items() if m != 0 or not drop_zeros}

    def total(self):
        return sum(self.mass) if self.exact else float(np.sum(self.mass))

    def as_float(self) -> "ExactPmf":
        if not self.exact:
            return self
        return ExactPmf(self.offset, np.array([float(m) for m in self.mass]))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.as_float().mass)

    def expect(self, fn: Callable[[int], object]):
        if self.exact:
            return sum((m * fn(x) for x, m in self.items() if m), Fraction(0))
        x = self.support
        return float(np.dot(self.mass, fn(x)))

    def mean(self):
        return self.expect(lambda x: x)

    def moment(self, m: float):
        if self.exact:
            return self.expect(lambda x: Fraction(x) ** m)
        return self.expect(lambda x: np.asarray(x, dtype=float) ** m)

    def cdf_array(self) -> np.ndarray:
        """``P[X <= x]`` at each support point (float)."""
        return np.cumsum(self.as_array())

    def cdf(self, t: float):
        """``P[X <= t]`` for real ``t``."""
        i = int(np.floor(t)) - self.offset
        if i < 0:
            return Fraction(0) if self.exact else 0.0
        if self.exact:
            return sum(self.mass[: i + 1], Fraction(0))
        return float(np.sum(self.mass[: i + 1]))

    def shift(self, r: int) -> "ExactPmf":
        return ExactPmf(self.offset + r, self.mass)

    def affine(self, scale: int, shift: int = 0) -> "ExactPmf":
        """Law of ``scale * X + shift`` for a positive integer ``scale``."""
        if scale < 1:
            raise ValueError("scale must be a positive integer")
        if scale == 1:
            return self.shift(shift)
        n = (len(self.mass) - 1) * scale + 1
        if self.exact:
            mass = [Fraction(0)] * n
            for i, m in enumerate(self.mass):
                mass[i * scale] = m
            return ExactPmf(self.offset * scale + shift, tuple(mass))
        mass = np.zeros(n)
        mass[::scale] = self.mass
        return ExactPmf(self.offset * scale + shift, mass)

    def condition_positive(self) -> "ExactPmf":
        """Law of ``X`` given ``X > 0``."""
        kept = [(x, m) for x, m in self.items() if x > 0]
        if not kept:
            raise ValueError("no mass on positive values")
        z = sum(m for _, m in kept)
        if z == 0:
            raise ValueError("no mass on positive values")
        mass = [m / z for _, m in kept]
        return ExactPmf(kept[0][0], tuple(mass) if self.exact else np.array(mass))

    def trim(self) -> "ExactPmf":
        """Drop exactly-zero mass at both ends."""
        nz = [i for i, m in enumerate(self.mass) if m != 0]
        if not nz:
            return self
        lo, hi = nz[0], nz[-1] + 1
        mass = self.mass[lo:hi]
        return ExactPmf(self.offset + lo, mass)

    def sup_distance(self, other: "ExactPmf"):
        """``max_x |p(x) - q(x)|`` over the union of supports."""
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self), other.offset + len(other))
        return max(abs(self.prob(x) - other.prob(x)) for x in range(lo, hi))

    def tv_distance(self, other: "ExactPmf"):
        lo = min(self.offset, other.offset)
        hi = max(self.offset + len(self), other.offset + len(other))
        return sum(abs(self.prob(x) - other.prob(x)) for x in range(lo, hi)) / 2

    def sample(self, rng: np.random.Generator, size=None):
        cdf = self.cdf_array()
        u = rng.random(size)
        idx = np.searchsorted(cdf, u * cdf[-1], side="right")
        return self.offset + np.minimum(idx, len(cdf) - 1)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"offset": int(self.offset), "mass": [float(m) for m in self.mass]})

    def to_exact_json(self) -> str:
        return json.dumps({"offset": int(self.offset), "mass": [str(Fraction(m)) for m in self.mass]})

    @classmethod
    def from_json(cls, text: str) -> "ExactPmf":
        data = json.loads(text)
        mass = data["mass"]
        if mass and isinstance(mass[0], str):
            return cls(int(data["offset"]), tuple(Fraction(m) for m in mass))
        return cls(int(data["offset"]), np.array(mass, dtype=float))

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["support", "mass"])
        for x, m in self.items():
            writer.writerow([x, repr(float(m))])
        return buf.getvalue()


def mixture(components: Iterable[tuple[object, ExactPmf]]) -> ExactPmf:
    """``sum_i w_i * P_i`` for weights ``w_i`` and laws ``P_i``."""
    components = [(w, p) for w, p in components if w != 0]
    if not components:
        raise ValueError("empty mixture")
    exact = components[0][1].exact
    lo = min(p.offset for _, p in components)
    hi = max(p.offset + len(p) for _, p in components)
    if exact:
        mass = [Fraction(0)] * (hi - lo)
        for w, p in components:
            for i, m in enumerate(p.mass):
                mass[p.offset - lo + i] += w * m
        return ExactPmf(lo, tuple(mass))
    mass = np.zeros(hi - lo)
    for w, p in components:
        mass[p.offset - lo: p.offset - lo + len(p)] += float(w) * p.as_array()
    return ExactPmf(lo, mass)


def rising(x, m: int):
    """Rising factorial ``x (x+1) ... (x+m-1)``; works on ints, Fractions and arrays."""
    out = 1
    for i in range(m):
        out = out * (x + i)
    return out
