"""Real-valued signals on the integer lattice.

Two models are supported: a finite window of Z (values on a contiguous
range of sites, identified by an integer offset) and the torus Z_N
(index arithmetic mod N).  Window signals are the natural home for exact
kernel sums; torus signals for exact multiplier algebra.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Relative slack for the mean-zero predicate: |sum| <= MEAN_ZERO_RTOL * l1 norm.
MEAN_ZERO_RTOL = 1e-12

WINDOW = "window"
TORUS = "torus"


@dataclass(frozen=True, eq=False)
class LatticeSignal:
    """A finite real signal, either on a window of Z or on the torus Z_N.

    ``values[i]`` lives at site ``offset + i`` (window) or at site ``i``
    (torus, where ``N = len(values)``).
    """

    values: np.ndarray
    kind: str
    offset: int = 0
    meta: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1:
            raise ValueError("signal values must be one-dimensional")
        if vals.size and not np.all(np.isfinite(vals)):
            raise ValueError("signal values must be finite (no NaN/inf)")
        if self.kind not in (WINDOW, TORUS):
            raise ValueError(f"unknown signal kind {self.kind!r}")
        if self.kind == TORUS and vals.size < 2:
            raise ValueError("torus signals need N >= 2")
        if self.kind == TORUS and self.offset != 0:
            raise ValueError("torus signals carry no offset")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "offset", int(self.offset))

    # -- constructors ------------------------------------------------------

    @staticmethod
    def window(values, offset: int = 0) -> "LatticeSignal":
        return LatticeSignal(np.asarray(values, dtype=float), WINDOW, offset)

    @staticmethod
    def torus(values) -> "LatticeSignal":
        return LatticeSignal(np.asarray(values, dtype=float), TORUS)

    @staticmethod
    def delta_window() -> "LatticeSignal":
        """The unit impulse at site 0 on a window."""
        return LatticeSignal.window([1.0], 0)

    @staticmethod
    def delta_torus(n: int, mean_zero: bool = False) -> "LatticeSignal":
        """Unit impulse at site 0 on Z_n; optionally recentered to mean zero."""
        v = np.zeros(n)
        v[0] = 1.0
        if mean_zero:
            v -= 1.0 / n
        return LatticeSignal.torus(v)

    @staticmethod
    def random_mean_zero_torus(n: int, rng: np.random.Generator) -> "LatticeSignal":
        v = rng.standard_normal(n)
        v -= v.mean()
        return LatticeSignal.torus(v)

    # -- predicates and descriptors ---------------------------------------

    @property
    def is_torus(self) -> bool:
        return self.kind == TORUS

    @property
    def is_window(self) -> bool:
        return self.kind == WINDOW

    @property
    def n(self) -> int:
        """Torus size."""
        if not self.is_torus:
            raise ValueError("n is defined for torus signals only")
        return self.values.size

    @property
    def length(self) -> int:
        return self.values.size

    @property
    def support(self) -> tuple[int, int]:
        """Inclusive site range [first, last] of the window."""
        if not self.is_window:
            raise ValueError("support is defined for window signals only")
        if self.values.size == 0:
            raise ValueError("empty signal has no support")
        return self.offset, self.offset + self.values.size - 1

    def mean_zero(self) -> bool:
        total = float(self.values.sum())
        scale = float(np.abs(self.values).sum())
        return abs(total) <= MEAN_ZERO_RTOL * scale if scale else total == 0.0

    def norm1(self) -> float:
        return float(np.abs(self.values).sum())

    def norm2(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))

    def site_value(self, x: int) -> float:
        """Value at site x (0 outside a window; mod N on the torus)."""
        if self.is_torus:
            return float(self.values[x % self.n])
        i = x - self.offset
        if 0 <= i < self.values.size:
            return float(self.values[i])
        return 0.0

    def with_values(self, values) -> "LatticeSignal":
        return LatticeSignal(np.asarray(values, dtype=float), self.kind, self.offset)


def inner(f: LatticeSignal, g: LatticeSignal) -> float:
    """l2 pairing sum_x f(x) g(x) of two signals on the same torus."""
    if not (f.is_torus and g.is_torus and f.n == g.n):
        raise ValueError("inner product needs two torus signals of equal size")
    return float(np.dot(f.values, g.values))


def require_mean_zero(s: LatticeSignal, what: str = "signal") -> None:
    if not s.mean_zero():
        raise ValueError(f"{what} must have zero mean (got sum {s.values.sum():g})")


# -- CSV round-trip ---------------------------------------------------------
#
# Format shared by every tool in the package: header "x,value", one row per
# site, decimals with up to 17 significant digits.  Torus files declare
# "# torus=N" on line 1.


def load_signal(path) -> LatticeSignal:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    torus_n = None
    row0 = 0
    if lines and lines[0].startswith("#"):
        tag = lines[0][1:].strip()
        if not tag.startswith("torus="):
            raise ValueError(f"{path}: line 1: unknown directive {lines[0]!r}")
        try:
            torus_n = int(tag.split("=", 1)[1])
        except ValueError:
            raise ValueError(f"{path}: line 1: bad torus size in {lines[0]!r}") from None
        if torus_n < 2:
            raise ValueError(f"{path}: line 1: torus size must be >= 2")
        row0 = 1
    if row0 >= len(lines) or lines[row0].strip().lower() != "x,value":
        raise ValueError(f"{path}: line {row0 + 1}: expected header 'x,value'")

    xs, vs = [], []
    for lineno, raw in enumerate(lines[row0 + 1:], start=row0 + 2):
        if not raw.strip():
            continue
        parts = raw.split(",")
        if len(parts) != 2:
            raise ValueError(f"{path}: line {lineno}: expected 'x,value', got {raw!r}")
        try:
            x = int(parts[0])
            v = float(parts[1])
        except ValueError:
            raise ValueError(f"{path}: line {lineno}: could not parse {raw!r}") from None
        if not np.isfinite(v):
            raise ValueError(f"{path}: line {lineno}: non-finite value")
        xs.append(x)
        vs.append(v)

    if torus_n is not None:
        vals = np.zeros(torus_n)
        for lineno_off, (x, v) in enumerate(zip(xs, vs)):
            if not (0 <= x < torus_n):
                raise ValueError(f"{path}: site {x} outside torus of size {torus_n}")
            vals[x] = v
        return LatticeSignal.torus(vals)

    if not xs:
        return LatticeSignal.window([], 0)
    lo, hi = min(xs), max(xs)
    vals = np.zeros(hi - lo + 1)
    for x, v in zip(xs, vs):
        vals[x - lo] = v
    return LatticeSignal.window(vals, lo)


def write_signal(path, s: LatticeSignal) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if s.is_torus:
            fh.write(f"# torus={s.n}\n")
        fh.write("x,value\n")
        base = 0 if s.is_torus else s.offset
        for i, v in enumerate(s.values):
            fh.write(f"{base + i},{v:.17g}\n")
