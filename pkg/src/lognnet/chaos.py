"""Chaotic maps used to fill the reservoir matrix.

Each map is a deterministic recurrence over a scalar (or, for the Henon
family, a two-component) state.  Only the ``x`` component is ever emitted
for matrix filling; ``y`` stays internal.

The scalar implementations here are the reference semantics.  The compiled
kernels in :mod:`lognnet._ckernels` spell out the same expressions in the
same evaluation order so that both produce bit-identical orbits.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

__all__ = [
    "MapKind",
    "MapState",
    "MapSpec",
    "ArityError",
    "OrbitDivergedError",
    "PARAM_NAMES",
    "PARAM_LIMITS",
    "SEARCH_PARAMS",
    "DEFAULT_WAVELENGTH_DIVISOR",
    "validate_params",
    "step",
    "orbit",
    "search_box",
]

DEFAULT_WAVELENGTH_DIVISOR = 784.0


class MapKind(str, enum.Enum):
    """The eight map families; values are the names used in configs and CLI flags."""

    SINE_LOGISTIC = "lognnet"
    LOGISTIC = "logistic"
    SINE = "sine"
    GAUSS = "gauss"
    TWO_SIDED = "2sided"
    PLANK = "plank"
    HENON1 = "henon1"
    HENON2 = "henon2"

    @classmethod
    def parse(cls, value: "str | MapKind") -> "MapKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key.startswith("lognnet/"):
            key = key.split("/", 1)[1]
        for kind in cls:
            if kind.value == key or kind.name.lower() == key:
                return kind
        raise ValueError(f"unknown map kind {value!r}; expected one of "
                         f"{', '.join(k.value for k in cls)}")

    @property
    def code(self) -> int:
        """Stable small-integer id used by the kernels and the model file."""
        return _KIND_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "MapKind":
        for kind, c in _KIND_CODES.items():
            if c == code:
                return kind
        raise ValueError(f"unknown map kind code {code}")

    @property
    def display_name(self) -> str:
        if self is MapKind.SINE_LOGISTIC:
            return "LogNNet"
        return f"LogNNet/{self.value.capitalize()}"


_KIND_CODES = {
    MapKind.SINE_LOGISTIC: 0,
    MapKind.LOGISTIC: 1,
    MapKind.SINE: 2,
    MapKind.GAUSS: 3,
    MapKind.TWO_SIDED: 4,
    MapKind.PLANK: 5,
    MapKind.HENON1: 6,
    MapKind.HENON2: 7,
}

# Parameter order is part of the model file format.  The Henon1 entry housed
# in y0 is the extra scalar of that family's row in the parameter table.
PARAM_NAMES: dict[MapKind, tuple[str, ...]] = {
    MapKind.SINE_LOGISTIC: ("A", "B", "r", "D"),
    MapKind.LOGISTIC: ("x0", "r"),
    MapKind.SINE: ("x0", "r"),
    MapKind.GAUSS: ("x0", "r1", "r2"),
    MapKind.TWO_SIDED: ("x0", "r"),
    MapKind.PLANK: ("x0", "r"),
    MapKind.HENON1: ("x0", "y0", "r1", "r2"),
    MapKind.HENON2: ("x0", "y0", "r1", "r2", "r3", "r4"),
}

# Closed intervals.  D (the wavelength divisor) is not searched; it only has
# to be a positive finite number.
PARAM_LIMITS: dict[MapKind, dict[str, tuple[float, float]]] = {
    MapKind.SINE_LOGISTIC: {"A": (-1.0, 1.0), "B": (0.1, 10.0), "r": (0.1, 2.0),
                            "D": (math.ulp(0.0), math.inf)},
    MapKind.LOGISTIC: {"x0": (-1.0, 1.0), "r": (1.0, 4.0)},
    MapKind.SINE: {"x0": (-1.0, 1.0), "r": (0.0, 2.0)},
    MapKind.GAUSS: {"x0": (-1.0, 1.0), "r1": (-1.0, 1.0), "r2": (3.0, 6.0)},
    MapKind.TWO_SIDED: {"x0": (0.0, 10.0), "r": (0.0, 100.0)},
    MapKind.PLANK: {"x0": (0.0, 5.0), "r": (0.0, 7.0)},
    MapKind.HENON1: {"x0": (0.01, 1.5), "y0": (0.01, 10.0), "r1": (0.0, 1.5),
                     "r2": (0.0, 1.5)},
    MapKind.HENON2: {"x0": (0.01, 1.5), "y0": (0.01, 10.0), "r1": (0.0, 1.5),
                     "r2": (0.0, 1.5), "r3": (0.0, 1.5), "r4": (0.0, 1.5)},
}

SEARCH_PARAMS: dict[MapKind, tuple[str, ...]] = {
    kind: tuple(n for n in names if n != "D") for kind, names in PARAM_NAMES.items()
}


class ArityError(ValueError):
    """Parameter names do not match what the map kind requires."""


class OrbitDivergedError(ArithmeticError):
    """An orbit produced a non-finite value.

    ``index`` is the 1-based orbit position of the first non-finite value;
    ``partial`` holds the finite prefix.
    """

    def __init__(self, kind: MapKind, params: Sequence[float], index: int,
                 partial: Sequence[float] = ()):
        self.kind = kind
        self.params = tuple(params)
        self.index = index
        self.partial = list(partial)
        super().__init__(f"{kind.value} orbit diverged at index {index} "
                         f"with params {self.params}")


@dataclass(frozen=True)
class MapState:
    x: float
    y: float = 0.0
    diverged: bool = False


def _param_tuple(kind: MapKind, params: "Mapping[str, float] | Sequence[float]") -> tuple[float, ...]:
    names = PARAM_NAMES[kind]
    if isinstance(params, Mapping):
        given = dict(params)
        if kind is MapKind.SINE_LOGISTIC:
            given.setdefault("D", DEFAULT_WAVELENGTH_DIVISOR)
        missing = [n for n in names if n not in given]
        extra = [n for n in given if n not in names]
        if missing or extra:
            raise ArityError(f"{kind.value} expects parameters {names}; "
                             f"missing {missing}, unexpected {extra}")
        return tuple(float(given[n]) for n in names)
    values = tuple(float(v) for v in params)
    if kind is MapKind.SINE_LOGISTIC and len(values) == 3:
        values = values + (DEFAULT_WAVELENGTH_DIVISOR,)
    if len(values) != len(names):
        raise ArityError(f"{kind.value} expects {len(names)} parameters {names}, "
                         f"got {len(values)}")
    return values


@dataclass(frozen=True)
class MapSpec:
    """A map kind plus its full parameter vector (ordered as ``PARAM_NAMES``)."""

    kind: MapKind
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "kind", MapKind.parse(self.kind))
        object.__setattr__(self, "params", _param_tuple(self.kind, self.params))

    @classmethod
    def of(cls, kind: "str | MapKind", **params: float) -> "MapSpec":
        return cls(MapKind.parse(kind), params)  # type: ignore[arg-type]

    def as_dict(self) -> dict[str, float]:
        return dict(zip(PARAM_NAMES[self.kind], self.params))

    def validate(self) -> "MapSpec":
        problems = validate_params(self.kind, self.params)
        if problems:
            raise ValueError(f"{self.kind.value} parameters out of range: "
                             + ", ".join(problems))
        return self

    def __str__(self) -> str:
        inner = ", ".join(f"{k}={v:.6g}" for k, v in self.as_dict().items())
        return f"{self.kind.value}({inner})"


def validate_params(kind: "MapKind | str",
                    params: "Mapping[str, float] | Sequence[float]") -> list[str]:
    """Return the names of out-of-range parameters; empty means valid.

    Raises :class:`ArityError` when the parameter set has the wrong shape,
    which is a structural problem rather than a range violation.
    """
    kind = MapKind.parse(kind)
    values = _param_tuple(kind, params)
    violations = []
    for name, value in zip(PARAM_NAMES[kind], values):
        lo, hi = PARAM_LIMITS[kind][name]
        if not math.isfinite(value) or value < lo or value > hi:
            violations.append(name)
    return violations


def search_box(kind: "MapKind | str") -> tuple[tuple[str, ...], list[float], list[float]]:
    """Names, lower and upper bounds of the optimizable parameters."""
    kind = MapKind.parse(kind)
    names = SEARCH_PARAMS[kind]
    lo = [PARAM_LIMITS[kind][n][0] for n in names]
    hi = [PARAM_LIMITS[kind][n][1] for n in names]
    return names, lo, hi


def _exp(v: float) -> float:
    try:
        return math.exp(v)
    except OverflowError:
        return math.inf


def _next(kind: MapKind, p: tuple[float, ...], x: float, y: float) -> tuple[float, float]:
    # Expressions mirror _ckernels.pyx term for term; keep them in sync.
    try:
        if kind is MapKind.LOGISTIC:
            return p[1] * x * (1.0 - x), y
        if kind is MapKind.SINE:
            return p[1] * math.sin(math.pi * x), y
        if kind is MapKind.GAUSS:
            return _exp(-p[2] * x * x) + p[1], y
        if kind is MapKind.TWO_SIDED:
            return p[1] * x / (1.0 + x * x * x), y
        if kind is MapKind.PLANK:
            return p[1] * x * x * x / (1.0 + _exp(x)), y
        if kind is MapKind.HENON1:
            return 1.0 - p[2] * x * x + y, p[3] * x
        if kind is MapKind.HENON2:
            return x + p[2] * x * x + p[3] * y * y - p[4] * y * x - p[5], x
        if kind is MapKind.SINE_LOGISTIC:
            return 1.0 - p[2] * (x * x), y
    except (ZeroDivisionError, OverflowError, ValueError):
        return math.nan, y
    raise ValueError(f"unsupported map kind {kind}")


def step(kind: "MapKind | str", params: "Mapping[str, float] | Sequence[float]",
         state: MapState) -> MapState:
    """Advance one iteration.

    For the sine/logistic pair this applies the column recurrence
    ``w' = 1 - r*w**2``.  A non-finite result sets ``diverged`` instead of
    raising.
    """
    kind = MapKind.parse(kind)
    p = _param_tuple(kind, params)
    x, y = _next(kind, p, state.x, state.y)
    return MapState(x, y, not (math.isfinite(x) and math.isfinite(y)))


def initial_state(kind: MapKind, p: tuple[float, ...]) -> MapState:
    if kind is MapKind.SINE_LOGISTIC:
        raise ValueError("the sine/logistic filler has no single seed state; "
                         "its first column comes from the sine profile")
    if kind in (MapKind.HENON1, MapKind.HENON2):
        return MapState(p[0], p[1])
    return MapState(p[0], 0.0)


def orbit(kind: "MapKind | str", params: "Mapping[str, float] | Sequence[float]",
          length: int) -> list[float]:
    """Return x_1 .. x_length of the orbit started at the seed (seed excluded)."""
    kind = MapKind.parse(kind)
    if length < 1:
        raise ValueError("orbit length must be >= 1")
    p = _param_tuple(kind, params)
    state = initial_state(kind, p)
    x, y = state.x, state.y
    out: list[float] = []
    for n in range(1, length + 1):
        x, y = _next(kind, p, x, y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise OrbitDivergedError(kind, p, n, out)
        out.append(x)
    return out
