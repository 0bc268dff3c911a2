"""Finite periodic lattices, spin configurations and update/interaction shapes.

Sites are numbered row-major with axis 1 fastest: site = x_1 + L_1*(x_2 + L_2*(...)).
Configurations are numbered by base-q little-endian digits in site order (ConfigIndex).
States are 0-based; the {1,...,q} labelling of the literature only appears in docs.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Sequence, Tuple

import numpy as np

from config import get_cap_bits
from .errors import BadValue, CapExceeded, RangeError

logger = logging.getLogger(__name__)

Vector = Tuple[int, ...]


@dataclass(frozen=True)
class TorusGeometry:
    d: int
    sides: Tuple[int, ...]
    q: int

    def __post_init__(self):
        sides = tuple(int(s) for s in self.sides)
        object.__setattr__(self, "sides", sides)
        if self.d < 1 or len(sides) != self.d:
            raise BadValue(f"need {self.d} side lengths, got {list(sides)}")
        if any(s < 1 for s in sides):
            raise BadValue(f"side lengths must be positive: {list(sides)}")
        if self.q < 2:
            raise BadValue(f"q must be at least 2, got {self.q}")

    @classmethod
    def chain(cls, length: int, q: int = 2) -> "TorusGeometry":
        return cls(1, (length,), q)

    @classmethod
    def from_json(cls, data: Mapping) -> "TorusGeometry":
        sides = data.get("sides")
        d = int(data.get("d", len(sides or [])))
        return cls(d, tuple(sides or []), int(data.get("q", 2)))

    def to_json(self) -> Dict:
        return {"d": self.d, "sides": list(self.sides), "q": self.q}

    @property
    def n_sites(self) -> int:
        return math.prod(self.sides)

    @property
    def bits(self) -> float:
        return self.n_sites * math.log2(self.q)

    @property
    def n_configs(self) -> int:
        return self.q ** self.n_sites

    @property
    def strides(self) -> Tuple[int, ...]:
        out, acc = [], 1
        for side in self.sides:
            out.append(acc)
            acc *= side
        return tuple(out)

    def check_cap(self, n_sites: int | None = None) -> None:
        n = self.n_sites if n_sites is None else n_sites
        bits = n * math.log2(self.q)
        cap = get_cap_bits()
        if bits > cap:
            raise CapExceeded(bits, cap)

    def coords(self, site: int) -> Vector:
        out = []
        for side in self.sides:
            out.append(site % side)
            site //= side
        return tuple(out)

    def site(self, coords: Sequence[int]) -> int:
        return sum((c % side) * stride for c, side, stride in zip(coords, self.sides, self.strides))

    def shift(self, site: int, v: Sequence[int]) -> int:
        return self.site(tuple(c + dv for c, dv in zip(self.coords(site), v)))

    def distance(self, a: int, b: int) -> int:
        """Sup-norm distance on the torus."""
        out = 0
        for ca, cb, side in zip(self.coords(a), self.coords(b), self.sides):
            diff = abs(ca - cb) % side
            out = max(out, min(diff, side - diff))
        return out

    def tag(self) -> str:
        return f"d{self.d}-" + "x".join(str(s) for s in self.sides) + f"-q{self.q}"


@dataclass(frozen=True)
class SpinConfig:
    geometry: TorusGeometry
    states: Tuple[int, ...]

    def __post_init__(self):
        states = tuple(int(s) for s in self.states)
        object.__setattr__(self, "states", states)
        if len(states) != self.geometry.n_sites:
            raise BadValue(f"config has {len(states)} entries, volume has {self.geometry.n_sites}")
        bad = [s for s in states if s < 0 or s >= self.geometry.q]
        if bad:
            raise BadValue(f"states {bad} outside 0..{self.geometry.q - 1}")

    @classmethod
    def constant(cls, geom: TorusGeometry, value: int) -> "SpinConfig":
        return cls(geom, (value,) * geom.n_sites)

    def array(self) -> np.ndarray:
        return np.asarray(self.states, dtype=np.int64)

    def index(self) -> int:
        return encode(self)

    def __getitem__(self, site: int) -> int:
        return self.states[site]


@dataclass(frozen=True)
class Shape:
    """Finite set of offsets containing the zero vector, kept in lexicographic order."""

    offsets: Tuple[Vector, ...]

    def __post_init__(self):
        offs = tuple(sorted({tuple(int(c) for c in o) for o in self.offsets}))
        if not offs:
            raise BadValue("shape must not be empty")
        dims = {len(o) for o in offs}
        if len(dims) != 1:
            raise BadValue(f"mixed offset dimensions in shape: {offs}")
        if tuple([0] * len(offs[0])) not in offs:
            raise BadValue(f"shape must contain the zero offset: {offs}")
        if len(offs) != len(self.offsets):
            raise BadValue(f"duplicate offsets in shape: {self.offsets}")
        object.__setattr__(self, "offsets", offs)

    @classmethod
    def of(cls, offsets: Iterable[Sequence[int]]) -> "Shape":
        return cls(tuple(tuple(o) for o in offsets))

    @classmethod
    def single(cls, d: int) -> "Shape":
        return cls(((0,) * d,))

    @classmethod
    def von_neumann(cls, d: int) -> "Shape":
        """The origin and its 2d nearest neighbours."""
        offs = [(0,) * d]
        for k in range(d):
            for sign in (-1, 1):
                v = [0] * d
                v[k] = sign
                offs.append(tuple(v))
        return cls(tuple(offs))

    @property
    def size(self) -> int:
        return len(self.offsets)

    @property
    def dim(self) -> int:
        return len(self.offsets[0])

    @property
    def radius(self) -> int:
        return max(max(abs(c) for c in o) for o in self.offsets)

    def index_of(self, offset: Sequence[int]) -> int:
        return self.offsets.index(tuple(offset))

    def sites(self, geom: TorusGeometry, anchor: int = 0) -> Tuple[int, ...]:
        return tuple(geom.shift(anchor, o) for o in self.offsets)

    def fits(self, geom: TorusGeometry) -> bool:
        return len(set(self.sites(geom, 0))) == self.size

    def require_fit(self, geom: TorusGeometry, what: str = "shape") -> None:
        if self.dim != geom.d:
            raise RangeError(f"{what} has dimension {self.dim}, torus has {geom.d}")
        if not self.fits(geom):
            raise RangeError(f"{what} {list(self.offsets)} overlaps its own translate on torus {geom.tag()}")

    def anchored_translates(self) -> List[Tuple["Shape", int]]:
        """All translates containing 0, each with the position of 0 inside it."""
        out = []
        for k, b in enumerate(self.offsets):
            shifted = Shape(tuple(tuple(c - bc for c, bc in zip(o, b)) for o in self.offsets))
            out.append((shifted, k))
        return out


def encode(cfg: SpinConfig) -> int:
    q = cfg.geometry.q
    value = 0
    for s in reversed(cfg.states):
        value = value * q + s
    return value


def decode(geom: TorusGeometry, index: int) -> SpinConfig:
    if index < 0 or index >= geom.n_configs:
        raise BadValue(f"ConfigIndex {index} outside [0, {geom.n_configs})")
    states = []
    for _ in range(geom.n_sites):
        index, digit = divmod(index, geom.q)
        states.append(digit)
    return SpinConfig(geom, tuple(states))


def enumerate_configs(geom: TorusGeometry) -> Iterator[SpinConfig]:
    geom.check_cap()
    for index in range(geom.n_configs):
        yield decode(geom, index)


@lru_cache(maxsize=16)
def all_states(geom: TorusGeometry) -> np.ndarray:
    """Every configuration as a row, rows in ConfigIndex order (read-only)."""
    geom.check_cap()
    logger.debug(f"enumerating {geom.n_configs} configurations on {geom.tag()}")
    idx = np.arange(geom.n_configs, dtype=np.int64)
    states = np.empty((geom.n_configs, geom.n_sites), dtype=np.uint8)
    for site in range(geom.n_sites):
        states[:, site] = idx % geom.q
        idx //= geom.q
    states.setflags(write=False)
    return states


def site_powers(geom: TorusGeometry) -> np.ndarray:
    return np.asarray([geom.q ** i for i in range(geom.n_sites)], dtype=np.int64)


def local_index(states: np.ndarray, sites: Sequence[int], q: int) -> np.ndarray:
    """Base-q little-endian index of the sub-configuration on `sites`, per row of `states`."""
    out = np.zeros(states.shape[0], dtype=np.int64)
    for j, site in enumerate(sites):
        out += states[:, site].astype(np.int64) * (q ** j)
    return out


def local_digits(value: int, size: int, q: int) -> Tuple[int, ...]:
    out = []
    for _ in range(size):
        value, digit = divmod(value, q)
        out.append(digit)
    return tuple(out)


def replace_sites(geom: TorusGeometry, indices: np.ndarray, states: np.ndarray,
                  sites: Sequence[int], values: Sequence[int]) -> np.ndarray:
    """ConfigIndex of each row after writing `values` on `sites`."""
    out = indices.copy()
    for site, value in zip(sites, values):
        power = geom.q ** site
        out += (int(value) - states[:, site].astype(np.int64)) * power
    return out


def translate(cfg: SpinConfig, v: Sequence[int]) -> SpinConfig:
    geom = cfg.geometry
    back = tuple(-c for c in v)
    return SpinConfig(geom, tuple(cfg.states[geom.shift(site, back)] for site in range(geom.n_sites)))


def patch(cfg: SpinConfig, region: Iterable[int], local: Mapping[int, int]) -> SpinConfig:
    geom = cfg.geometry
    states = list(cfg.states)
    for site in region:
        if site not in local:
            raise BadValue(f"no value assigned to site {site}")
        value = int(local[site])
        if value < 0 or value >= geom.q:
            raise BadValue(f"value {value} at site {site} outside 0..{geom.q - 1}")
        states[site] = value
    return SpinConfig(geom, tuple(states))


def box(geom: TorusGeometry, side: int | Sequence[int], origin: int = 0) -> Tuple[int, ...]:
    sides = (side,) * geom.d if isinstance(side, int) else tuple(side)
    if any(s < 1 or s > L for s, L in zip(sides, geom.sides)):
        raise BadValue(f"box {list(sides)} does not fit torus {list(geom.sides)}")
    base = geom.coords(origin)
    sites = {geom.site(tuple(b + o for b, o in zip(base, off)))
             for off in itertools.product(*(range(s) for s in sides))}
    return tuple(sorted(sites))


def ball(geom: TorusGeometry, radius: int, center: int = 0) -> Tuple[int, ...]:
    return tuple(s for s in range(geom.n_sites) if geom.distance(s, center) <= radius)


def boundary_size(geom: TorusGeometry, sites: Iterable[int], width: int = 1) -> int:
    """Sites of the volume lying within `width` of its complement."""
    inside = set(sites)
    outside = [s for s in range(geom.n_sites) if s not in inside]
    return sum(1 for s in inside if any(geom.distance(s, o) <= width for o in outside))
