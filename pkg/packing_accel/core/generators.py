"""
Seeded instance generators.

    random    a_ij ~ U[0,1] kept with probability p (else structurally zero),
              c_j ~ U[lo, hi] (default [1, 100]), b_i = 0.1 n unless overridden
    vicinity  binary membership matrix of overlapping neighbourhoods on a
              random ring ordering of `nodes` sites; b_i = cap,
              c_j ~ U[lo, hi] (default [1, 10])

Draw order is fixed so that a spec reproduces the same instance everywhere:
c first, then A row by row (values, then keep-mask) for "random"; c, then
the ring permutation, then the centres for "vicinity". All draws come from
the Philox stream seeded by `spec.seed`.
"""

from dataclasses import asdict, dataclass
from typing import Optional, Union

import numpy as np

from packing_accel.config import load_key_values
from packing_accel.core.helpers import make_rng
from packing_accel.core.lp import PackingLp
from packing_accel.errors import SpecError


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str = "random"
    m: int = 10
    n: int = 1000
    p: float = 0.8
    # "0.1n" or an explicit right-hand side value
    b_rule: Union[str, float] = "0.1n"
    c_range: Optional[tuple] = None
    seed: int = 0
    nodes: int = 0
    vicinities: int = 0
    vicinity_size: int = 0
    cap: float = 0.0

    def __post_init__(self):
        if self.kind not in ("random", "vicinity"):
            raise SpecError(f"unknown generator kind '{self.kind}'")
        if self.kind == "random":
            if self.m < 1 or self.n < 1:
                raise SpecError(f"random instances need m, n >= 1, got m={self.m}, n={self.n}")
            if not 0 <= self.p <= 1:
                raise SpecError(f"density p must lie in [0, 1], got {self.p}")
        else:
            if self.nodes < 1 or self.vicinities < 1:
                raise SpecError("vicinity instances need nodes >= 1 and vicinities >= 1")
            if self.vicinities > self.nodes:
                raise SpecError("cannot pick more distinct vicinity centres than nodes")
            if not 1 <= self.vicinity_size <= self.nodes:
                raise SpecError("vicinity_size must lie in [1, nodes]")
            if self.cap < 0:
                raise SpecError("cap must be non-negative")
        if self.c_range is not None and len(self.c_range) != 2:
            raise SpecError(f"c_range needs exactly two values (lo, hi), got {self.c_range!r}")
        lo, hi = self.costs
        if not 0 <= lo <= hi:
            raise SpecError(f"c_range must satisfy 0 <= lo <= hi, got {self.c_range}")
        if self.b_rule != "0.1n":
            try:
                if float(self.b_rule) < 0:
                    raise SpecError("explicit b must be non-negative")
            except (TypeError, ValueError):
                raise SpecError(f"b_rule must be '0.1n' or a number, got {self.b_rule!r}")

    @property
    def costs(self) -> tuple:
        if self.c_range is not None:
            return float(self.c_range[0]), float(self.c_range[1])
        return (1.0, 100.0) if self.kind == "random" else (1.0, 10.0)

    @property
    def shape(self) -> tuple:
        return (self.m, self.n) if self.kind == "random" else (self.vicinities, self.nodes)

    def fingerprint(self) -> str:
        if self.kind == "random":
            return f"random(m={self.m},n={self.n},p={self.p:g},b={self.b_rule},seed={self.seed})"
        return (f"vicinity(nodes={self.nodes},vicinities={self.vicinities},"
                f"size={self.vicinity_size},cap={self.cap:g},seed={self.seed})")

    def with_seed(self, seed: int) -> "GeneratorSpec":
        values = asdict(self)
        values["seed"] = seed
        return GeneratorSpec(**values)


def generate(spec: GeneratorSpec) -> PackingLp:
    return generate_random(spec) if spec.kind == "random" else generate_vicinity(spec)


def generate_random(spec: GeneratorSpec) -> PackingLp:
    rng = make_rng(spec.seed)
    lo, hi = spec.costs
    c = lo + rng.random(spec.n) * (hi - lo)

    rows, cols, vals = [], [], []
    for i in range(spec.m):
        u = rng.random(spec.n)
        keep = np.flatnonzero(rng.random(spec.n) < spec.p)
        rows.append(np.full(keep.size, i, dtype=np.int64))
        cols.append(keep)
        vals.append(u[keep])

    b_value = 0.1 * spec.n if spec.b_rule == "0.1n" else float(spec.b_rule)
    return PackingLp.from_coo(
        spec.m, spec.n,
        np.concatenate(rows), np.concatenate(cols), np.concatenate(vals),
        np.full(spec.m, b_value), c,
    )


def vicinity_members(spec: GeneratorSpec, rng: Optional[np.random.Generator] = None) -> list:
    """
    Node lists of every vicinity: the centre plus its (size - 1) nearest
    nodes on a random ring ordering, nearest first, alternating sides.
    """
    if spec.kind != "vicinity":
        raise SpecError("vicinity_members needs a vicinity spec")
    if rng is None:
        rng = make_rng(spec.seed)
        rng.random(spec.nodes)  # the cost draw comes first in the stream
    ring = rng.permutation(spec.nodes)
    position = np.empty(spec.nodes, dtype=np.int64)
    position[ring] = np.arange(spec.nodes)
    centres = rng.choice(spec.nodes, size=spec.vicinities, replace=False)

    steps = np.arange(1, spec.vicinity_size)
    offsets = np.concatenate([[0], np.where(steps % 2 == 1, (steps + 1) // 2, -(steps // 2))])
    return [ring[(position[centre] + offsets) % spec.nodes] for centre in centres]


def generate_vicinity(spec: GeneratorSpec) -> PackingLp:
    if spec.kind != "vicinity":
        raise SpecError("generate_vicinity needs a vicinity spec")
    rng = make_rng(spec.seed)
    lo, hi = spec.costs
    c = lo + rng.random(spec.nodes) * (hi - lo)
    members = vicinity_members(spec, rng)

    rows = np.concatenate([np.full(nodes.size, i, dtype=np.int64) for i, nodes in enumerate(members)])
    cols = np.concatenate(members)
    return PackingLp.from_coo(
        spec.vicinities, spec.nodes, rows, cols, np.ones(cols.size),
        np.full(spec.vicinities, float(spec.cap)), c,
    )


# ============================================================================
# SPEC FILES
# ============================================================================

INT_KEYS = ("m", "n", "seed", "nodes", "vicinities", "vicinity_size")
FLOAT_KEYS = ("p", "cap")


def spec_from_mapping(values: dict) -> GeneratorSpec:
    kwargs = {}
    for key, raw in values.items():
        if key in INT_KEYS:
            kwargs[key] = int(raw)
        elif key in FLOAT_KEYS:
            kwargs[key] = float(raw)
        elif key == "kind":
            kwargs[key] = str(raw)
        elif key in ("b", "b_rule"):
            kwargs["b_rule"] = raw if str(raw) == "0.1n" else float(raw)
        elif key == "c_range":
            lo, hi = (float(v) for v in str(raw).replace(":", ",").split(","))
            kwargs["c_range"] = (lo, hi)
        else:
            raise SpecError(f"unknown generator spec key '{key}'")
    return GeneratorSpec(**kwargs)


def load_spec(path: str) -> GeneratorSpec:
    try:
        return spec_from_mapping(load_key_values(path))
    except ValueError as e:
        raise SpecError(f"{path}: {e}")
