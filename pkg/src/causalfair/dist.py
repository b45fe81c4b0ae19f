"""Exact discrete joint distributions and weighted sample sets."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from causalfair.errors import SchemaError, UnknownVariableError, ZeroProbabilityEventError

PROB_FLOOR = 1e-12
NORM_TOL = 1e-9


@dataclass(frozen=True)
class VariableSpec:
    name: str
    cardinality: int = 2

    def __post_init__(self):
        if int(self.cardinality) < 2:
            raise ValueError(f"{self.name}: cardinality must be >= 2")


def _as_specs(variables) -> tuple[VariableSpec, ...]:
    specs = tuple(v if isinstance(v, VariableSpec) else VariableSpec(*v) if isinstance(v, tuple)
                  else VariableSpec(v) for v in variables)
    names = [v.name for v in specs]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate variable names in {names}")
    return specs


class JointTable:
    """Probability table over finite variables, stored row-major.

    The flat ``probs`` vector is read-only; ``array`` is a shaped view of it.
    A table with no variables holds a single unit mass.
    """

    def __init__(self, variables: Iterable[VariableSpec | str], probs):
        self.variables = _as_specs(variables)
        shape = tuple(v.cardinality for v in self.variables)
        flat = np.array(probs, dtype=float).reshape(-1)
        if flat.size != math.prod(shape):
            raise ValueError(f"table has {flat.size} entries, expected {math.prod(shape)}")
        if (flat < 0).any():
            raise ValueError("negative probability")
        total = flat.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        flat.flags.writeable = False
        self.probs = flat
        self._pos = {v.name: i for i, v in enumerate(self.variables)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    @property
    def array(self) -> np.ndarray:
        return self.probs.reshape(self.shape)

    def axis(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def cardinality(self, name: str) -> int:
        return self.variables[self.axis(name)].cardinality

    def states(self):
        """State tuples in row-major order, aligned with ``probs``."""
        return itertools.product(*(range(c) for c in self.shape))

    def prob(self, assignment: Mapping[str, int] | None = None, **kw) -> float:
        """Probability of a (partial) assignment."""
        assignment = {**(assignment or {}), **kw}
        index = [slice(None)] * len(self.variables)
        for name, state in assignment.items():
            index[self.axis(name)] = state
        return float(self.array[tuple(index)].sum())

    def __eq__(self, other):
        if not isinstance(other, JointTable):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.probs, other.probs)

    def allclose(self, other: JointTable, atol=1e-12) -> bool:
        return self.variables == other.variables and np.allclose(self.probs, other.probs, rtol=0, atol=atol)

    def __repr__(self):
        return f"JointTable({list(self.names)}, {self.probs.tolist()})"


def product_table(*tables: JointTable) -> JointTable:
    """Joint of independent tables over disjoint variables."""
    variables, arr = [], np.ones(())
    for t in tables:
        variables.extend(t.variables)
        arr = np.multiply.outer(arr, t.array)
    return JointTable(variables, arr)


def marginalize(joint: JointTable, keep: Sequence[str]) -> JointTable:
    """Sum out every variable not in ``keep``; the result follows ``keep``'s order."""
    keep = list(keep)
    if not keep:
        raise ValueError("keep must be non-empty")
    if len(set(keep)) != len(keep):
        raise ValueError("duplicate names in keep")
    axes = [joint.axis(n) for n in keep]
    drop = tuple(i for i in range(len(joint.variables)) if i not in axes)
    arr = joint.array.sum(axis=drop) if drop else joint.array
    remaining = sorted(axes)
    arr = np.transpose(arr, [remaining.index(a) for a in axes])
    arr = arr / arr.sum()
    return JointTable([joint.variables[a] for a in axes], arr)


def condition(joint: JointTable, assignments: Mapping[str, int]) -> JointTable:
    """Distribution of the unassigned variables given ``assignments``."""
    index = [slice(None)] * len(joint.variables)
    for name, state in assignments.items():
        ax = joint.axis(name)
        if not 0 <= state < joint.variables[ax].cardinality:
            raise ValueError(f"state {state} out of range for {name}")
        index[ax] = state
    sub = joint.array[tuple(index)]
    mass = sub.sum()
    if mass < PROB_FLOOR:
        raise ZeroProbabilityEventError(f"P({dict(assignments)}) = {mass:g} below floor")
    rest = [v for v in joint.variables if v.name not in assignments]
    return JointTable(rest, sub / mass)


def ci_gap(joint: JointTable, x: str, y: str, given: Iterable[str] = ()) -> float:
    """Largest |P(x,y|z) - P(x|z)P(y|z)| over states and non-null contexts z.

    Zero exactly when x is independent of y given ``given``.
    """
    given = list(given)
    if x == y:
        raise ValueError("x and y must differ")
    if x in given or y in given:
        raise ValueError("x and y must not be conditioned on")
    for n in (x, y, *given):
        joint.axis(n)
    m = marginalize(joint, [x, y, *given]).array
    cx, cy = m.shape[:2]
    m = m.reshape(cx, cy, -1)
    worst = 0.0
    for k in range(m.shape[2]):
        block = m[:, :, k]
        pz = block.sum()
        if pz < PROB_FLOOR:
            continue
        block = block / pz
        dev = np.abs(block - np.outer(block.sum(axis=1), block.sum(axis=0))).max()
        worst = max(worst, float(dev))
    return worst


class SampleSet:
    """Weighted observations over finite variables.

    ``counts`` maps state tuples to positive integer weights, kept in sorted
    order so iteration and serialization are deterministic.
    """

    def __init__(self, variables: Iterable[VariableSpec | str], counts: Mapping[tuple, int]):
        self.variables = _as_specs(variables)
        shape = self.shape
        clean = {}
        for state, w in counts.items():
            state = tuple(int(s) for s in state)
            w = int(w)
            if len(state) != len(shape) or any(not 0 <= s < c for s, c in zip(state, shape)):
                raise ValueError(f"state {state} outside cardinalities {shape}")
            if w < 0:
                raise ValueError("negative count")
            if w:
                clean[state] = clean.get(state, 0) + w
        if not clean:
            raise ValueError("sample set must hold at least one observation")
        self.counts = dict(sorted(clean.items()))
        self._pos = {v.name: i for i, v in enumerate(self.variables)}

    @classmethod
    def from_observations(cls, variables, rows) -> SampleSet:
        rows = np.asarray(rows, dtype=np.int64)
        variables = _as_specs(variables)
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise ValueError("observation matrix does not match variables")
        uniq, cnt = np.unique(rows, axis=0, return_counts=True)
        return cls(variables, {tuple(r): int(c) for r, c in zip(uniq.tolist(), cnt.tolist())})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def axis(self, name: str) -> int:
        try:
            return self._pos[name]
        except KeyError:
            raise UnknownVariableError(name) from None

    def observations(self) -> np.ndarray:
        """Expand to an (N, k) matrix, one row per observation, in sorted state order."""
        states = np.array(list(self.counts), dtype=np.int64).reshape(-1, len(self.variables))
        return np.repeat(states, list(self.counts.values()), axis=0)

    def __eq__(self, other):
        if not isinstance(other, SampleSet):
            return NotImplemented
        return self.variables == other.variables and self.counts == other.counts

    def __repr__(self):
        return f"SampleSet({list(self.names)}, n={self.total}, distinct={len(self.counts)})"


def empirical_joint(samples: SampleSet, smoothing: float = 0.0) -> JointTable:
    """(count + smoothing) / (N + smoothing * #states) for every state tuple."""
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    arr = np.zeros(samples.shape)
    for state, w in samples.counts.items():
        arr[state] = w
    arr = (arr + smoothing) / (samples.total + smoothing * arr.size)
    return JointTable(samples.variables, arr)


def sample(joint: JointTable, n: int, seed: int) -> SampleSet:
    """Draw ``n`` i.i.d. state tuples by inverse CDF over the flattened table."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(joint.probs)
    idx = np.searchsorted(cdf, rng.random(n) * cdf[-1], side="right")
    # the last non-empty cell absorbs any rounding tail
    last = int(np.flatnonzero(joint.probs)[-1])
    idx = np.minimum(idx, last)
    counts = np.bincount(idx, minlength=joint.probs.size)
    states = list(joint.states())
    return SampleSet(joint.variables, {states[i]: int(c) for i, c in enumerate(counts) if c})


WEIGHT_COLUMN = "weight"


def read_samples_csv(path: str | Path, cardinalities: Mapping[str, int] | None = None) -> SampleSet:
    """Load a SampleSet from CSV; an optional ``weight`` column aggregates rows.

    Cardinalities default to max observed state + 1 (at least 2).
    """
    cardinalities = dict(cardinalities or {})
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if not header or any(not h for h in header) or len(set(header)) != len(header):
            raise SchemaError(f"{path}: bad header {header}")
        wcol = header.index(WEIGHT_COLUMN) if WEIGHT_COLUMN in header else None
        names = [h for i, h in enumerate(header) if i != wcol]
        if not names:
            raise SchemaError(f"{path}: no variable columns")
        counts: dict[tuple, int] = {}
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                vals = [int(c.strip()) for c in row]
            except ValueError:
                raise SchemaError(f"{path}:{lineno}: non-integer field") from None
            if any(v < 0 for v in vals):
                raise SchemaError(f"{path}:{lineno}: negative value")
            w = vals[wcol] if wcol is not None else 1
            state = tuple(v for i, v in enumerate(vals) if i != wcol)
            counts[state] = counts.get(state, 0) + w
    if not counts or sum(counts.values()) < 1:
        raise SchemaError(f"{path}: no observations")
    specs = []
    for i, name in enumerate(names):
        seen = max(s[i] for s in counts) + 1
        card = cardinalities.get(name, max(2, seen))
        if seen > card:
            raise SchemaError(f"{path}: column {name} has state {seen - 1} >= cardinality {card}")
        specs.append(VariableSpec(name, card))
    return SampleSet(specs, counts)


def write_samples_csv(samples: SampleSet, dest, aggregate: bool = False) -> None:
    """Write one row per observation, or one weighted row per distinct state.

    ``dest`` is a path or an open text stream.
    """
    if hasattr(dest, "write"):
        _write_samples(samples, dest, aggregate)
    else:
        with open(dest, "w", newline="") as fh:
            _write_samples(samples, fh, aggregate)


def _write_samples(samples, fh, aggregate):
    writer = csv.writer(fh, lineterminator="\n")
    if aggregate:
        writer.writerow([*samples.names, WEIGHT_COLUMN])
        for state, w in samples.counts.items():
            writer.writerow([*state, w])
    else:
        writer.writerow(samples.names)
        for state, w in samples.counts.items():
            fh.write((",".join(map(str, state)) + "\n") * w)
