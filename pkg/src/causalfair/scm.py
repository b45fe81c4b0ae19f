"""Discrete structural causal models and the correction-gate mechanism.

Group encoding: ``A=0`` is the advantaged group and ``A=1`` the disadvantaged
one. The correction variable ``C`` gates the prediction: with ``C=1`` it
follows the classifier's CPD given the true label, with ``C=0`` it is drawn
from a fairness fallback distribution.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from causalfair.dist import (
    NORM_TOL,
    JointTable,
    SampleSet,
    VariableSpec,
    ci_gap,
    condition,
    marginalize,
)
from causalfair.errors import MissingRoleError, SchemaError, TooLargeError
from causalfair.fairness import (
    DEFAULT_EPSILON,
    DEFAULT_TAU,
    FairnessTriple,
    MetricReport,
    audit,
)
from causalfair.graph import CausalDag

MAX_STATES = 2 ** 20
GATE = "C"
GATE_NOISE = "U_C"


@dataclass(frozen=True)
class ScmVariable:
    name: str
    cardinality: int
    parents: tuple[str, ...]
    cpd: np.ndarray  # shape (prod(parent cards), cardinality), rows row-major over parents

    @property
    def spec(self) -> VariableSpec:
        return VariableSpec(self.name, self.cardinality)


class ScmSpec:
    """Topologically ordered variables, each with a CPD over its parents."""

    def __init__(self, variables: Sequence[ScmVariable]):
        seen: dict[str, int] = {}
        checked = []
        for v in variables:
            if v.name in seen:
                raise ValueError(f"duplicate variable {v.name!r}")
            for p in v.parents:
                if p not in seen:
                    raise ValueError(f"{v.name}: parent {p!r} must precede it")
            if len(set(v.parents)) != len(v.parents):
                raise ValueError(f"{v.name}: duplicate parents")
            if v.cardinality < 2:
                raise ValueError(f"{v.name}: cardinality must be >= 2")
            rows = math.prod(seen[p] for p in v.parents)
            cpd = np.array(v.cpd, dtype=float)
            if cpd.shape != (rows, v.cardinality):
                raise ValueError(f"{v.name}: CPD needs {rows} rows of {v.cardinality} entries")
            if (cpd < 0).any() or (np.abs(cpd.sum(axis=1) - 1) > NORM_TOL).any():
                raise ValueError(f"{v.name}: CPD rows must be non-negative and sum to 1")
            cpd.flags.writeable = False
            checked.append(ScmVariable(v.name, int(v.cardinality), tuple(v.parents), cpd))
            seen[v.name] = v.cardinality
        self.variables = tuple(checked)
        self._by_name = {v.name: v for v in self.variables}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def __getitem__(self, name: str) -> ScmVariable:
        return self._by_name[name]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def cardinality(self, name: str) -> int:
        return self._by_name[name].cardinality

    def dag(self) -> CausalDag:
        return CausalDag(self.names, [(p, v.name) for v in self.variables for p in v.parents])

    def replace_variable(self, name: str, new: ScmVariable) -> ScmSpec:
        return ScmSpec([new if v.name == name else v for v in self.variables])

    def to_dict(self) -> dict:
        return {"variables": [
            {"name": v.name, "cardinality": v.cardinality, "parents": list(v.parents),
             "cpd": v.cpd.tolist()} for v in self.variables]}

    @classmethod
    def from_dict(cls, doc: Mapping) -> ScmSpec:
        try:
            raw = doc["variables"]
            variables = [ScmVariable(str(v["name"]), int(v["cardinality"]), tuple(v.get("parents", [])),
                                     np.array(v["cpd"], dtype=float)) for v in raw]
            return cls(variables)
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"invalid SCM document: {exc}") from exc


def load_scm(path: str | Path) -> ScmSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return ScmSpec.from_dict(doc)


def save_scm(scm: ScmSpec, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scm.to_dict(), indent=2) + "\n")


def root(name: str, probs: Sequence[float]) -> ScmVariable:
    return ScmVariable(name, len(probs), (), np.array([probs], dtype=float))


def bernoulli_child(name: str, parents: Sequence[str], p_one: Sequence[float]) -> ScmVariable:
    """Binary variable with P(name=1 | parent row r) = p_one[r]."""
    cpd = np.array([[1 - p, p] for p in p_one])
    return ScmVariable(name, 2, tuple(parents), cpd)


def hiring_scm() -> ScmSpec:
    """Running example: A ~ Bern(0.5), Y | A, Yhat | Y.

    P(Y=1|A=0)=0.6, P(Y=1|A=1)=0.3, P(Yhat=1|Y=1)=0.8, P(Yhat=1|Y=0)=0.1.
    """
    return ScmSpec([
        root("A", [0.5, 0.5]),
        bernoulli_child("Y", ["A"], [0.6, 0.3]),
        bernoulli_child("Yhat", ["Y"], [0.1, 0.8]),
    ])


def random_binary_scm(dag: CausalDag, rng: np.random.Generator, low=0.05, high=0.95) -> ScmSpec:
    """Binary SCM over ``dag`` with every P(v=1 | parents) drawn uniformly from (low, high)."""
    variables = []
    for name in dag.topological_order():
        parents = tuple(sorted(dag.parents(name)))
        p = rng.uniform(low, high, size=2 ** len(parents))
        variables.append(bernoulli_child(name, parents, p))
    return ScmSpec(variables)


def _axis_broadcast(arr: np.ndarray, axes: list[int], ndim: int) -> np.ndarray:
    """Lay ``arr`` (whose dims correspond to ``axes``) over an ndim grid with singleton dims elsewhere."""
    order = np.argsort(axes)
    arr = np.transpose(arr, order)
    shape = [1] * ndim
    for ax, size in zip(sorted(axes), arr.shape):
        shape[ax] = size
    return arr.reshape(shape)


def exact_joint(scm: ScmSpec, marginalize_out: Sequence[str] = ()) -> JointTable:
    """Product of CPDs over the full state space, with ``marginalize_out`` summed away."""
    cards = [v.cardinality for v in scm.variables]
    if math.prod(cards) > MAX_STATES:
        raise TooLargeError(f"state space {math.prod(cards)} exceeds {MAX_STATES}")
    pos = {v.name: i for i, v in enumerate(scm.variables)}
    for n in marginalize_out:
        if n not in pos:
            raise MissingRoleError(n)
    joint = np.ones(cards)
    for v in scm.variables:
        axes = [pos[p] for p in v.parents] + [pos[v.name]]
        cpd = v.cpd.reshape([scm.cardinality(p) for p in v.parents] + [v.cardinality])
        joint = joint * _axis_broadcast(cpd, axes, len(cards))
    specs = [v.spec for v in scm.variables]
    table = JointTable(specs, joint)
    keep = [v.name for v in scm.variables if v.name not in set(marginalize_out)]
    if len(keep) == len(specs):
        return table
    return marginalize(table, keep)


def _parent_row(scm: ScmSpec, v: ScmVariable, columns: dict[str, np.ndarray], n: int) -> np.ndarray:
    row = np.zeros(n, dtype=np.int64)
    for p in v.parents:
        row = row * scm.cardinality(p) + columns[p]
    return row


def ancestral_sample(scm: ScmSpec, n: int, seed: int) -> SampleSet:
    """Draw each variable in order from its CPD row given the sampled parents."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    u = rng.random((len(scm.variables), n))
    columns: dict[str, np.ndarray] = {}
    for k, v in enumerate(scm.variables):
        rows = _parent_row(scm, v, columns, n)
        cdf = np.cumsum(v.cpd, axis=1)[rows]
        draw = (u[k][:, None] * cdf[:, -1:] >= cdf).sum(axis=1)
        # zero-probability tail states are never chosen, even under rounding
        last = v.cardinality - 1 - np.argmax(v.cpd[:, ::-1] > 0, axis=1)
        columns[v.name] = np.minimum(draw, last[rows])
    obs = np.column_stack([columns[v.name] for v in scm.variables])
    return SampleSet.from_observations([v.spec for v in scm.variables], obs)


def documented_scms() -> dict[str, ScmSpec]:
    """The SCMs used as running examples in docs and consistency tests."""
    base = hiring_scm()
    return {
        "hiring": base,
        "hiring_corrected": build_correction_scm(base, corrected_hiring_policy()),
        "hiring_gate_full": build_correction_scm(base, CorrectionPolicy(gate={0: 0.0, 1: 1.0})),
        "hiring_xor": build_correction_scm(base, CorrectionPolicy(u_c_prob=0.25)),
    }


def _group_map(raw, name: str) -> dict[int, object]:
    if not isinstance(raw, Mapping):
        raise SchemaError(f"{name} must be an object keyed by group")
    try:
        return {int(k): v for k, v in raw.items()}
    except ValueError as exc:
        raise SchemaError(f"{name}: group keys must be integers") from exc


def _check_prob(p, what: str) -> float:
    try:
        p = float(p)
    except (TypeError, ValueError):
        raise SchemaError(f"{what} must be a number") from None
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise SchemaError(f"{what} = {p} outside [0, 1]")
    return p


def _check_dist(d, what: str) -> tuple[float, ...]:
    if not isinstance(d, (list, tuple)) or len(d) < 2:
        raise SchemaError(f"{what} must be a list of >= 2 probabilities")
    d = tuple(_check_prob(p, what) for p in d)
    if abs(sum(d) - 1) > NORM_TOL:
        raise SchemaError(f"{what} must sum to 1")
    return d


@dataclass(frozen=True)
class CorrectionPolicy:
    """Gate, fallback and label-flip settings.

    ``gate`` maps group -> P(C=0 | A=group). When ``u_c_prob`` is set instead,
    the gate is C = A xor U_C with P(U_C=1) = u_c_prob, so the disadvantaged
    group is blocked with probability u_c_prob and the advantaged group with
    1 - u_c_prob. ``fairness_policy`` is either one distribution over
    prediction states or a per-group mapping of them. ``flip`` maps
    (group, label) -> probability that label correction flips the label.
    """

    gate: Mapping[int, float] = field(default_factory=lambda: {0: 0.0, 1: 0.0})
    fairness_policy: Sequence[float] | Mapping[int, Sequence[float]] = (0.5, 0.5)
    flip: Mapping[tuple[int, int], float] = field(default_factory=dict)
    u_c_prob: float | None = None

    def __post_init__(self):
        if self.u_c_prob is not None:
            _check_prob(self.u_c_prob, "u_c_prob")
        gate = {int(k): _check_prob(v, f"gate[{k}]") for k, v in self.gate.items()}
        object.__setattr__(self, "gate", gate)
        if isinstance(self.fairness_policy, Mapping):
            fp = {int(k): _check_dist(v, f"fairness_policy[{k}]") for k, v in self.fairness_policy.items()}
        else:
            fp = _check_dist(self.fairness_policy, "fairness_policy")
        object.__setattr__(self, "fairness_policy", fp)
        flip = {(int(a), int(y)): _check_prob(p, f"flip[{a},{y}]") for (a, y), p in self.flip.items()}
        object.__setattr__(self, "flip", flip)

    @property
    def xor(self) -> bool:
        return self.u_c_prob is not None

    @property
    def group_independent_fallback(self) -> bool:
        return not isinstance(self.fairness_policy, Mapping)

    def gate_prob(self, group: int) -> float:
        """P(C=0 | A=group)."""
        if self.xor:
            return self.u_c_prob if group % 2 else 1.0 - self.u_c_prob
        return self.gate.get(group, 0.0)

    def fallback(self, group: int) -> tuple[float, ...]:
        if self.group_independent_fallback:
            return self.fairness_policy
        try:
            return self.fairness_policy[group]
        except KeyError:
            raise SchemaError(f"fairness_policy has no entry for group {group}") from None

    def with_disadvantaged_gate(self, q: float, group: int = 1) -> CorrectionPolicy:
        if self.xor:
            return replace(self, u_c_prob=q)
        return replace(self, gate={**self.gate, group: q})

    def to_dict(self) -> dict:
        gate = {"xor": self.u_c_prob} if self.xor else {str(k): v for k, v in sorted(self.gate.items())}
        fp = (list(self.fairness_policy) if self.group_independent_fallback
              else {str(k): list(v) for k, v in sorted(self.fairness_policy.items())})
        flip: dict[str, dict[str, float]] = {}
        for (a, y), p in sorted(self.flip.items()):
            flip.setdefault(str(a), {})[str(y)] = p
        return {"gate": gate, "fairness_policy": fp, "flip": flip}

    @classmethod
    def from_dict(cls, doc: Mapping) -> CorrectionPolicy:
        if not isinstance(doc, Mapping):
            raise SchemaError("policy must be a JSON object")
        unknown = set(doc) - {"gate", "fairness_policy", "flip"}
        if unknown:
            raise SchemaError(f"unknown policy fields {sorted(unknown)}")
        gate_doc = doc.get("gate", {})
        u_c = None
        if isinstance(gate_doc, Mapping) and "xor" in gate_doc:
            if len(gate_doc) != 1:
                raise SchemaError("xor gate takes no per-group entries")
            u_c = _check_prob(gate_doc["xor"], "gate.xor")
            gate = {}
        else:
            gate = _group_map(gate_doc, "gate")
        fp = doc.get("fairness_policy", [0.5, 0.5])
        if isinstance(fp, Mapping):
            fp = _group_map(fp, "fairness_policy")
        flip = {}
        for a, inner in _group_map(doc.get("flip", {}), "flip").items():
            for y, p in _group_map(inner, f"flip[{a}]").items():
                flip[(a, y)] = p
        return cls(gate=gate, fairness_policy=fp, flip=flip, u_c_prob=u_c)


def load_policy(path: str | Path) -> CorrectionPolicy:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: {exc}") from exc
    return CorrectionPolicy.from_dict(doc)


def corrected_hiring_policy() -> CorrectionPolicy:
    """Documented correction: half of disadvantaged predictions come from a fair coin."""
    return CorrectionPolicy(gate={0: 0.0, 1: 0.5}, fairness_policy=(0.5, 0.5))


def build_correction_scm(base: ScmSpec, policy: CorrectionPolicy,
                         triple: FairnessTriple = FairnessTriple()) -> ScmSpec:
    """Insert the gate C between the classifier and the prediction.

    The prediction gets parents (C, <classifier parents>, A); its C=1 rows copy
    the base CPD and its C=0 rows hold the fallback for the row's group.
    """
    a, y, yh = triple.sensitive, triple.truth, triple.prediction
    for role in (a, y, yh):
        if role not in base:
            raise MissingRoleError(role)
    for name in (GATE, GATE_NOISE):
        if name in base:
            raise ValueError(f"base SCM already has a variable named {name!r}")
    pred = base[yh]
    if y not in pred.parents:
        raise ValueError(f"{yh} must have {y} among its parents")
    n_groups = base.cardinality(a)
    if policy.xor and n_groups != 2:
        raise ValueError("xor gate needs a binary sensitive attribute")

    gate_vars = []
    if policy.xor:
        p = policy.u_c_prob
        gate_vars.append(root(GATE_NOISE, [1 - p, p]))
        # C = A xor U_C; rows ordered (A, U_C)
        gate_vars.append(ScmVariable(GATE, 2, (a, GATE_NOISE),
                                     np.array([[1, 0], [0, 1], [0, 1], [1, 0]], dtype=float)))
    else:
        rows = [[q, 1 - q] for q in (policy.gate_prob(g) for g in range(n_groups))]
        gate_vars.append(ScmVariable(GATE, 2, (a,), np.array(rows)))

    cls_parents = pred.parents
    new_parents = (GATE, *cls_parents) + (() if a in cls_parents else (a,))
    cards = [2] + [base.cardinality(p) for p in new_parents[1:]]
    a_pos = new_parents.index(a)
    cls_cards = [base.cardinality(p) for p in cls_parents]
    cpd = np.empty((math.prod(cards), pred.cardinality))
    for r, state in enumerate(np.ndindex(*cards)):
        if state[0] == 1:
            idx = 0
            for s, c in zip(state[1:1 + len(cls_parents)], cls_cards):
                idx = idx * c + s
            cpd[r] = pred.cpd[idx]
        else:
            fallback = policy.fallback(state[a_pos])
            if len(fallback) != pred.cardinality:
                raise SchemaError(f"fairness_policy needs {pred.cardinality} entries")
            cpd[r] = fallback
    new_pred = ScmVariable(yh, pred.cardinality, new_parents, cpd)

    # the gate goes right after A so every parent still precedes its child
    out = [v for v in base.variables if v.name != yh]
    pos = next(i for i, v in enumerate(out) if v.name == a) + 1
    out[pos:pos] = gate_vars
    # prediction goes right after its latest parent
    last = max(i for i, v in enumerate(out) if v.name in new_parents)
    out.insert(last + 1, new_pred)
    return ScmSpec(out)


def apply_label_correction(samples: SampleSet, policy: CorrectionPolicy, seed: int,
                           triple: FairnessTriple = FairnessTriple()) -> SampleSet:
    """Flip each observation's binary label with probability flip[(group, label)].

    Observations are visited in sorted-state order; observation i consumes the
    i-th uniform draw of a generator seeded with ``seed``.
    """
    a, y = triple.sensitive, triple.truth
    for role in (a, y):
        if role not in samples.names:
            raise MissingRoleError(role)
    ya, aa = samples.axis(y), samples.axis(a)
    if samples.shape[ya] != 2:
        raise ValueError("label correction needs a binary label")
    obs = samples.observations()
    rng = np.random.default_rng(seed)
    u = rng.random(len(obs))
    probs = np.array([policy.flip.get((int(g), int(lbl)), 0.0) for g, lbl in zip(obs[:, aa], obs[:, ya])])
    flipped = obs.copy()
    hit = u < probs
    flipped[hit, ya] = 1 - flipped[hit, ya]
    return SampleSet.from_observations(samples.variables, flipped)


@dataclass(frozen=True)
class PluginClassifier:
    features: tuple[str, ...]
    target: str
    decisions: dict[tuple[int, ...], int]
    smoothing: float

    def predict_one(self, state: Sequence[int]) -> int:
        return self.decisions[tuple(int(s) for s in state)]

    def predict(self, samples: SampleSet) -> np.ndarray:
        """Predictions for every observation of ``samples`` (sorted-state order)."""
        obs = samples.observations()[:, [samples.axis(f) for f in self.features]]
        return np.array([self.decisions[tuple(r)] for r in obs.tolist()], dtype=np.int64)

    def as_variable(self, name: str, feature_cards: Sequence[int], target_card: int) -> ScmVariable:
        """Deterministic CPD realizing the decision table, for use inside an SCM."""
        rows = []
        for state in np.ndindex(*feature_cards):
            row = [0.0] * target_card
            row[self.decisions[tuple(state)]] = 1.0
            rows.append(row)
        return ScmVariable(name, target_card, self.features, np.array(rows))


def train_plugin_classifier(samples: SampleSet, features: Sequence[str], target: str,
                            smoothing: float = 0.0) -> PluginClassifier:
    """Empirical-risk minimizer over a finite feature space: per-cell majority vote.

    Ties, including unseen cells, go to the lowest target state.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be >= 0")
    for n in (*features, target):
        if n not in samples.names:
            raise MissingRoleError(n)
    f_axes = [samples.axis(f) for f in features]
    t_axis = samples.axis(target)
    f_cards = [samples.shape[i] for i in f_axes]
    counts = np.zeros(f_cards + [samples.shape[t_axis]])
    for state, w in samples.counts.items():
        counts[tuple(state[i] for i in f_axes) + (state[t_axis],)] += w
    counts += smoothing
    decisions = {}
    for cell in np.ndindex(*f_cards):
        decisions[tuple(int(c) for c in cell)] = int(np.argmax(counts[cell]))
    return PluginClassifier(tuple(features), target, decisions, smoothing)


@dataclass(frozen=True)
class ModifiedEquations:
    dp_given_c0: float
    eo_given_yc: float
    epsilon: float

    @property
    def both_hold(self) -> bool:
        return self.dp_given_c0 <= self.epsilon and self.eo_given_yc <= self.epsilon


def verify_modified_equations(joint: JointTable, triple: FairnessTriple = FairnessTriple(),
                              epsilon: float = DEFAULT_EPSILON, gate: str = GATE) -> ModifiedEquations:
    """Check Yhat _|_ A given C=0 and Yhat _|_ A given (Y, C)."""
    joint.axis(gate)
    off = condition(joint, {gate: 0})
    return ModifiedEquations(
        dp_given_c0=ci_gap(off, triple.prediction, triple.sensitive),
        eo_given_yc=ci_gap(joint, triple.prediction, triple.sensitive, [triple.truth, gate]),
        epsilon=epsilon,
    )


@dataclass(frozen=True)
class SweepPoint:
    gate: float
    report: MetricReport
    dp_given_c0: float  # nan when C=0 has zero probability
    eo_given_yc: float


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]

    SWEEP_COLUMNS = ("gate", "dp_gap", "eo_gap", "pp_gap", "dp_given_c0", "eo_given_yc")

    def rows(self) -> list[tuple[float, ...]]:
        return [(p.gate, p.report.dp_gap, p.report.eo_gap, p.report.pp_gap, p.dp_given_c0, p.eo_given_yc)
                for p in self.points]

    def to_csv(self) -> str:
        lines = [",".join(self.SWEEP_COLUMNS)]
        for row in self.rows():
            lines.append(",".join("nan" if math.isnan(v) else f"{v:.6f}" for v in row))
        return "\n".join(lines) + "\n"


def sweep_gate(base: ScmSpec, policy_template: CorrectionPolicy, gate_values: Sequence[float],
               epsilon: float = DEFAULT_EPSILON, tau: float = DEFAULT_TAU,
               triple: FairnessTriple = FairnessTriple(), disadvantaged: int = 1) -> SweepResult:
    """Exact metrics as the disadvantaged group's blocking probability varies.

    For an xor template the swept value is P(U_C=1), which also fixes the
    advantaged rate at 1 - value.
    """
    values = [float(q) for q in gate_values]
    if any(not 0 <= q <= 1 for q in values):
        raise ValueError("gate values must lie in [0, 1]")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("gate values must be strictly increasing")
    points = []
    for q in values:
        policy = policy_template.with_disadvantaged_gate(q, disadvantaged)
        scm = build_correction_scm(base, policy, triple)
        latent = [GATE_NOISE] if policy.xor else []
        joint = exact_joint(scm, latent)
        report = audit(joint, triple, epsilon, tau)
        if joint.prob({GATE: 0}) >= 1e-12:
            mod = verify_modified_equations(joint, triple, epsilon)
            dp_c0, eo_yc = mod.dp_given_c0, mod.eo_given_yc
        else:
            dp_c0 = float("nan")
            eo_yc = ci_gap(joint, triple.prediction, triple.sensitive, [triple.truth, GATE])
        points.append(SweepPoint(q, report, dp_c0, eo_yc))
    return SweepResult(tuple(points))
