"""Group fairness metrics, their preconditions and the impossibility scan.

Conventions used throughout:

* demographic parity:  Yhat _|_ A
* equalized odds:      Yhat _|_ A | Y
* predictive parity:   Y _|_ A | Yhat

Each gap is the L-inf distance of the relevant (conditional) table from
independence, so a metric is satisfied at tolerance ``eps`` iff its gap <= eps.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator

from causalfair import kernels
from causalfair.dist import (
    JointTable,
    SampleSet,
    ci_gap,
    condition,
    empirical_joint,
    marginalize,
)
from causalfair.errors import UnknownVariableError
from causalfair.graph import CausalDag, d_separated

DEFAULT_EPSILON = 0.01
DEFAULT_TAU = 0.05
METRICS = ("dp", "eo", "pp")
SCAN_ORDER = ("A", "Y", "Yhat")


@dataclass(frozen=True)
class FairnessTriple:
    sensitive: str = "A"
    truth: str = "Y"
    prediction: str = "Yhat"

    def __post_init__(self):
        if len({self.sensitive, self.truth, self.prediction}) != 3:
            raise ValueError("sensitive, truth and prediction must be distinct")

    def check(self, names) -> None:
        for n in (self.sensitive, self.truth, self.prediction):
            if n not in names:
                raise UnknownVariableError(n)


def dp_gap(joint: JointTable, triple: FairnessTriple = FairnessTriple()) -> float:
    triple.check(joint.names)
    return ci_gap(joint, triple.prediction, triple.sensitive)


def eo_gap(joint: JointTable, triple: FairnessTriple = FairnessTriple()) -> float:
    triple.check(joint.names)
    return ci_gap(joint, triple.prediction, triple.sensitive, [triple.truth])


def pp_gap(joint: JointTable, triple: FairnessTriple = FairnessTriple()) -> float:
    triple.check(joint.names)
    return ci_gap(joint, triple.truth, triple.sensitive, [triple.prediction])


def calibration_dep(joint: JointTable, triple: FairnessTriple = FairnessTriple()) -> float:
    return ci_gap(joint, triple.truth, triple.prediction)


def bias_dep(joint: JointTable, triple: FairnessTriple = FairnessTriple()) -> float:
    return ci_gap(joint, triple.sensitive, triple.truth)


def check_preconditions(joint: JointTable, triple: FairnessTriple = FairnessTriple(),
                        tau: float = DEFAULT_TAU) -> bool:
    """Prediction tracks the label and the label depends on the group, both by at least tau."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    triple.check(joint.names)
    return calibration_dep(joint, triple) >= tau and bias_dep(joint, triple) >= tau


def _fmt(x: float, digits: int = 6) -> str:
    if isinstance(x, float) and math.isnan(x):
        return "null"
    return f"{x:.{digits}f}"


def dumps_fixed(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to six decimal places."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_fixed(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps_fixed(v) for v in obj) + "]"
        items = [pad + dumps_fixed(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


@dataclass(frozen=True)
class MetricReport:
    dp_gap: float
    eo_gap: float
    pp_gap: float
    calibration_dep: float
    bias_dep: float
    epsilon: float
    tau: float

    @property
    def satisfied(self) -> dict[str, bool]:
        return {
            "dp": self.dp_gap <= self.epsilon,
            "eo": self.eo_gap <= self.epsilon,
            "pp": self.pp_gap <= self.epsilon,
        }

    @property
    def preconditions_met(self) -> bool:
        return self.calibration_dep >= self.tau and self.bias_dep >= self.tau

    def gaps(self) -> dict[str, float]:
        return {"dp": self.dp_gap, "eo": self.eo_gap, "pp": self.pp_gap}

    def to_dict(self) -> dict:
        return {
            "dp_gap": self.dp_gap,
            "eo_gap": self.eo_gap,
            "pp_gap": self.pp_gap,
            "calibration_dep": self.calibration_dep,
            "bias_dep": self.bias_dep,
            "satisfied": self.satisfied,
            "preconditions_met": self.preconditions_met,
            "epsilon": self.epsilon,
            "tau": self.tau,
        }

    def to_json(self) -> str:
        return dumps_fixed(self.to_dict()) + "\n"


def audit(data: JointTable | SampleSet, triple: FairnessTriple = FairnessTriple(),
          epsilon: float = DEFAULT_EPSILON, tau: float = DEFAULT_TAU,
          smoothing: float = 0.0) -> MetricReport:
    """Compute every gap; sample sets are first turned into an empirical joint."""
    if epsilon <= 0 or tau <= 0:
        raise ValueError("epsilon and tau must be positive")
    joint = empirical_joint(data, smoothing) if isinstance(data, SampleSet) else data
    triple.check(joint.names)
    return MetricReport(
        dp_gap=dp_gap(joint, triple),
        eo_gap=eo_gap(joint, triple),
        pp_gap=pp_gap(joint, triple),
        calibration_dep=calibration_dep(joint, triple),
        bias_dep=bias_dep(joint, triple),
        epsilon=epsilon,
        tau=tau,
    )


@dataclass(frozen=True)
class GraphVerdict:
    dp_implied: bool
    eo_implied: bool
    pp_implied: bool
    calibration_possible: bool
    bias_possible: bool

    def implied(self) -> tuple[str, ...]:
        return tuple(m for m, flag in zip(METRICS, (self.dp_implied, self.eo_implied, self.pp_implied)) if flag)


def graph_metric_verdicts(dag: CausalDag, triple: FairnessTriple = FairnessTriple()) -> GraphVerdict:
    """Which metrics every distribution faithful to ``dag`` satisfies."""
    a, y, yh = triple.sensitive, triple.truth, triple.prediction
    return GraphVerdict(
        dp_implied=d_separated(dag, yh, a),
        eo_implied=d_separated(dag, yh, a, [y]),
        pp_implied=d_separated(dag, y, a, [yh]),
        calibration_possible=not d_separated(dag, y, yh),
        bias_possible=not d_separated(dag, a, y),
    )


@dataclass(frozen=True)
class CalibrationAsymmetry:
    adv_ppv: float
    disadv_ppv: float

    @property
    def direction_holds(self) -> bool:
        return self.adv_ppv > self.disadv_ppv


def calibration_asymmetry(joint: JointTable, triple: FairnessTriple = FairnessTriple(),
                          value: int = 1, advantaged: int = 0,
                          disadvantaged: int = 1) -> CalibrationAsymmetry:
    """P(Y=v | Yhat=v, A=g) for the advantaged and disadvantaged group.

    Groups default to A=0 advantaged, A=1 disadvantaged.
    """
    triple.check(joint.names)
    a, y, yh = triple.sensitive, triple.truth, triple.prediction
    sub = marginalize(joint, [a, y, yh])

    def ppv(group):
        return condition(sub, {yh: value, a: group}).prob({y: value})

    return CalibrationAsymmetry(adv_ppv=ppv(advantaged), disadv_ppv=ppv(disadvantaged))


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """Non-negative integer vectors of length ``parts`` summing to ``total``, lexicographic."""
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first, *rest)


def grid_table(counts, resolution: int, names=SCAN_ORDER) -> JointTable:
    """Binary (A, Y, Yhat) table whose entries are ``counts / resolution``."""
    return JointTable(list(names), [c / resolution for c in counts])


@dataclass
class ImpossibilityVerdict:
    grid_resolution: int
    epsilon: float
    tau: float
    tested: int
    precondition_passing: int
    witnesses: list[tuple[int, ...]] = field(default_factory=list)
    trivial_witnesses: list[tuple[int, ...]] = field(default_factory=list)
    exempt_perfect_prediction: bool = True
    perfect_prediction_exempted: int = 0

    @property
    def multi_satisfying(self) -> int:
        return len(self.witnesses)

    def witness_tables(self) -> list[JointTable]:
        return [grid_table(w, self.grid_resolution) for w in self.witnesses]

    def merge(self, other: ImpossibilityVerdict) -> ImpossibilityVerdict:
        """Combine partial scans over disjoint parts of the same grid."""
        if (self.grid_resolution, self.epsilon, self.tau, self.exempt_perfect_prediction) != (
                other.grid_resolution, other.epsilon, other.tau, other.exempt_perfect_prediction):
            raise ValueError("cannot merge scans with different settings")
        return ImpossibilityVerdict(
            grid_resolution=self.grid_resolution,
            epsilon=self.epsilon,
            tau=self.tau,
            tested=self.tested + other.tested,
            precondition_passing=self.precondition_passing + other.precondition_passing,
            witnesses=sorted(self.witnesses + other.witnesses),
            trivial_witnesses=sorted(self.trivial_witnesses + other.trivial_witnesses),
            exempt_perfect_prediction=self.exempt_perfect_prediction,
            perfect_prediction_exempted=self.perfect_prediction_exempted + other.perfect_prediction_exempted,
        )

    def to_dict(self) -> dict:
        out = asdict(self)
        out["multi_satisfying"] = self.multi_satisfying
        out["table_order"] = list(SCAN_ORDER)
        out["witnesses"] = [list(w) for w in self.witnesses]
        out["trivial_witnesses"] = [list(w) for w in self.trivial_witnesses]
        keys = ["grid_resolution", "epsilon", "tau", "tested", "precondition_passing",
                "multi_satisfying", "exempt_perfect_prediction", "perfect_prediction_exempted",
                "table_order", "witnesses", "trivial_witnesses"]
        return {k: out[k] for k in keys}

    def to_json(self) -> str:
        return dumps_fixed(self.to_dict()) + "\n"


def impossibility_scan(resolution: int = 20, epsilon: float = 1e-6, tau: float = DEFAULT_TAU,
                       exempt_perfect_prediction: bool = True, backend=None) -> ImpossibilityVerdict:
    """Test every binary (A, Y, Yhat) table on the 1/resolution simplex grid.

    A grid point is a witness against the theorem when it passes the
    preconditions yet satisfies two or more metrics. Points satisfying two or
    more metrics while failing a precondition are recorded as trivial, as are
    (by default) perfect predictors, where Y and Yhat determine each other.
    Counts are integers, so zero gaps are detected exactly.
    """
    if resolution < 10:
        raise ValueError("resolution must be >= 10")
    if not epsilon < tau / 2:
        raise ValueError("epsilon must be below tau / 2")
    tested, passing, witnesses, trivial, exempted = kernels.scan_binary(
        resolution, epsilon, tau, exempt_perfect_prediction, backend=backend)
    return ImpossibilityVerdict(
        grid_resolution=resolution,
        epsilon=epsilon,
        tau=tau,
        tested=tested,
        precondition_passing=passing,
        witnesses=[tuple(w) for w in witnesses],
        trivial_witnesses=[tuple(w) for w in trivial],
        exempt_perfect_prediction=exempt_perfect_prediction,
        perfect_prediction_exempted=exempted,
    )
