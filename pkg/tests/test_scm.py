import itertools
import json
from importlib import resources

import jsonschema
import numpy as np
import pytest

from causalfair.dist import SampleSet, ci_gap, condition, empirical_joint, marginalize
from causalfair.errors import MissingRoleError, SchemaError, TooLargeError, ZeroProbabilityEventError
from causalfair.fairness import audit, calibration_asymmetry, dp_gap, eo_gap
from causalfair.scm import (
    CorrectionPolicy,
    ScmSpec,
    ScmVariable,
    ancestral_sample,
    apply_label_correction,
    bernoulli_child,
    build_correction_scm,
    corrected_hiring_policy,
    documented_scms,
    exact_joint,
    hiring_scm,
    load_policy,
    load_scm,
    root,
    save_scm,
    sweep_gate,
    train_plugin_classifier,
    verify_modified_equations,
)
from tests.conftest import HIRING, brute_gap, brute_joint

PKG = resources.files("causalfair")


def fair_coin(**gate):
    return CorrectionPolicy(gate={int(k[1:]): v for k, v in gate.items()}, fairness_policy=(0.5, 0.5))


class TestSpec:
    def test_parent_must_precede(self):
        with pytest.raises(ValueError):
            ScmSpec([bernoulli_child("Y", ["A"], [0.5, 0.5]), root("A", [0.5, 0.5])])

    def test_cpd_rows(self):
        with pytest.raises(ValueError):
            ScmSpec([root("A", [0.5, 0.5]), ScmVariable("Y", 2, ("A",), np.array([[0.5, 0.5]]))])
        with pytest.raises(ValueError):
            ScmSpec([root("A", [0.5, 0.6])])

    def test_json_round_trip(self, tmp_path):
        path = tmp_path / "h.json"
        save_scm(hiring_scm(), path)
        again = load_scm(path)
        assert exact_joint(again).allclose(exact_joint(hiring_scm()))

    def test_shipped_file_matches_builder(self):
        scm = load_scm(PKG / "data" / "hiring_scm.json")
        assert exact_joint(scm).allclose(exact_joint(hiring_scm()))

    @pytest.mark.parametrize("doc", [{}, {"variables": [{"name": "A"}]},
                                     {"variables": [{"name": "A", "cardinality": 2, "cpd": [[0.3, 0.3]]}]}])
    def test_bad_documents(self, doc):
        with pytest.raises(SchemaError):
            ScmSpec.from_dict(doc)

    def test_shipped_files_validate(self):
        scm_schema = json.loads((PKG / "schemas" / "scm.schema.json").read_text())
        pol_schema = json.loads((PKG / "schemas" / "correction_policy.schema.json").read_text())
        jsonschema.validate(json.loads((PKG / "data" / "hiring_scm.json").read_text()), scm_schema)
        for name in ("corrected_hiring_policy.json", "equalizing_flip_policy.json", "xor_policy.json"):
            jsonschema.validate(json.loads((PKG / "data" / name).read_text()), pol_schema)


class TestExactJoint:
    def test_hiring(self, hiring_brute):
        names, table = hiring_brute
        j = exact_joint(hiring_scm())
        assert j.names == tuple(names)
        assert np.allclose(j.probs, [table[s] for s in itertools.product((0, 1), repeat=3)], atol=1e-15)
        assert j.prob(Yhat=1) == pytest.approx(0.415, abs=1e-12)
        assert dp_gap(j) == pytest.approx(0.0525, abs=1e-12)

    def test_single_root(self):
        j = exact_joint(ScmSpec([root("A", [0.2, 0.3, 0.5])]))
        assert j.probs.tolist() == [0.2, 0.3, 0.5]

    def test_deterministic_chain(self):
        scm = ScmSpec([root("A", [0, 1]), bernoulli_child("B", ["A"], [1, 0]), bernoulli_child("C", ["B"], [1, 0])])
        j = exact_joint(scm)
        assert j.prob(A=1, B=0, C=1) == 1.0

    def test_non_sorted_parent_order(self):
        # parents listed against topological order still index rows correctly
        scm = ScmSpec([root("A", [0.5, 0.5]), root("B", [0.5, 0.5]),
                       bernoulli_child("C", ["B", "A"], [0.0, 0.0, 1.0, 0.0])])
        j = exact_joint(scm)
        assert j.prob(B=1, A=0, C=1) == pytest.approx(0.25)
        assert j.prob(C=1) == pytest.approx(0.25)

    def test_marginalize_out(self):
        j = exact_joint(hiring_scm(), ["Y"])
        assert j.names == ("A", "Yhat")
        with pytest.raises(MissingRoleError):
            exact_joint(hiring_scm(), ["Q"])

    def test_too_large(self):
        scm = ScmSpec([root(f"V{i}", [0.5, 0.5]) for i in range(21)])
        with pytest.raises(TooLargeError):
            exact_joint(scm)


class TestAncestralSample:
    def test_deterministic_scm(self):
        scm = ScmSpec([root("A", [0, 1]), bernoulli_child("Y", ["A"], [0, 0])])
        assert ancestral_sample(scm, 50, 1).counts == {(1, 0): 50}

    def test_same_seed_same_output(self):
        assert ancestral_sample(hiring_scm(), 5000, 3) == ancestral_sample(hiring_scm(), 5000, 3)

    def test_hiring_matches_exact(self):
        emp = empirical_joint(ancestral_sample(hiring_scm(), 100_000, 7))
        assert np.abs(emp.probs - exact_joint(hiring_scm()).probs).max() < 0.01

    @pytest.mark.parametrize("name", sorted(documented_scms()))
    def test_documented_consistency(self, name):
        scm = documented_scms()[name]
        emp = empirical_joint(ancestral_sample(scm, 100_000, 11))
        assert np.abs(emp.probs - exact_joint(scm).probs).max() < 0.01


def corrected_brute(q0, q1, fallback_by_group):
    """Hand-rolled enumeration of A, C, Y, Yhat for the gated hiring model."""
    a_p, y_p, yh_p = HIRING[0][2], HIRING[1][2], HIRING[2][2]
    yhat = []
    for c, y, a in itertools.product((0, 1), repeat=3):  # row order (C, Y, A)
        yhat.append(yh_p[y] if c else fallback_by_group[a])
    return brute_joint([
        ("A", (), a_p),
        ("C", ("A",), [1 - q0, 1 - q1]),  # P(C=1 | A)
        ("Y", ("A",), y_p),
        ("Yhat", ("C", "Y", "A"), yhat),
    ])


class TestCorrection:
    def test_closed_gate_is_identity(self):
        built = build_correction_scm(hiring_scm(), CorrectionPolicy())
        assert exact_joint(built, ["C"]).allclose(exact_joint(hiring_scm()), atol=1e-12)

    def test_open_gate_gives_noise_prediction(self):
        built = build_correction_scm(hiring_scm(), fair_coin(g0=1.0, g1=1.0))
        j = exact_joint(built, ["C"])
        assert dp_gap(j) < 1e-12 and eo_gap(j) < 1e-12
        assert ci_gap(j, "Yhat", "Y") < 1e-12

    def test_group_fallback_against_brute(self):
        policy = CorrectionPolicy(gate={0: 0.0, 1: 1.0}, fairness_policy={0: [0.5, 0.5], 1: [0.4, 0.6]})
        j = exact_joint(build_correction_scm(hiring_scm(), policy))
        names, table = corrected_brute(0.0, 1.0, [0.5, 0.6])
        assert brute_gap(names, table, "Yhat", "A") == pytest.approx(0.02, abs=1e-12)
        assert brute_gap(names, table, "Yhat", "A", ("Y",)) == pytest.approx(14 / 121, abs=1e-12)
        assert dp_gap(j) == pytest.approx(0.02, abs=1e-12)
        assert eo_gap(j) == pytest.approx(14 / 121, abs=1e-12)
        # disadvantaged predictions no longer track the label
        assert ci_gap(condition(j, {"A": 1}), "Yhat", "Y") < 1e-12

    def test_built_structure(self):
        built = build_correction_scm(hiring_scm(), corrected_hiring_policy())
        assert built["C"].parents == ("A",)
        assert built["Yhat"].parents == ("C", "Y", "A")
        assert built.dag().edges <= {("A", "C"), ("A", "Y"), ("Y", "Yhat"), ("C", "Yhat"), ("A", "Yhat")}

    def test_xor_gate(self):
        built = build_correction_scm(hiring_scm(), CorrectionPolicy(u_c_prob=0.3))
        assert built["C"].parents == ("A", "U_C")
        j = exact_joint(built, ["U_C"])
        assert condition(j, {"A": 1}).prob(C=0) == pytest.approx(0.3)
        assert condition(j, {"A": 0}).prob(C=0) == pytest.approx(0.7)
        same = build_correction_scm(hiring_scm(), CorrectionPolicy(gate={0: 0.7, 1: 0.3}))
        assert exact_joint(same).allclose(j, atol=1e-12)

    def test_missing_role(self):
        scm = ScmSpec([root("A", [0.5, 0.5]), bernoulli_child("Y", ["A"], [0.5, 0.5])])
        with pytest.raises(MissingRoleError):
            build_correction_scm(scm, CorrectionPolicy())


class TestModifiedEquations:
    @pytest.mark.parametrize("q", [0.1, 0.25, 0.5, 1.0])
    def test_group_blind_fallback_satisfies_both(self, q):
        j = exact_joint(build_correction_scm(hiring_scm(), fair_coin(g0=0.0, g1=q)))
        m = verify_modified_equations(j, epsilon=1e-9)
        assert m.dp_given_c0 <= 1e-9 and m.eo_given_yc <= 1e-9 and m.both_hold

    def test_group_dependent_fallback_violates(self):
        policy = CorrectionPolicy(gate={0: 0.5, 1: 0.5}, fairness_policy={0: [0.5, 0.5], 1: [0.2, 0.8]})
        j = exact_joint(build_correction_scm(hiring_scm(), policy))
        names, table = corrected_brute(0.5, 0.5, [0.5, 0.8])
        given_c0 = {s: p for s, p in table.items() if s[names.index("C")] == 0}
        total = sum(given_c0.values())
        oracle = brute_gap(names, {s: p / total for s, p in given_c0.items()}, "Yhat", "A")
        assert oracle == pytest.approx(0.075, abs=1e-12)
        m = verify_modified_equations(j)
        assert m.dp_given_c0 == pytest.approx(0.075, abs=1e-12)
        assert not m.both_hold

    def test_closed_gate_has_no_c0_event(self):
        j = exact_joint(build_correction_scm(hiring_scm(), CorrectionPolicy()))
        with pytest.raises(ZeroProbabilityEventError):
            verify_modified_equations(j)


class TestLabelCorrection:
    def samples(self, n=100_000, seed=7):
        return ancestral_sample(hiring_scm(), n, seed)

    def test_zero_flips_identity(self):
        s = self.samples(2000)
        assert apply_label_correction(s, CorrectionPolicy(), seed=1) == s

    def test_deterministic_flip(self):
        s = self.samples(2000)
        out = apply_label_correction(s, CorrectionPolicy(flip={(1, 0): 1.0}), seed=1)
        assert not any(a == 1 and y == 0 for (a, y, _), _w in out.counts.items())
        assert out.total == s.total

    def test_other_columns_untouched(self):
        s = self.samples(5000)
        out = apply_label_correction(s, CorrectionPolicy(flip={(1, 0): 0.5, (0, 1): 0.2}), seed=9)
        for col in ("A", "Yhat"):
            assert marginalize(empirical_joint(out), [col]).allclose(marginalize(empirical_joint(s), [col]), atol=1e-12)
        ax = s.axis("A"), s.axis("Yhat")
        assert sorted(map(tuple, s.observations()[:, ax].tolist())) == \
            sorted(map(tuple, out.observations()[:, ax].tolist()))

    def test_equalizing_base_rates(self):
        # 0.3 + 0.7 r = 0.6  ->  r = 3/7
        r = (0.6 - 0.3) / 0.7
        assert r == pytest.approx(0.4286, abs=1e-4)
        out = apply_label_correction(self.samples(), CorrectionPolicy(flip={(1, 0): r}), seed=3)
        rate = condition(marginalize(empirical_joint(out), ["A", "Y"]), {"A": 1}).prob(Y=1)
        assert abs(rate - 0.6) < 0.01

    def test_deterministic_per_seed(self):
        s = self.samples(3000)
        pol = CorrectionPolicy(flip={(1, 0): 0.4})
        assert apply_label_correction(s, pol, 5) == apply_label_correction(s, pol, 5)

    def test_missing_role(self):
        with pytest.raises(MissingRoleError):
            apply_label_correction(SampleSet(["A", "Z"], {(0, 0): 1}), CorrectionPolicy(), 0)


class TestPluginClassifier:
    def test_identity(self):
        s = SampleSet(["X", "Y"], {(0, 0): 5, (1, 1): 7})
        clf = train_plugin_classifier(s, ["X"], "Y")
        assert clf.decisions == {(0,): 0, (1,): 1}

    def test_unseen_ties_go_low(self):
        s = SampleSet(["X", "Y"], {(1, 1): 4})
        clf = train_plugin_classifier(s, ["X"], "Y", smoothing=1.0)
        assert clf.predict_one((0,)) == 0

    def test_hiring_erm_by_group(self):
        # P(Y=1|A=0)=0.6 > 0.5, P(Y=1|A=1)=0.3 < 0.5
        clf = train_plugin_classifier(ancestral_sample(hiring_scm(), 100_000, 7), ["A"], "Y")
        assert clf.decisions == {(0,): 1, (1,): 0}

    def test_fair_target_changes_decision(self):
        samples = ancestral_sample(hiring_scm(), 100_000, 7)
        fixed = apply_label_correction(samples, CorrectionPolicy(flip={(1, 0): 0.5}), seed=2)
        clf = train_plugin_classifier(fixed, ["A"], "Y")
        assert clf.decisions == {(0,): 1, (1,): 1}

    def test_infinite_data_limit(self):
        j = exact_joint(hiring_scm())
        weights = {s: int(round(p * 1e6)) for s, p in zip(j.states(), j.probs)}
        clf = train_plugin_classifier(SampleSet(j.variables, weights), ["Y"], "Yhat")
        cpd = hiring_scm()["Yhat"].cpd
        assert clf.decisions == {(y,): int(np.argmax(cpd[y])) for y in (0, 1)}

    def test_as_variable(self):
        s = SampleSet(["X", "Y"], {(0, 1): 3, (1, 0): 3})
        var = train_plugin_classifier(s, ["X"], "Y").as_variable("Yhat", [2], 2)
        assert var.cpd.tolist() == [[0, 1], [1, 0]]

    def test_predict(self):
        s = SampleSet(["X", "Y"], {(0, 0): 2, (1, 1): 1})
        assert train_plugin_classifier(s, ["X"], "Y").predict(s).tolist() == [0, 0, 1]


class TestSweep:
    def test_zero_gate_equals_base(self):
        res = sweep_gate(hiring_scm(), fair_coin(g0=0.0), [0.0])
        base = audit(exact_joint(hiring_scm()))
        r = res.points[0].report
        assert (r.dp_gap, r.eo_gap, r.pp_gap) == pytest.approx((base.dp_gap, base.eo_gap, base.pp_gap), abs=1e-12)

    def test_full_gate_decouples_disadvantaged_slice(self):
        res = sweep_gate(hiring_scm(), fair_coin(g0=0.0), [1.0])
        p = res.points[0]
        assert p.dp_given_c0 <= 1e-9 and p.eo_given_yc <= 1e-9
        j = exact_joint(build_correction_scm(hiring_scm(), fair_coin(g0=0.0, g1=1.0)))
        assert ci_gap(condition(j, {"A": 1}), "Yhat", "Y") <= 1e-9

    def test_dp_non_increasing(self):
        res = sweep_gate(hiring_scm(), fair_coin(g0=0.0), [0, 0.25, 0.5, 0.75, 1])
        dps = [p.report.dp_gap for p in res.points]
        assert all(b <= a + 1e-15 for a, b in zip(dps, dps[1:]))

    def test_csv(self):
        text = sweep_gate(hiring_scm(), fair_coin(g0=0.0), [0, 0.5, 1]).to_csv()
        lines = text.splitlines()
        assert lines[0] == "gate,dp_gap,eo_gap,pp_gap,dp_given_c0,eo_given_yc"
        assert [float(line.split(",")[0]) for line in lines[1:]] == [0, 0.5, 1]
        assert lines[1].split(",")[4] == "nan"

    @pytest.mark.parametrize("grid", [[0.5, 0.5], [1, 0], [0, 1.5]])
    def test_bad_grid(self, grid):
        with pytest.raises(ValueError):
            sweep_gate(hiring_scm(), CorrectionPolicy(), grid)

    def test_xor_template(self):
        res = sweep_gate(hiring_scm(), CorrectionPolicy(u_c_prob=0.0), [0.25, 0.5])
        assert all(p.eo_given_yc <= 1e-12 for p in res.points)


class TestCalibrationAfterCorrection:
    def test_disadvantaged_ppv_drops(self):
        j = exact_joint(build_correction_scm(hiring_scm(), corrected_hiring_policy()))
        r = calibration_asymmetry(j)
        assert r.direction_holds and r.adv_ppv - r.disadv_ppv >= 0.01


class TestPolicy:
    def test_round_trip(self, tmp_path):
        pol = CorrectionPolicy(gate={0: 0.1, 1: 0.9}, fairness_policy={0: [0.3, 0.7], 1: [0.5, 0.5]},
                               flip={(1, 0): 0.25})
        path = tmp_path / "p.json"
        path.write_text(json.dumps(pol.to_dict()))
        assert load_policy(path) == pol

    def test_xor_round_trip(self):
        pol = CorrectionPolicy(u_c_prob=0.4)
        assert CorrectionPolicy.from_dict(pol.to_dict()).to_dict() == pol.to_dict()
        assert pol.gate_prob(1) == 0.4 and pol.gate_prob(0) == pytest.approx(0.6)

    @pytest.mark.parametrize("doc", [
        {"gate": {"0": 1.5}},
        {"gate": {"x": 0.5}},
        {"gate": {"xor": -0.1}},
        {"fairness_policy": [0.5, 0.6]},
        {"flip": {"1": {"0": 2}}},
        {"bogus": 1},
    ])
    def test_invalid(self, doc):
        with pytest.raises(SchemaError):
            CorrectionPolicy.from_dict(doc)
