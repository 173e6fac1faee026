import json

import numpy as np
import pytest

from ormediate import (
    Contrast,
    CovariateProfile,
    Dataset,
    Marginal,
    MediatorParams,
    ModelSpec,
    OutcomeParams,
    SchemaError,
    infer,
    simulate_dataset,
)
from ormediate.io import (
    COEFFICIENT_FORMAT,
    REPORT_FORMAT,
    bind_dataset,
    bundled_fixture_names,
    coefficients_from_doc,
    coefficients_to_doc,
    dataset_columns,
    load_coefficients,
    load_json,
    read_table,
    save_json,
    spec_from_doc,
    spec_to_doc,
    write_table,
)
from helpers import microcredit_params, microcredit_profiles, microcredit_spec


class TestTables:
    def test_round_trip_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(8)
        cols = {
            "y": rng.integers(0, 2, 20).astype(float),
            "x": rng.normal(size=20),
            "weird": np.array([0.1 + 0.2, 1e-17, -3.5e300, 4.0, 0.0] * 4),
        }
        path = tmp_path / "t.csv"
        write_table(path, cols)
        back = read_table(path)
        assert list(back) == ["y", "x", "weird"]
        for name in cols:
            assert np.array_equal(back[name], cols[name])

    def test_header_only_round_trip(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_table(path, {"y": np.array([]), "x": np.array([])})
        assert path.read_text() == "y,x\n"
        back = read_table(path)
        assert back["y"].shape == (0,) and back["x"].shape == (0,)

    def test_read_errors(self, tmp_path):
        with pytest.raises(SchemaError, match="cannot read"):
            read_table(tmp_path / "nope.csv")
        p = tmp_path / "bad.csv"
        p.write_text("")
        with pytest.raises(SchemaError, match="header"):
            read_table(p)
        p.write_text("a,b\n1.0\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_table(p)
        p.write_text("a,b\n1.0,zebra\n")
        with pytest.raises(SchemaError, match="line 2"):
            read_table(p)
        p.write_text("a,a\n1.0,2.0\n")
        with pytest.raises(SchemaError, match="duplicate"):
            read_table(p)
        p.write_text("a,\n1.0,2.0\n")
        with pytest.raises(SchemaError, match="blank"):
            read_table(p)

    def test_write_validation(self, tmp_path):
        with pytest.raises(SchemaError):
            write_table(tmp_path / "x.csv", {})
        with pytest.raises(SchemaError):
            write_table(tmp_path / "x.csv", {"a": np.zeros(3), "b": np.zeros(4)})


class TestBinding:
    def _columns(self):
        return {
            "bank": np.array([0.0, 1.0, 1.0, 0.0]),
            "biz": np.array([1.0, 0.0, 1.0, 0.0]),
            "offer": np.array([1.0, 1.0, 0.0, 0.0]),
            "age": np.array([30.0, 40.0, 50.0, 60.0]),
        }

    def test_binds_by_name(self):
        data = bind_dataset(
            self._columns(), outcome="bank", mediator="biz", exposure="offer",
            covariates=("age",),
        )
        assert isinstance(data, Dataset)
        assert np.array_equal(data.y, [0.0, 1.0, 1.0, 0.0])
        assert np.array_equal(data.covariates["age"], [30.0, 40.0, 50.0, 60.0])

    def test_missing_column_is_named(self):
        with pytest.raises(SchemaError, match="'hours'"):
            bind_dataset(self._columns(), outcome="bank", mediator="biz",
                         exposure="offer", covariates=("hours",))
        with pytest.raises(SchemaError, match="'cash'.*outcome"):
            bind_dataset(self._columns(), outcome="cash", mediator="biz",
                         exposure="offer")

    def test_overlapping_bindings_rejected(self):
        with pytest.raises(SchemaError, match="distinct"):
            bind_dataset(self._columns(), outcome="bank", mediator="bank",
                         exposure="offer")
        with pytest.raises(SchemaError, match="distinct"):
            bind_dataset(self._columns(), outcome="bank", mediator="biz",
                         exposure="offer", covariates=("offer",))

    def test_dataset_columns_inverse(self):
        data = bind_dataset(self._columns(), outcome="bank", mediator="biz",
                            exposure="offer", covariates=("age",))
        cols = dataset_columns(data, outcome="bank", mediator="biz", exposure="offer")
        assert list(cols) == ["bank", "biz", "offer", "age"]
        assert np.array_equal(cols["age"], data.covariates["age"])


class TestSpecDocs:
    def test_round_trip(self):
        spec = ModelSpec(z_names=("a", "b"), v_names=("a", "c"), xz=True, wz=True, xv=True)
        assert spec_from_doc(spec_to_doc(spec)) == spec

    def test_unknown_keys_rejected(self):
        doc = spec_to_doc(ModelSpec())
        doc["extra"] = 1
        with pytest.raises(SchemaError, match="unknown"):
            spec_from_doc(doc)


def _full_coefficient_doc():
    spec = microcredit_spec()
    outcome, mediator = microcredit_params()
    profiles = tuple(
        (f"p{i}", prof) for i, prof in enumerate(microcredit_profiles())
    )
    vo = np.arange(49, dtype=float).reshape(7, 7) / 100.0
    vo = (vo + vo.T) / 2.0
    vm = np.array([[0.04, 0.01], [0.01, 0.09]])
    return coefficients_to_doc(
        spec,
        outcome,
        mediator,
        outcome_vcov=vo,
        mediator_vcov=vm,
        exposure_levels=(1.0, 0.0),
        profiles=profiles,
        exposure_marginal=Marginal("bernoulli", p=0.55),
        covariate_marginals={"age": Marginal("uniform", low=17.0, high=70.0)},
        description="round-trip check",
    )


class TestCoefficientDocs:
    def test_round_trip_through_json(self, tmp_path):
        doc = _full_coefficient_doc()
        path = tmp_path / "c.json"
        save_json(doc, path)
        cs = coefficients_from_doc(load_json(path))
        outcome, mediator = microcredit_params()
        assert cs.spec == microcredit_spec()
        assert cs.outcome == outcome and cs.mediator == mediator
        assert np.array_equal(cs.outcome.active_vector(), outcome.active_vector())
        assert cs.exposure_levels == (1.0, 0.0)
        assert [n for n, _ in cs.profiles] == [f"p{i}" for i in range(6)]
        assert cs.profiles[1][1].z == (37.0, 1.0, 0.0)
        assert cs.exposure_marginal == Marginal("bernoulli", p=0.55)
        assert cs.covariate_marginals["age"] == Marginal("uniform", low=17.0, high=70.0)
        assert cs.has_vcov
        assert cs.outcome_vcov.shape == (7, 7)
        assert cs.description == "round-trip check"

    def test_vcov_floats_survive_exactly(self, tmp_path):
        spec = ModelSpec()
        outcome = OutcomeParams(spec, intercept=0.1 + 0.2, exposure=-1e-17,
                                mediator=3.3333333333333335, exposure_mediator=0.0)
        mediator = MediatorParams(spec, intercept=np.pi, exposure=-np.e)
        vo = np.random.default_rng(3).normal(size=(4, 4))
        vm = np.random.default_rng(4).normal(size=(2, 2))
        doc = coefficients_to_doc(spec, outcome, mediator,
                                  outcome_vcov=vo, mediator_vcov=vm)
        path = tmp_path / "c.json"
        save_json(doc, path)
        cs = coefficients_from_doc(load_json(path))
        assert np.array_equal(cs.outcome.active_vector(), outcome.active_vector())
        assert np.array_equal(cs.outcome_vcov, vo)
        assert np.array_equal(cs.mediator_vcov, vm)

    def test_inactive_block_rejected(self):
        doc = _full_coefficient_doc()
        doc["outcome"]["mediator_confounders"] = [0.0, 0.0, 0.0]
        with pytest.raises(SchemaError, match="inactive"):
            coefficients_from_doc(doc)

    def test_missing_active_block_rejected(self):
        doc = _full_coefficient_doc()
        del doc["outcome"]["confounders"]
        with pytest.raises(SchemaError, match="confounders"):
            coefficients_from_doc(doc)

    def test_wrong_vcov_shape_rejected(self):
        doc = _full_coefficient_doc()
        doc["vcov"]["mediator"] = [[1.0]]
        with pytest.raises(SchemaError, match="2x2"):
            coefficients_from_doc(doc)

    def test_format_and_version_checked(self):
        with pytest.raises(SchemaError, match="format"):
            coefficients_from_doc({"format": "something-else"})
        doc = _full_coefficient_doc()
        doc["version"] = 9
        with pytest.raises(SchemaError, match="version"):
            coefficients_from_doc(doc)

    def test_unknown_top_level_key_rejected(self):
        doc = _full_coefficient_doc()
        doc["surprise"] = True
        with pytest.raises(SchemaError, match="unknown keys"):
            coefficients_from_doc(doc)

    def test_one_sided_vcov_rejected(self):
        spec = ModelSpec()
        outcome = OutcomeParams(spec, intercept=0.0)
        mediator = MediatorParams(spec, intercept=0.0)
        with pytest.raises(SchemaError, match="both models or neither"):
            coefficients_to_doc(spec, outcome, mediator, outcome_vcov=np.eye(4))

    def test_report_wrapper_is_unwrapped(self):
        inner = _full_coefficient_doc()
        report = {"format": REPORT_FORMAT, "coefficients": inner}
        cs = coefficients_from_doc(report)
        assert cs.exposure_levels == (1.0, 0.0)
        with pytest.raises(SchemaError, match="no coefficient section"):
            coefficients_from_doc({"format": REPORT_FORMAT})

    def test_shared_covariate_profile(self):
        spec = ModelSpec(z_names=("a", "b"), v_names=("a",))
        outcome = OutcomeParams(spec, intercept=0.0, confounders=(0.1, 0.2))
        mediator = MediatorParams(spec, intercept=0.0, confounders=(0.3,))
        prof = CovariateProfile(z=(1.5, 2.5), v=(1.5,))
        doc = coefficients_to_doc(spec, outcome, mediator, profiles=(("only", prof),))
        assert doc["profiles"][0]["values"] == {"a": 1.5, "b": 2.5}
        cs = coefficients_from_doc(doc)
        assert cs.profiles[0][1].z == (1.5, 2.5)
        assert cs.profiles[0][1].v == (1.5,)
        conflicted = CovariateProfile(z=(1.5, 2.5), v=(9.0,))
        with pytest.raises(SchemaError, match="shared covariate"):
            coefficients_to_doc(spec, outcome, mediator,
                                profiles=(("bad", conflicted),))

    def test_fitted_models_feed_inference(self):
        spec = ModelSpec()
        outcome = OutcomeParams(spec, intercept=-0.7, exposure=0.9, mediator=0.6,
                                exposure_mediator=0.1)
        mediator = MediatorParams(spec, intercept=0.1, exposure=0.5)
        vo = 0.01 * np.eye(4)
        vm = 0.02 * np.eye(2)
        cs = coefficients_from_doc(
            coefficients_to_doc(spec, outcome, mediator,
                                outcome_vcov=vo, mediator_vcov=vm)
        )
        fy, fw = cs.fitted_models()
        res = infer(spec, fy, fw, Contrast(1.0, 0.0))
        assert res.by_name()["te"].se_log > 0.0

    def test_fitted_models_require_vcov(self):
        cs = load_coefficients("microcredit_table1")
        with pytest.raises(SchemaError, match="covariance"):
            cs.fitted_models()


class TestBundledFixture:
    def test_listing(self):
        assert "microcredit_table1" in bundled_fixture_names()

    def test_contents_match_reference_values(self):
        cs = load_coefficients("microcredit_table1")
        outcome, mediator = microcredit_params()
        assert cs.spec == microcredit_spec()
        assert cs.outcome == outcome
        assert cs.mediator == mediator
        assert cs.exposure_levels == (1.0, 0.0)
        assert not cs.has_vcov
        profiles = [prof for _, prof in cs.profiles]
        assert [p.z for p in profiles] == [p.z for p in microcredit_profiles()]
        assert set(cs.covariate_marginals) == {"age", "edu", "loans"}
        assert cs.exposure_marginal.kind == "bernoulli"
        assert cs.description

    def test_unknown_name_lists_fixtures(self, tmp_path):
        with pytest.raises(SchemaError, match="microcredit_table1"):
            load_coefficients("no_such_fixture")

    def test_path_takes_priority(self, tmp_path):
        doc = _full_coefficient_doc()
        path = tmp_path / "microcredit_table1"
        save_json(doc, path)
        cs = load_coefficients(path)
        assert cs.description == "round-trip check"
