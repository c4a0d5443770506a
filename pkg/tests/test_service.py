"""HTTP service: happy paths, error mapping, strict schemas."""

import math

import pytest
from fastapi.testclient import TestClient

from mklalign import __version__
from mklalign.service import create_app


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def synthetic_dataset(task="classification", **params):
    if task == "classification":
        gen, defaults = "gaussian_classes", {"m": 48, "dim": 2, "separation": 2.0}
    else:
        gen, defaults = "linear_regression", {"m": 48, "dim": 3, "noise": 0.2}
    defaults.update(params)
    return {
        "source": {"kind": "synthetic", "generator": gen, "params": defaults, "seed": 1},
        "task": task,
    }


def gaussian_bank(g0=-1, g1=1, **kw):
    body = {"family": {"kind": "gaussian_grid", "gamma0": g0, "gamma1": g1}}
    body.update(kw)
    return body


class TestHealth:
    def test_health(self, client):
        r = client.get("/health")
        assert r.status_code == 200
        body = r.json()
        assert body["status"] == "ok"
        assert body["version"] == __version__


class TestWeights:
    def post(self, client, **overrides):
        payload = {
            "dataset": synthetic_dataset(),
            "bank": gaussian_bank(),
            "method": "align",
        }
        payload.update(overrides)
        return client.post("/weights", json=payload)

    def test_two_stage_methods(self, client):
        for method in ("unif", "align", "alignf"):
            r = self.post(client, method=method)
            assert r.status_code == 200, r.text
            body = r.json()
            assert body["method"] == method
            assert body["num_kernels"] == 3
            assert len(body["mu"]) == 3
            assert all(v >= 0.0 for v in body["mu"])
            assert body["objectives"] is None
            assert 0.0 <= body["train_alignment"] <= 1.0
        assert self.post(client, method="alignf").json()["norm_kind"] == "l2"

    def test_lq_requires_exponent(self, client):
        r = self.post(client, method="lq")
        assert r.status_code == 422
        assert r.json()["error"]["kind"] == "data"
        assert self.post(client, method="lq", q=2.0).status_code == 200

    def test_learner_methods_report_objectives(self, client):
        r = self.post(client, method="l1svm", C=1.0, Lambda=1.0)
        assert r.status_code == 200, r.text
        obj = r.json()["objectives"]
        assert obj and all(b <= a + 1e-8 for a, b in zip(obj, obj[1:]))

        r = self.post(
            client,
            dataset=synthetic_dataset("regression"),
            method="l2krr",
            lambda0=0.5,
        )
        assert r.status_code == 200, r.text
        assert r.json()["objectives"]

    def test_onestage_regression(self, client):
        r = self.post(
            client,
            dataset=synthetic_dataset("regression"),
            method="onestage",
            gamma=0.5,
            gamma_prime=0.1,
        )
        assert r.status_code == 200, r.text
        assert r.json()["task"] == "regression"

    def test_task_mismatch_is_data_error(self, client):
        r = self.post(client, dataset=synthetic_dataset("regression"), method="l1svm")
        assert r.status_code == 422
        assert r.json()["error"]["kind"] == "data"

    def test_nonconvergence_maps_to_409(self, client):
        r = self.post(
            client,
            dataset=synthetic_dataset("regression"),
            method="l2krr",
            max_outer_iter=1,
            tol=1e-14,
        )
        assert r.status_code == 409
        body = r.json()["error"]
        assert body["kind"] == "nonconverged"
        assert body["residual"] > 0.0

    def test_unknown_method_is_schema_error(self, client):
        r = self.post(client, method="ridge")
        assert r.status_code == 422
        assert "detail" in r.json()

    def test_extra_field_rejected(self, client):
        r = self.post(client, method="align", bogus=1)
        assert r.status_code == 422
        assert "detail" in r.json()

    def test_bundled_dataset(self, client):
        r = self.post(
            client,
            dataset={
                "source": {"kind": "bundled", "name": "clouds350"},
                "task": "classification",
            },
            method="alignf",
        )
        assert r.status_code == 200, r.text
        assert r.json()["dataset_id"].endswith("clouds350.csv")

    def test_explicit_bank(self, client):
        r = self.post(
            client,
            bank={
                "family": {
                    "kind": "explicit",
                    "kernels": [
                        {"kind": "gaussian", "gamma": 0.5},
                        {"kind": "linear", "offset": 1.0},
                        {"kind": "rank_one", "feature_index": 0},
                    ],
                }
            },
        )
        assert r.status_code == 200, r.text
        assert r.json()["kernels"] == [
            "gaussian(gamma=0.5)",
            "linear(offset=1)",
            "rank_one(feature=0)",
        ]


class TestCv:
    def payload(self):
        return {
            "dataset": synthetic_dataset(),
            "bank": gaussian_bank(),
            "method": "align",
            "folds": 4,
            "seed": 2,
        }

    def test_run_and_determinism(self, client):
        a = client.post("/cv", json=self.payload())
        b = client.post("/cv", json=self.payload())
        assert a.status_code == 200, a.text
        da, db = a.json(), b.json()
        da.pop("wall_clock_s")
        db.pop("wall_clock_s")
        assert da == db
        assert len(da["fold_results"]) == 4
        assert da["generator"] == "pcg64"

    def test_bad_folds_is_data_error(self, client):
        body = self.payload() | {"folds": 2}
        r = client.post("/cv", json=body)
        assert r.status_code == 422
        assert r.json()["error"]["kind"] == "data"


class TestCorrelate:
    def test_report(self, client):
        r = client.post(
            "/correlate",
            json={
                "dataset": synthetic_dataset(),
                "bank": gaussian_bank(),
                "folds": 3,
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert len(body["rows"]) == 3
        assert {"accuracy", "centered_alignment", "uncentered_alignment"} <= set(
            body["rows"][0]
        )


class TestTheoryEndpoints:
    def test_concentration(self, client):
        r = client.post(
            "/theory/concentration",
            json={
                "distribution": {"two_point_alpha": 0.5},
                "kernel": {"kind": "linear", "offset": 1.0},
                "sample_sizes": [10, 20],
                "trials": 100,
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["rho"] == pytest.approx(1.0)
        assert [row["m"] for row in body["rows"]] == [10, 20]
        assert all(row["coverage"] >= 0.95 for row in body["rows"])

    def test_distribution_shape_conflict(self, client):
        r = client.post(
            "/theory/concentration",
            json={
                "distribution": {"two_point_alpha": 0.5, "labels": [1.0]},
                "kernel": {"kind": "linear"},
            },
        )
        assert r.status_code == 422
        assert r.json()["error"]["kind"] == "data"

    def test_perturbation(self, client):
        r = client.post(
            "/theory/perturbation",
            json={
                "distribution": {
                    "points": [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                    "labels": [-1.0, 1.0, 1.0],
                    "masses": [0.4, 0.4, 0.2],
                },
                "kernel": {"kind": "gaussian", "gamma": 0.5},
                "m": 15,
                "trials": 30,
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["violations"] == 0
        assert body["max_ratio"] <= 1.0

    def test_predictor(self, client):
        r = client.post(
            "/theory/predictor",
            json={
                "dataset": synthetic_dataset(),
                "kernel": {"kind": "gaussian", "gamma": 1.0},
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["bound_satisfied"] is True
        assert body["identity_residual"] <= 1e-9

    def test_stability(self, client):
        r = client.post(
            "/theory/stability",
            json={
                "distribution": {
                    "points": [[-1.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
                    "labels": [-1.0, 1.0, 1.0],
                    "masses": [0.4, 0.4, 0.2],
                },
                "bank": gaussian_bank(),
                "m": 12,
                "trials": 10,
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["violations"] == 0
        assert body["min_slack"] >= -10.0 * body["tol"]

    def test_genbound(self, client):
        r = client.post(
            "/theory/genbound",
            json={
                "Lambda1": 1.0,
                "lambda0": 1.0,
                "R2": 1.0,
                "M_label": 1.0,
                "delta_mu_norm": 0.5,
                "K_group_norm": 2.0,
                "m": 100,
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["M1"] == pytest.approx(4.0)
        assert body["bound"] == pytest.approx(5.0131063198275925, abs=1e-9)


class TestTtestAndCurve:
    def test_ttest(self, client):
        r = client.post(
            "/ttest",
            json={
                "errors_a": [0.30, 0.35, 0.32, 0.36, 0.31],
                "errors_b": [0.20, 0.22, 0.21, 0.25, 0.19],
            },
        )
        assert r.status_code == 200, r.text
        body = r.json()
        assert body["significant"] is True
        assert body["p_value"] == pytest.approx(1.1848906305078109e-05, rel=1e-6)

    def test_ttest_length_mismatch(self, client):
        r = client.post("/ttest", json={"errors_a": [0.1, 0.2], "errors_b": [0.1]})
        assert r.status_code == 422
        assert r.json()["error"]["kind"] == "data"

    def test_curve(self, client):
        r = client.post("/curve", json={"alphas": [0.1, 0.5]})
        assert r.status_code == 200, r.text
        pts = r.json()["points"]
        assert pts[0]["uncentered"] == pytest.approx(
            math.sqrt(0.01 + 0.81), abs=1e-9
        )
        assert all(p["centered"] == pytest.approx(1.0, abs=1e-9) for p in pts)
