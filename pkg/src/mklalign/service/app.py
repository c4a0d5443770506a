"""FastAPI service exposing the kernel-learning toolkit.

Domain failures map to structured JSON errors: data problems (bad inputs,
degenerate kernels, singular systems) return 422 with kind "data", solver
non-convergence returns 409 with kind "nonconverged". Schema violations are
handled by FastAPI itself and return 422 with a "detail" payload.
"""

from __future__ import annotations

from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..alignment import centered_alignment
from ..data import build_bank, load_dataset
from ..errors import DataError, MklAlignError, NonConvergedError
from ..experiments import (
    ExperimentConfig,
    alignment_curve,
    correlation_report,
    dataset_id,
    paired_ttest,
    run_cv,
)
from ..kernels import combine, gram, label_kernel
from ..learners import OneStageConfig, l1svm_learn, l2krr_learn, onestage_learn
from ..reports import SPEC_VERSION, jsonable
from ..theory import (
    ConcentrationConfig,
    GenBoundInputs,
    concentration_trial,
    generalization_bound_value,
    perturbation_check,
    predictor_diagnostics,
    qp_stability_trials,
)
from ..weights import align_weights, alignf_weights, lq_weights, unif_weights
from . import schemas as sc


def _error_payload(kind: str, exc: Exception) -> dict:
    body = {"kind": kind, "message": str(exc)}
    residual = getattr(exc, "residual", None)
    if residual is not None:
        body["residual"] = float(residual)
    return {"error": body}


def _compute_weights(req: sc.WeightsRequest) -> sc.WeightsResponse:
    ds_cfg = req.dataset.to_config()
    sample = load_dataset(ds_cfg)
    bank = build_bank(sample, req.bank.to_config())
    y = sample.labels
    objectives = None

    if req.method == "unif":
        w = unif_weights(bank.p, radius=req.Lambda)
    elif req.method == "align":
        w = align_weights(bank, y, radius=req.Lambda)
    elif req.method == "alignf":
        w = alignf_weights(bank, y, radius=req.Lambda, norm_kind="l2")
    elif req.method == "lq":
        if req.q is None:
            raise DataError("method lq needs q")
        w = lq_weights(bank, y, req.q, radius=req.Lambda)
    elif req.method == "l1svm":
        if ds_cfg.task != "classification":
            raise DataError("l1svm is a classification method")
        extra = {}
        if req.tol is not None:
            extra["tol"] = req.tol
        if req.max_outer_iter is not None:
            extra["max_outer_iter"] = req.max_outer_iter
        fit = l1svm_learn(bank, y, C=req.C, radius=req.Lambda, **extra)
        w, objectives = fit.weights, list(fit.objectives)
    elif req.method == "l2krr":
        if ds_cfg.task != "regression":
            raise DataError("l2krr is a regression method")
        extra = {}
        if req.tol is not None:
            extra["tol"] = req.tol
        if req.max_outer_iter is not None:
            extra["max_outer_iter"] = req.max_outer_iter
        fit = l2krr_learn(bank, y, lambda0=req.lambda0, radius=req.Lambda, **extra)
        w, objectives = fit.weights, list(fit.objectives)
    else:
        if ds_cfg.task != "regression":
            raise DataError("onestage is a regression method")
        one = OneStageConfig(
            gamma=req.gamma,
            gamma_prime=req.gamma_prime,
            gamma_dprime=req.gamma_dprime,
            tol=req.tol if req.tol is not None else 1e-8,
            max_outer_iter=req.max_outer_iter if req.max_outer_iter is not None else 500,
        )
        fit = onestage_learn(bank, y, one)
        w, objectives = fit.weights, list(fit.objectives)

    rho = centered_alignment(combine(bank, w.mu), label_kernel(y))
    names = [s.describe() for s in bank.specs] if bank.specs else []
    return sc.WeightsResponse(
        spec_version=SPEC_VERSION,
        dataset_id=dataset_id(ds_cfg),
        method=req.method,
        task=ds_cfg.task,
        num_kernels=bank.p,
        kernels=names,
        mu=[float(v) for v in w.mu],
        norm_kind=w.norm_kind,
        radius=float(w.radius),
        train_alignment=float(rho),
        objectives=objectives,
    )


def create_app() -> FastAPI:
    app = FastAPI(title="mklalign", version=__version__)

    @app.exception_handler(NonConvergedError)
    async def _nonconverged(request, exc):
        return JSONResponse(status_code=409, content=_error_payload("nonconverged", exc))

    @app.exception_handler(MklAlignError)
    async def _domain_error(request, exc):
        return JSONResponse(status_code=422, content=_error_payload("data", exc))

    @app.get("/health", response_model=sc.HealthResponse)
    def health():
        return sc.HealthResponse(
            status="ok", version=__version__, spec_version=SPEC_VERSION
        )

    @app.post("/weights", response_model=sc.WeightsResponse)
    def weights(req: sc.WeightsRequest):
        return _compute_weights(req)

    @app.post("/cv", response_model=sc.ExperimentRunModel)
    def cv(req: sc.ExperimentModel):
        cfg = ExperimentConfig(
            dataset=req.dataset.to_config(),
            bank=req.bank.to_config(),
            method=req.method,
            folds=req.folds,
            Lambda_grid=tuple(req.Lambda_grid),
            lambda_grid=tuple(req.lambda_grid),
            q=req.q,
            onestage_gamma_grid=tuple(req.onestage_gamma_grid),
            onestage_gamma_prime_grid=tuple(req.onestage_gamma_prime_grid),
            onestage_gamma_dprime_grid=tuple(req.onestage_gamma_dprime_grid),
            C=req.C,
            seed=req.seed,
            threads=req.threads,
        )
        return sc.ExperimentRunModel(**jsonable(run_cv(cfg)))

    @app.post("/correlate", response_model=sc.CorrelationReportModel)
    def correlate(req: sc.CorrelateRequest):
        report = correlation_report(
            dataset=req.dataset.to_config(),
            bank=req.bank.to_config(),
            folds=req.folds,
            seed=req.seed,
            lambda0=req.lambda0,
            C=req.C,
        )
        return sc.CorrelationReportModel(**jsonable(report))

    @app.post("/theory/concentration", response_model=sc.ConcentrationReportModel)
    def theory_concentration(req: sc.ConcentrationRequest):
        dist = req.distribution.to_distribution()
        spec = req.kernel.to_spec()
        cfg = ConcentrationConfig(
            dist=dist,
            kernel=spec,
            R2=dist.bound_kernel(spec) if req.R2 is None else req.R2,
            Rp2=dist.bound_target() if req.Rp2 is None else req.Rp2,
            delta=req.delta,
            sample_sizes=tuple(req.sample_sizes),
            trials=req.trials,
            seed=req.seed,
        )
        return sc.ConcentrationReportModel(**jsonable(concentration_trial(cfg)))

    @app.post("/theory/perturbation", response_model=sc.PerturbationReportModel)
    def theory_perturbation(req: sc.PerturbationRequest):
        report = perturbation_check(
            dist=req.distribution.to_distribution(),
            spec=req.kernel.to_spec(),
            m=req.m,
            trials=req.trials,
            seed=req.seed,
            R2=req.R2,
            Rp2=req.Rp2,
        )
        return sc.PerturbationReportModel(**jsonable(report))

    @app.post("/theory/predictor", response_model=sc.PredictorDiagnosticsModel)
    def theory_predictor(req: sc.PredictorRequest):
        ds_cfg = req.dataset.to_config()
        sample = load_dataset(ds_cfg)
        K = gram(req.kernel.to_spec(), sample)
        report = predictor_diagnostics(K, sample.labels, task=ds_cfg.task)
        return sc.PredictorDiagnosticsModel(**jsonable(report))

    @app.post("/theory/stability", response_model=sc.StabilityReportModel)
    def theory_stability(req: sc.StabilityRequest):
        report = qp_stability_trials(
            dist=req.distribution.to_distribution(),
            bank_cfg=req.bank.to_config(),
            m=req.m,
            trials=req.trials,
            seed=req.seed,
            tol=req.tol,
        )
        return sc.StabilityReportModel(**jsonable(report))

    @app.post("/theory/genbound", response_model=sc.GenBoundReportModel)
    def theory_genbound(req: sc.GenBoundRequest):
        inputs = GenBoundInputs(
            Lambda1=req.Lambda1,
            lambda0=req.lambda0,
            R2=req.R2,
            M_label=req.M_label,
            delta_mu_norm=req.delta_mu_norm,
            K_group_norm=req.K_group_norm,
        )
        report = generalization_bound_value(
            inputs, m=req.m, delta=req.delta, empirical_error=req.empirical_error
        )
        return sc.GenBoundReportModel(**jsonable(report))

    @app.post("/ttest", response_model=sc.TtestDecisionModel)
    def ttest(req: sc.TtestRequest):
        decision = paired_ttest(req.errors_a, req.errors_b, p_level=req.p_level)
        return sc.TtestDecisionModel(**jsonable(decision))

    @app.post("/curve", response_model=sc.CurveResponse)
    def curve(req: sc.CurveRequest):
        points = alignment_curve(req.alphas)
        return sc.CurveResponse(
            spec_version=SPEC_VERSION,
            points=[sc.CurvePointModel(**jsonable(pt)) for pt in points],
        )

    return app


app = create_app()
