"""HTTP sandbox around a trained model and the scenario generator.

Every number the API returns is produced by the same library calls a direct
caller would make; the service adds sessions, validation, and audit history,
never modeling. Delay predictions come from the loaded model; SDI values
come from the generator chain (surrogate-free, documented behavior).
"""

from __future__ import annotations

import dataclasses
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..delaynet import DelayNet, counterfactual_predict, predict_delay
from ..generator import (
    GeneratorConfig,
    ground_truth_delay,
    sample_scenario,
    w_from_obj,
    w_to_obj,
)
from ..graphcore import (
    SCHEMA_VERSION,
    InterventionVector,
    Scenario,
    UnknownRegistryIdError,
    scenario_from_obj,
    scenario_to_obj,
    validate,
)
from ..harness import STRUCTURE_VARIANTS, DelayNetPredictor, recommend, sensitivity_grid
from .schemas import (
    AttentionEdge,
    AttentionLayerSlice,
    AttentionResponse,
    CounterfactualRequest,
    CounterfactualResponse,
    HealthResponse,
    HistoryEntry,
    PredictResponse,
    RecommendRequest,
    RecommendResponse,
    RecommendationRow,
    ScenarioModel,
    SensitivityRequest,
    SensitivityResponse,
    SessionCreateRequest,
    SessionCreatedResponse,
    SessionStateResponse,
)
from .sessions import SessionStore, UnknownSessionError

TEMPLATE_SEED = 20250

app_description = (
    "Interactive counterfactual sandbox: sessions hold a scenario and an "
    "intervention; prediction, counterfactual, sensitivity, and "
    "recommendation endpoints mirror the library exactly."
)


class SandboxEngine:
    """Shared, read-only state behind the HTTP surface."""

    def __init__(
        self,
        model: DelayNet | None,
        model_id: str | None = None,
        generator_config: GeneratorConfig = GeneratorConfig(),
    ):
        self.model = model
        self.model_id = model_id
        self.generator_config = generator_config

    def template_scenario(self, name: str) -> Scenario:
        templates = {"default": 0, "hardened": 2, "shallow": 4}
        if name not in templates:
            raise KeyError(name)
        return sample_scenario(TEMPLATE_SEED, templates[name])

    def predict(self, scenario: Scenario, w: InterventionVector) -> tuple[float, float, list[dict]]:
        swapped = _with_intervention(scenario, w)
        y_hat, amap = predict_delay(self.model, swapped)
        _, _, sdi_score = ground_truth_delay(swapped, w, self.generator_config)
        return y_hat, sdi_score, amap.summary()


def _with_intervention(scenario: Scenario, w: InterventionVector) -> Scenario:
    from ..graphcore import TemporalGraph

    snaps = tuple(dataclasses.replace(s, interventions=w) for s in scenario.graph.snapshots)
    return dataclasses.replace(scenario, graph=TemporalGraph(snaps))


def create_app(engine: SandboxEngine, journal_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="delaycast sandbox", version=__version__, description=app_description)
    store = SessionStore(journal_dir=journal_dir)
    app.state.engine = engine
    app.state.store = store

    @app.exception_handler(RequestValidationError)
    async def schema_violation(_req: Request, exc: RequestValidationError):
        # body-shape violations are client errors with a field locus
        loci = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err.get("loc", ()))
            loci.append(f"{loc}: {err.get('msg', 'invalid')}")
        return JSONResponse(status_code=400, content={"detail": "schema violation", "violations": loci})

    def _session(session_id: str):
        try:
            return store.get(session_id)
        except UnknownSessionError:
            raise _http(404, f"unknown session {session_id!r}")

    def _require_model() -> DelayNet:
        if engine.model is None:
            raise _http(409, "no model loaded")
        return engine.model

    @app.get("/healthz", response_model=HealthResponse)
    def healthz():
        return HealthResponse(
            status="ok",
            model_id=engine.model_id,
            package_version=__version__,
            scenario_schema_version=SCHEMA_VERSION,
        )

    @app.get("/schema")
    def schema():
        return app.openapi()

    @app.post("/session", response_model=SessionCreatedResponse)
    def create_session(body: SessionCreateRequest):
        if body.scenario is not None:
            scenario = _decode_scenario(body.scenario)
        else:
            name = body.template or "default"
            try:
                scenario = engine.template_scenario(name)
            except KeyError:
                raise _http(400, f"unknown template {name!r}")
        session = store.create(scenario)
        entry = session.record("session.create", {"template": body.template}, {"scenario_id": scenario.scenario_id})
        store.journal(session, entry)
        return SessionCreatedResponse(session_id=session.session_id, scenario_id=scenario.scenario_id)

    @app.get("/session/{session_id}", response_model=SessionStateResponse)
    def session_state(session_id: str):
        session = _session(session_id)
        return SessionStateResponse(
            session_id=session.session_id,
            scenario_id=session.scenario.scenario_id,
            intervention=w_to_obj(session.current_w),
            history_length=len(session.history),
        )

    @app.get("/session/{session_id}/scenario")
    def get_scenario(session_id: str):
        return scenario_to_obj(_session(session_id).scenario)

    @app.put("/session/{session_id}/scenario", response_model=SessionStateResponse)
    def put_scenario(session_id: str, body: ScenarioModel):
        session = _session(session_id)
        scenario = _decode_scenario(body)
        with session.lock:
            session.scenario = scenario
            session.current_w = scenario.intervention
            entry = session.record("scenario.put", {"scenario_id": scenario.scenario_id}, {})
            store.journal(session, entry)
        return session_state(session_id)

    @app.put("/session/{session_id}/intervention", response_model=SessionStateResponse)
    def put_intervention(session_id: str, body: dict):
        session = _session(session_id)
        w = _decode_intervention(body, session.scenario)
        with session.lock:
            session.current_w = w
            entry = session.record("intervention.put", w_to_obj(w), {})
            store.journal(session, entry)
        return session_state(session_id)

    @app.post("/session/{session_id}/predict", response_model=PredictResponse)
    def predict(session_id: str):
        session = _session(session_id)
        _require_model()
        with session.lock:
            y_hat, sdi_score, summary = engine.predict(session.scenario, session.current_w)
            result = {"y_hat_days": y_hat, "sdi": sdi_score}
            entry = session.record("predict", w_to_obj(session.current_w), result)
            store.journal(session, entry)
        return PredictResponse(
            y_hat_days=y_hat,
            sdi=sdi_score,
            attention_summary=[AttentionEdge(**e) for e in summary],
        )

    @app.post("/session/{session_id}/counterfactual", response_model=CounterfactualResponse)
    def counterfactual(session_id: str, body: CounterfactualRequest):
        session = _session(session_id)
        model = _require_model()
        alt_w = _decode_intervention(body.alt_w.model_dump(), session.scenario)
        with session.lock:
            base = _with_intervention(session.scenario, session.current_w)
            y_fact, y_cf = counterfactual_predict(model, base, alt_w)
            result = {"y_factual": y_fact, "y_counterfactual": y_cf, "delta": y_cf - y_fact}
            entry = session.record("counterfactual", {"alt_w": w_to_obj(alt_w)}, result)
            store.journal(session, entry)
        return CounterfactualResponse(y_factual=y_fact, y_counterfactual=y_cf, delta=y_cf - y_fact)

    @app.post("/session/{session_id}/sensitivity", response_model=SensitivityResponse)
    def sensitivity(session_id: str, body: SensitivityRequest):
        session = _session(session_id)
        model = _require_model()
        structures = STRUCTURE_VARIANTS
        if body.structures:
            by_name = dict(STRUCTURE_VARIANTS)
            unknown = [s for s in body.structures if s not in by_name]
            if unknown:
                raise _http(400, f"unknown structure variants: {unknown}")
            structures = tuple((s, by_name[s]) for s in body.structures)
        with session.lock:
            base = _with_intervention(session.scenario, session.current_w)
            try:
                grid = sensitivity_grid(
                    DelayNetPredictor(model), base, weapons=body.weapons, paths=body.paths, structures=structures
                )
            except UnknownRegistryIdError as exc:
                raise _http(422, str(exc))
            entry = session.record(
                "sensitivity",
                body.model_dump(),
                {"shape": list(grid.values.shape)},
            )
            store.journal(session, entry)
        return SensitivityResponse(**grid.as_dict())

    @app.post("/session/{session_id}/recommend", response_model=RecommendResponse)
    def recommend_route(session_id: str, body: RecommendRequest):
        session = _session(session_id)
        model = _require_model()
        candidates = [
            (c.id, _decode_intervention(c.w.model_dump(), session.scenario)) for c in body.candidates
        ]
        with session.lock:
            base = _with_intervention(session.scenario, session.current_w)
            rows = recommend(
                model,
                base,
                candidates,
                objective=body.objective,
                top_k=body.top_k,
                generator_config=engine.generator_config,
            )
            entry = session.record(
                "recommend",
                {"objective": body.objective, "candidates": [c.id for c in body.candidates]},
                {"ranking": [r.candidate_id for r in rows]},
            )
            store.journal(session, entry)
        return RecommendResponse(
            objective=body.objective,
            ranking=[
                RecommendationRow(
                    candidate_id=r.candidate_id,
                    w=w_to_obj(r.w),
                    score=r.score,
                    attention_summary=[AttentionEdge(**e) for e in r.attention_summary],
                )
                for r in rows
            ],
        )

    @app.get("/session/{session_id}/attention", response_model=AttentionResponse)
    def attention(session_id: str):
        session = _session(session_id)
        model = _require_model()
        base = _with_intervention(session.scenario, session.current_w)
        _, amap = predict_delay(model, base)
        slices = []
        for layer, arr in enumerate(amap.layers):
            T, _, _, H = arr.shape
            for t in range(1, T + 1):
                for head in range(H):
                    edges = [
                        AttentionEdge(src=src, dst=dst, weight=weight)
                        for (src, dst), weight in sorted(amap.edge_weights(layer, t, head).items())
                    ]
                    slices.append(AttentionLayerSlice(layer=layer, t=t, head=head, edges=edges))
        return AttentionResponse(node_ids=list(amap.node_ids), slices=slices)

    @app.get("/session/{session_id}/history", response_model=list[HistoryEntry])
    def history(session_id: str):
        return [HistoryEntry(**e) for e in _session(session_id).history]

    return app


def _http(status: int, detail: str):
    from fastapi import HTTPException

    return HTTPException(status_code=status, detail=detail)


def _decode_scenario(body: ScenarioModel) -> Scenario:
    try:
        scenario = scenario_from_obj(body.model_dump())
    except Exception as exc:
        raise _http(422, f"scenario does not decode: {exc}")
    problems = validate(scenario.graph, scenario.registries)
    if problems:
        from fastapi import HTTPException

        raise HTTPException(
            status_code=422,
            detail={"detail": "scenario fails validation", "violations": [str(v) for v in problems]},
        )
    return scenario


def _decode_intervention(obj: dict[str, Any], scenario: Scenario) -> InterventionVector:
    try:
        w = w_from_obj(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise _http(400, f"bad intervention: {exc}")
    candidate = _with_intervention(scenario, w)
    problems = validate(candidate.graph, scenario.registries)
    if problems:
        from fastapi import HTTPException

        raise HTTPException(
            status_code=422,
            detail={"detail": "intervention fails validation", "violations": [str(v) for v in problems]},
        )
    return w
