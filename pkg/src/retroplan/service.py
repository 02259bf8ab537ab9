"""HTTP JSON API for route review and annotation.

Routes live as JSON files in a data directory; annotations append to a
JSON-lines log (latest write per route/step/annotator wins). All endpoints
sit under /v1; an optional static bearer token guards writes and reads
alike. State is re-readable at any time, so a restart loses nothing.
"""

from __future__ import annotations

import json
import os
import threading
import time
from pathlib import Path

from fastapi import Depends, FastAPI, Header, HTTPException
from pydantic import BaseModel

from .errors import RetroplanError, ValidationFailed
from .evalproto import (
    BINARIZE_NEGATIVE,
    BINARIZE_POSITIVE,
    Confidence,
    IssueCategory,
    ReactionAnnotation,
    append_annotation,
    binarize,
    fp_overlap,
    fp_tn_counts_by_category,
    load_annotations,
    path_verdict,
    pr_auc,
    roc_auc,
)

DEFAULT_ADDR = "127.0.0.1:8077"


class AnnotationStore:
    """Append-only annotation log over a directory of route files."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.routes_dir = self.data_dir / "routes"
        self.labels_path = self.data_dir / "labels.jsonl"
        self.routes_dir.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()

    # -- routes

    def route_ids(self) -> list[str]:
        return sorted(p.stem for p in self.routes_dir.glob("*.json"))

    def load_route(self, route_id: str) -> dict:
        if "/" in route_id or route_id.startswith("."):
            raise FileNotFoundError(route_id)
        path = self.routes_dir / f"{route_id}.json"
        if not path.exists():
            raise FileNotFoundError(route_id)
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)

    def add_route(self, report: dict) -> str:
        route_id = report.get("id") or f"route-{len(self.route_ids()):04d}"
        report = dict(report, id=route_id)
        with open(self.routes_dir / f"{route_id}.json", "w",
                  encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
        return route_id

    # -- annotations

    def annotations(self) -> list[ReactionAnnotation]:
        if not self.labels_path.exists():
            return []
        return load_annotations(self.labels_path)

    def latest(self) -> dict[tuple[str, int, str], ReactionAnnotation]:
        """Latest annotation per (route, step, annotator), log order."""
        out: dict[tuple[str, int, str], ReactionAnnotation] = {}
        for a in self.annotations():
            out[(a.route_id, a.step_index, a.annotator)] = a
        return out

    def current_for_route(self, route_id: str) -> dict[int, ReactionAnnotation]:
        """Latest annotation per step regardless of annotator."""
        out: dict[int, ReactionAnnotation] = {}
        for a in self.annotations():
            if a.route_id == route_id:
                out[a.step_index] = a
        return out

    def append(self, annotation: ReactionAnnotation) -> None:
        with self._write_lock:
            append_annotation(self.labels_path, annotation)


class LabelPayload(BaseModel):
    confidence: str
    category: str
    note: str = ""
    annotator: str = ""
    protocol_step: int = 7


def _verdict_if_complete(store: AnnotationStore, route: dict) -> str | None:
    current = store.current_for_route(route["id"])
    steps = len(route.get("steps", []))
    if steps == 0 or len(current) < steps or \
            set(current) != set(range(steps)):
        return None
    return min(a.confidence for a in current.values()).wire


def _route_summary(store: AnnotationStore, route: dict) -> dict:
    return {
        "id": route["id"],
        "target": route.get("target", ""),
        "step_count": len(route.get("steps", [])),
        "verdict": _verdict_if_complete(store, route),
    }


def compute_metrics(store: AnnotationStore) -> dict:
    """Scorer-comparison metrics over the current snapshot."""
    annotations = list(store.latest().values())
    report: dict = {
        "n_annotations": len(annotations),
        "verdicts": {},
        "auc": {"status": "insufficient data"},
        "per_category": [],
        "fp_overlap": None,
        "fp_tn_by_category": [],
    }
    verdict_counts: dict[str, int] = {}
    for route_id in store.route_ids():
        route = store.load_route(route_id)
        verdict = _verdict_if_complete(store, route)
        verdict_counts[verdict or "unlabeled"] = \
            verdict_counts.get(verdict or "unlabeled", 0) + 1
    report["verdicts"] = verdict_counts
    if not annotations:
        return report

    # collect per-reaction scores from the route files
    scores: dict[str, dict[str, float]] = {}
    predictions: dict[str, dict[str, int]] = {}
    for route_id in store.route_ids():
        route = store.load_route(route_id)
        for idx, step in enumerate(route.get("steps", [])):
            bundle = step.get("scores")
            if not bundle:
                continue
            rid = f"{route_id}#{idx}"
            scores[rid] = {
                "prior": bundle["prior_score"],
                "classifier": bundle["classifier_score"],
                "precedent": float(bundle["reference_count"]),
                "ensemble": bundle["ensemble"],
            }
            thr = bundle.get("thresholds", {})
            predictions[rid] = {
                "prior": int(bundle["prior_score"] > thr.get("prior", 0.0)),
                "classifier": int(bundle["classifier_score"]
                                  > thr.get("classifier", 0.0)),
                "precedent": int(bundle["reference_count"] > 0),
                "ensemble": int(bundle["accepted"]),
            }

    groups = dict(binarize(annotations))
    labeled = [
        (a, groups[a.reaction_id]) for a in annotations
        if a.reaction_id in scores and groups[a.reaction_id] in
        (BINARIZE_POSITIVE, BINARIZE_NEGATIVE)
    ]
    ys = [int(g == BINARIZE_POSITIVE) for _, g in labeled]
    if ys and 0 < sum(ys) < len(ys):
        auc: dict = {}
        for name in ("prior", "classifier", "precedent", "ensemble"):
            xs = [scores[a.reaction_id][name] for a, _ in labeled]
            auc[name] = {"roc_auc": roc_auc(xs, ys), "pr_auc": pr_auc(xs, ys)}
        report["auc"] = auc
        fp_sets = {
            name: {
                a.reaction_id
                for (a, g) in labeled
                if g == BINARIZE_NEGATIVE
                and predictions[a.reaction_id][name]
            }
            for name in ("prior", "classifier", "precedent", "ensemble")
        }
        value, defined = fp_overlap(fp_sets)
        report["fp_overlap"] = {"value": value if defined else None,
                                "defined": defined}
        ens_pred = {
            a.reaction_id: predictions[a.reaction_id]["ensemble"]
            for a, _ in labeled
        }
        report["fp_tn_by_category"] = fp_tn_counts_by_category(
            [a for a, _ in labeled], ens_pred)
        from .evalproto import per_category_auc

        per_cat = []
        xs_map = {a.reaction_id: scores[a.reaction_id]["ensemble"]
                  for a, _ in labeled}
        for category in IssueCategory:
            if category is IssueCategory.NO_PROBLEM:
                continue
            try:
                per_cat.append(per_category_auc(
                    [a for a, _ in labeled], xs_map, category))
            except RetroplanError:
                continue  # single-class categories are skipped, not errors
        report["per_category"] = per_cat
    return report


def create_app(data_dir: str | Path, token: str | None = None) -> FastAPI:
    store = AnnotationStore(data_dir)
    app = FastAPI(title="retroplan review service", version="1")

    def auth(authorization: str | None = Header(default=None)):
        if token is None:
            return
        if authorization != f"Bearer {token}":
            raise HTTPException(
                status_code=401,
                detail={"code": "unauthorized", "message": "bad token"})

    @app.exception_handler(RetroplanError)
    async def _domain_error(_request, err: RetroplanError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400, content=err.to_dict())

    @app.get("/v1/routes")
    def list_routes(_=Depends(auth)):
        return [
            _route_summary(store, store.load_route(rid))
            for rid in store.route_ids()
        ]

    @app.get("/v1/routes/{route_id}")
    def get_route(route_id: str, _=Depends(auth)):
        try:
            route = store.load_route(route_id)
        except FileNotFoundError:
            raise HTTPException(
                status_code=404,
                detail={"code": "not_found",
                        "message": f"route {route_id!r}"}) from None
        current = store.current_for_route(route_id)
        for idx, step in enumerate(route.get("steps", [])):
            ann = current.get(idx)
            step["annotation"] = ann.to_json() if ann else None
        route["verdict"] = _verdict_if_complete(store, route)
        return route

    @app.post("/v1/routes/{route_id}/steps/{step_index}/label")
    def post_label(route_id: str, step_index: int, payload: LabelPayload,
                   _=Depends(auth)):
        try:
            route = store.load_route(route_id)
        except FileNotFoundError:
            raise HTTPException(
                status_code=404,
                detail={"code": "not_found",
                        "message": f"route {route_id!r}"}) from None
        steps = route.get("steps", [])
        if not (0 <= step_index < len(steps)):
            raise HTTPException(
                status_code=404,
                detail={"code": "not_found",
                        "message": f"step {step_index} out of range"})
        try:
            annotation = ReactionAnnotation(
                reaction_id=f"{route_id}#{step_index}",
                route_id=route_id,
                step_index=step_index,
                confidence=Confidence.from_wire(payload.confidence),
                category=IssueCategory.from_wire(payload.category),
                note=payload.note,
                annotator=payload.annotator,
                timestamp=time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
                protocol_step=payload.protocol_step,
            )
        except ValidationFailed as err:
            raise HTTPException(status_code=400, detail=err.to_dict()) \
                from None
        store.append(annotation)
        return annotation.to_json()

    @app.get("/v1/metrics")
    def get_metrics(_=Depends(auth)):
        return compute_metrics(store)

    @app.get("/v1/progress")
    def get_progress(_=Depends(auth)):
        routes = []
        verdict_counts: dict[str, int] = {}
        total_steps = labeled_steps = 0
        for rid in store.route_ids():
            route = store.load_route(rid)
            current = store.current_for_route(rid)
            steps = len(route.get("steps", []))
            verdict = _verdict_if_complete(store, route)
            routes.append({
                "id": rid,
                "labeled": len(current),
                "total": steps,
                "verdict": verdict,
            })
            verdict_counts[verdict or "unlabeled"] = \
                verdict_counts.get(verdict or "unlabeled", 0) + 1
            total_steps += steps
            labeled_steps += len(current)
        return {
            "routes": routes,
            "totals": {"steps": total_steps, "labeled": labeled_steps},
            "verdict_counts": verdict_counts,
        }

    app.state.store = store
    return app


def main() -> None:
    import uvicorn

    addr = os.environ.get("REVIEW_ADDR", DEFAULT_ADDR)
    host, _, port = addr.partition(":")
    data_dir = os.environ.get("REVIEW_DATA_DIR", "./review-data")
    token = os.environ.get("REVIEW_TOKEN") or None
    uvicorn.run(create_app(data_dir, token), host=host, port=int(port or 8077))


if __name__ == "__main__":
    main()
