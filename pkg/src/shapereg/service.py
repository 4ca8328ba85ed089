"""HTTP service for interactive expert-in-the-loop model refinement.

A session holds a dataset, a fitting configuration, a mutable constraint
set, and an append-only iteration history whose entry 0 is always the
initial unconstrained ridge model.  The expert inspects model slices at
chosen anchor points, edits constraints, and triggers asynchronous refits;
failed refits surface which constraints clash.  Sessions persist to a
directory (one document per iteration) and survive restarts.
"""

from __future__ import annotations

import json
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel
from scipy.stats import qmc

from . import constraints as cs
from . import evaluation as ev
from . import features as ft
from . import ingest
from . import model as md
from . import qp
from . import sip
from .errors import ConvergenceFailure, CsvFormatError, InfeasibleProblem

ANCHOR_POOL_SIZE = 4096
ON_AXIS_TOL = 1e-9


class CreateSessionBody(BaseModel):
    csv: str
    config: dict


class ConstraintOpsBody(BaseModel):
    operations: list[dict]


@dataclass
class Iteration:
    number: int
    model: md.TrainedModel
    report_doc: dict | None  # solve report, or None for the ridge iteration
    kind: str  # "ridge" | "adaptive" | "grid"


@dataclass
class Session:
    id: str
    dataset: ingest.Dataset
    config: ingest.RunConfig
    ranges: np.ndarray
    x_cube: np.ndarray
    constraint_set: list[cs.ShapeConstraint]
    iterations: list[Iteration] = field(default_factory=list)
    status: str = "idle"  # idle | fitting | failed
    failure: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def feature_map(self) -> ft.FeatureMap:
        return ft.enumerate_multi_indices(self.config.degrees)


def _session_summary(s: Session) -> dict:
    return {
        "id": s.id,
        "status": s.status,
        "failure": s.failure,
        "n_points": s.dataset.n,
        "columns": s.dataset.columns,
        "input_ranges": [[float(a), float(b)] for a, b in s.ranges],
        "config": s.config.to_doc(),
        "constraints": [cs.constraint_to_record(c) for c in s.constraint_set],
        "iterations": [
            {
                "number": it.number,
                "kind": it.kind,
                "gap": (it.report_doc or {}).get("gap"),
            }
            for it in s.iterations
        ],
    }


class SessionStore:
    """In-memory registry backed by one directory per session."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._load_existing()

    def _load_existing(self) -> None:
        for meta_path in sorted(self.root.glob("*/meta.json")):
            try:
                self._load_session(meta_path.parent)
            except Exception:
                continue  # skip unreadable session directories

    def _load_session(self, sdir: Path) -> None:
        meta = json.loads((sdir / "meta.json").read_text(encoding="utf-8"))
        dataset = ingest.Dataset(
            columns=meta["columns"],
            x_raw=np.asarray(meta["x_raw"], dtype=float),
            y=np.asarray(meta["y"], dtype=float),
        )
        config = ingest.config_from_doc(meta["config"])
        ranges = np.asarray(meta["input_ranges"], dtype=float)
        session = Session(
            id=meta["id"],
            dataset=dataset,
            config=config,
            ranges=ranges,
            x_cube=ingest.scale_to_cube(dataset.x_raw, ranges),
            constraint_set=[cs.constraint_from_record(r) for r in meta["constraints"]],
            status="idle",
            failure=meta.get("failure"),
        )
        for it_path in sorted(sdir.glob("iteration_*.json")):
            doc = json.loads(it_path.read_text(encoding="utf-8"))
            session.iterations.append(
                Iteration(
                    number=doc["number"],
                    model=md.model_from_doc(doc["model"]),
                    report_doc=doc.get("report"),
                    kind=doc["kind"],
                )
            )
        self._sessions[session.id] = session

    def persist_meta(self, s: Session) -> None:
        sdir = self.root / s.id
        sdir.mkdir(parents=True, exist_ok=True)
        meta = {
            "id": s.id,
            "columns": s.dataset.columns,
            "x_raw": [[float(v) for v in row] for row in s.dataset.x_raw],
            "y": [float(v) for v in s.dataset.y],
            "config": s.config.to_doc(),
            "input_ranges": [[float(a), float(b)] for a, b in s.ranges],
            "constraints": [cs.constraint_to_record(c) for c in s.constraint_set],
            "failure": s.failure,
        }
        (sdir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")

    def persist_iteration(self, s: Session, it: Iteration) -> None:
        sdir = self.root / s.id
        sdir.mkdir(parents=True, exist_ok=True)
        doc = {
            "number": it.number,
            "kind": it.kind,
            "model": md.model_to_doc(it.model),
            "report": it.report_doc,
        }
        path = sdir / f"iteration_{it.number:04d}.json"
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")

    def add(self, s: Session) -> None:
        with self._lock:
            self._sessions[s.id] = s
        self.persist_meta(s)

    def get(self, session_id: str) -> Session:
        with self._lock:
            s = self._sessions.get(session_id)
        if s is None:
            raise HTTPException(status_code=404, detail={"code": "unknown_session",
                                                         "message": f"no session {session_id}"})
        return s


def _error(status: int, code: str, message: str, **extra) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "message": message, **extra})


def _parse_anchor(anchor: str, d: int) -> np.ndarray:
    try:
        vals = np.asarray([float(t) for t in anchor.split(",")], dtype=float)
    except ValueError:
        raise HTTPException(status_code=400, detail={
            "code": "bad_anchor", "message": f"anchor must be {d} comma-separated numbers"})
    if vals.shape[0] != d:
        raise HTTPException(status_code=400, detail={
            "code": "bad_anchor", "message": f"anchor must have {d} coordinates"})
    return vals


def create_app(session_dir: Path | str = "./sessions", ui_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="shape-constrained regression workbench")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(Path(session_dir))
    app.state.store = store

    @app.exception_handler(HTTPException)
    async def http_exc(request, exc: HTTPException):
        detail = exc.detail if isinstance(exc.detail, dict) else {
            "code": "error", "message": str(exc.detail)}
        return JSONResponse(status_code=exc.status_code, content=detail)

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/sessions", status_code=201)
    def create_session(body: CreateSessionBody):
        try:
            dataset = ingest.parse_dataset_csv(body.csv, source="upload")
            config = ingest.config_from_doc({"format": ingest.RUN_CONFIG_FORMAT, **body.config})
            if not config.degrees:
                raise ValueError("config must name per-axis degrees")
            if len(config.degrees) != dataset.d:
                raise ValueError(
                    f"config names {len(config.degrees)} degrees for {dataset.d} input columns"
                )
            ranges = ingest.resolve_ranges(dataset, config)
            x_cube = ingest.scale_to_cube(dataset.x_raw, ranges)
        except CsvFormatError as exc:
            return _error(400, "invalid_csv", str(exc), line=exc.line, column=exc.column)
        except ValueError as exc:
            return _error(400, "invalid_config", str(exc))

        session = Session(
            id=secrets.token_hex(8),
            dataset=dataset,
            config=config,
            ranges=ranges,
            x_cube=x_cube,
            constraint_set=[],
        )
        fm = session.feature_map
        w0 = qp.solve_ridge(ft.design_matrix(fm, x_cube), dataset.y, config.lam)
        model0 = md.TrainedModel(
            feature_map=fm, w=w0, input_ranges=ranges, constraint_set=(),
            provenance={"mode": "ridge", "lambda": config.lam,
                        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S")},
        )
        session.iterations.append(Iteration(number=0, model=model0, report_doc=None, kind="ridge"))
        store.add(session)
        store.persist_iteration(session, session.iterations[0])
        return _session_summary(session)

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str):
        return _session_summary(store.get(session_id))

    @app.get("/sessions/{session_id}/iterations")
    def list_iterations(session_id: str):
        s = store.get(session_id)
        return {"iterations": _session_summary(s)["iterations"]}

    def _iteration(s: Session, k: int) -> Iteration:
        if not 0 <= k < len(s.iterations):
            raise HTTPException(status_code=404, detail={
                "code": "unknown_iteration", "message": f"iteration {k} does not exist"})
        return s.iterations[k]

    @app.get("/sessions/{session_id}/iterations/{k}/slice")
    def get_slice(session_id: str, k: int, axis: int, anchor: str, resolution: int = 101):
        s = store.get(session_id)
        it = _iteration(s, k)
        model = it.model
        if not 0 <= axis < model.input_dim:
            raise HTTPException(status_code=400, detail={
                "code": "bad_axis", "message": f"axis {axis} out of range"})
        anchor_raw = _parse_anchor(anchor, model.input_dim)
        try:
            pairs = md.slice_model(model, anchor_raw, axis, resolution)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail={
                "code": "bad_slice", "message": str(exc)})
        anchor_cube = model.scale(anchor_raw)
        # projected training data: distance is off-axis, in scaled cube units
        others = [j for j in range(model.input_dim) if j != axis]
        diffs = s.x_cube[:, others] - anchor_cube[others]
        dists = np.sqrt(np.sum(diffs**2, axis=1))
        points = [
            {
                "t": float(s.dataset.x_raw[i, axis]),
                "y": float(s.dataset.y[i]),
                "distance": float(dists[i]),
                "on_axis": bool(dists[i] <= ON_AXIS_TOL),
            }
            for i in range(s.dataset.n)
        ]
        return {
            "iteration": k,
            "axis": axis,
            "axis_name": s.dataset.columns[axis],
            "anchor": [float(v) for v in anchor_raw],
            "extrapolation": model.extrapolates(anchor_raw),
            "curve": [{"t": t, "yhat": v} for t, v in pairs],
            "points": points,
        }

    @app.get("/sessions/{session_id}/iterations/{k}/surface")
    def get_surface(session_id: str, k: int, axis1: int, axis2: int,
                    anchor: str, resolution: int = 21):
        s = store.get(session_id)
        it = _iteration(s, k)
        model = it.model
        d = model.input_dim
        if not (0 <= axis1 < d and 0 <= axis2 < d) or axis1 == axis2:
            raise HTTPException(status_code=400, detail={
                "code": "bad_axis", "message": "surface needs two distinct in-range axes"})
        anchor_raw = _parse_anchor(anchor, d)
        lo1, hi1 = model.input_ranges[axis1]
        lo2, hi2 = model.input_ranges[axis2]
        t1 = np.linspace(lo1, hi1, resolution)
        t2 = np.linspace(lo2, hi2, resolution)
        pts = np.tile(anchor_raw, (resolution * resolution, 1))
        g1, g2 = np.meshgrid(t1, t2, indexing="ij")
        pts[:, axis1] = g1.reshape(-1)
        pts[:, axis2] = g2.reshape(-1)
        z = model.predict_batch(pts).reshape(resolution, resolution)
        return {
            "iteration": k, "axis1": axis1, "axis2": axis2,
            "t1": [float(v) for v in t1], "t2": [float(v) for v in t2],
            "z": [[float(v) for v in row] for row in z],
        }

    @app.get("/sessions/{session_id}/anchors")
    def suggest_anchors(session_id: str, count: int = 5):
        s = store.get(session_id)
        if s.dataset.n == 0:
            return _error(400, "empty_dataset", "session has no training data")
        d = s.dataset.d
        sampler = qmc.Sobol(d, scramble=True, seed=s.config.seed)
        pool = sampler.random_base2(int(np.log2(ANCHOR_POOL_SIZE)))
        # fidelity score: distance to the nearest training point (cube units)
        dists = np.full(pool.shape[0], np.inf)
        for start in range(0, pool.shape[0], 512):
            block = pool[start : start + 512]
            dd = np.sqrt(
                np.sum((block[:, None, :] - s.x_cube[None, :, :]) ** 2, axis=2)
            )
            dists[start : start + 512] = dd.min(axis=1)
        pool_idx = np.arange(pool.shape[0])
        near_order = np.lexsort((pool_idx, dists))  # ties broken by pool index
        far_order = np.lexsort((pool_idx, -dists))
        count = max(1, min(count, pool.shape[0] // 2))
        lo_r, hi_r = s.ranges[:, 0], s.ranges[:, 1]

        def pack(idx):
            return [
                {
                    "point": [float(v) for v in lo_r + pool[i] * (hi_r - lo_r)],
                    "cube": [float(v) for v in pool[i]],
                    "distance": float(dists[i]),
                }
                for i in idx
            ]

        return {
            "high_fidelity": pack(near_order[:count]),  # near the data
            "low_fidelity": pack(far_order[:count]),  # far from the data
        }

    @app.post("/sessions/{session_id}/constraints")
    def update_constraints(session_id: str, body: ConstraintOpsBody):
        s = store.get(session_id)
        with s.lock:
            if s.status == "fitting":
                return _error(409, "busy", "session is fitting; try again once idle")
            draft = list(s.constraint_set)
            try:
                for op in body.operations:
                    action = op.get("op")
                    if action == "add":
                        c = cs.constraint_from_record(op.get("constraint", {}))
                        c.check_dimension(s.dataset.d)
                        draft.append(c)
                    elif action == "remove":
                        idx = int(op["index"])
                        if not 0 <= idx < len(draft):
                            raise ValueError(f"no constraint at index {idx}")
                        del draft[idx]
                    elif action == "edit":
                        idx = int(op["index"])
                        if not 0 <= idx < len(draft):
                            raise ValueError(f"no constraint at index {idx}")
                        c = cs.constraint_from_record(op.get("constraint", {}))
                        c.check_dimension(s.dataset.d)
                        draft[idx] = c
                    else:
                        raise ValueError(f"unknown operation {action!r}")
            except (ValueError, KeyError) as exc:
                # transactional: any invalid operation rejects the whole list
                return _error(400, "invalid_operations", str(exc))
            s.constraint_set = draft
            store.persist_meta(s)
            return {"constraints": [cs.constraint_to_record(c) for c in s.constraint_set]}

    def _run_refit(s: Session):
        fm = s.feature_map
        m = fm.dimension
        try:
            problem = sip.SipProblem(
                x=s.x_cube, y=s.dataset.y, feature_map=fm,
                constraints=tuple(s.constraint_set), lam=s.config.lam,
                box_lo=np.full(m, -s.config.box_halfwidth),
                box_hi=np.full(m, s.config.box_halfwidth),
            )
            if s.config.mode == "grid":
                report = sip.solve_grid(problem, s.config.grid_points,
                                        sip.SolveOptions(seed=s.config.seed))
            else:
                report = sip.solve_adaptive(problem, s.config.delta,
                                            sip.SolveOptions(seed=s.config.seed))
            model = md.TrainedModel(
                feature_map=fm, w=report.w, input_ranges=s.ranges,
                constraint_set=tuple(s.constraint_set),
                provenance={
                    "mode": report.mode,
                    "delta": s.config.delta if report.mode == "adaptive" else None,
                    "grid_points": s.config.grid_points if report.mode == "grid" else None,
                    "lambda": s.config.lam,
                    "seed": s.config.seed,
                    "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S"),
                    "gap": None if not np.isfinite(report.gap) else report.gap,
                },
            )
            with s.lock:
                it = Iteration(
                    number=len(s.iterations), model=model,
                    report_doc=report.to_doc(), kind=report.mode,
                )
                s.iterations.append(it)
                s.status = "idle"
                s.failure = None
            store.persist_iteration(s, it)
            store.persist_meta(s)
        except InfeasibleProblem as exc:
            with s.lock:
                s.status = "failed"
                s.failure = {
                    "code": "not_strictly_feasible",
                    "message": str(exc),
                    "constraint_indices": list(exc.constraint_indices),
                    "constraints": [
                        s.constraint_set[i].describe()
                        for i in exc.constraint_indices
                        if 0 <= i < len(s.constraint_set)
                    ],
                }
            store.persist_meta(s)
        except ConvergenceFailure as exc:
            with s.lock:
                s.status = "failed"
                s.failure = {"code": "convergence_failure", "message": str(exc)}
            store.persist_meta(s)
        except Exception as exc:  # surfaced to the client rather than lost in the thread
            with s.lock:
                s.status = "failed"
                s.failure = {"code": "internal_error", "message": str(exc)}
            store.persist_meta(s)

    @app.post("/sessions/{session_id}/refit", status_code=202)
    def refit(session_id: str):
        s = store.get(session_id)
        with s.lock:
            if s.status == "fitting":
                return _error(409, "refit_in_progress", "a refit is already running")
            s.status = "fitting"
            s.failure = None
        thread = threading.Thread(target=_run_refit, args=(s,), daemon=True)
        thread.start()
        return {"status": "fitting"}

    @app.get("/sessions/{session_id}/job")
    def job_status(session_id: str):
        s = store.get(session_id)
        return {"status": s.status, "failure": s.failure,
                "iterations": len(s.iterations)}

    @app.get("/sessions/{session_id}/iterations/{k}/audit")
    def audit_iteration(session_id: str, k: int, seed: int = 0,
                        anchors: int = ev.AUDIT_ANCHORS, line: int = ev.AUDIT_LINE_POINTS,
                        tol: float = ev.AUDIT_TOL):
        s = store.get(session_id)
        it = _iteration(s, k)
        report = ev.audit_violations(
            it.model, tuple(s.constraint_set),
            n_anchors=anchors, n_line=line, seed=seed, tol=tol,
        )
        return report.to_doc()

    @app.get("/sessions/{session_id}/export")
    def export_model(session_id: str, iteration: int | None = None):
        s = store.get(session_id)
        k = len(s.iterations) - 1 if iteration is None else iteration
        it = _iteration(s, k)
        return md.model_to_doc(it.model)

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
