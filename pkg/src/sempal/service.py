"""Session-oriented HTTP API for interactive editing.

A session uploads an image (plus optional network features) once; palette,
RBF model and weight field are computed at creation and never change.
Each edit request re-solves from the original image, so edits are pure
functions of (session, strokes) and concurrent edits need no locking.

Environment configuration: SEMPAL_HOST, SEMPAL_PORT, SEMPAL_SESSION_TTL
(seconds, default 1800), SEMPAL_MAX_PIXELS (default 4_000_000),
SEMPAL_CORS_ORIGIN (default "*").
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field as dc_field

from fastapi import FastAPI, File, Form, Request, Response, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from . import editor, features, imgio, palette, weights
from .cli import RunConfig
from .errors import DataError, NumericalError


@dataclass
class Session:
    id: str
    image: imgio.ImageRGB
    field: features.FeatureField
    palette: palette.SemanticPalette
    model: weights.RbfModel
    weight_field: weights.WeightField
    run_config: RunConfig
    created_at: float
    last_access: float


@dataclass
class SessionStore:
    ttl: float
    sessions: dict[str, Session] = dc_field(default_factory=dict)
    lock: threading.Lock = dc_field(default_factory=threading.Lock)

    def put(self, session: Session) -> None:
        with self.lock:
            self._evict_expired()
            self.sessions[session.id] = session

    def get(self, session_id: str) -> Session | None:
        with self.lock:
            self._evict_expired()
            session = self.sessions.get(session_id)
            if session is not None:
                session.last_access = time.monotonic()
            return session

    def delete(self, session_id: str) -> None:
        with self.lock:
            self.sessions.pop(session_id, None)

    def _evict_expired(self) -> None:
        now = time.monotonic()
        dead = [sid for sid, s in self.sessions.items() if now - s.last_access > self.ttl]
        for sid in dead:
            del self.sessions[sid]


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def create_app(
    ttl: float | None = None,
    max_pixels: int | None = None,
    cors_origin: str | None = None,
) -> FastAPI:
    ttl = ttl if ttl is not None else float(os.environ.get("SEMPAL_SESSION_TTL", "1800"))
    max_pixels = max_pixels if max_pixels is not None else int(
        os.environ.get("SEMPAL_MAX_PIXELS", "4000000")
    )
    cors_origin = cors_origin or os.environ.get("SEMPAL_CORS_ORIGIN", "*")

    app = FastAPI(title="sempal")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(ttl=ttl)
    app.state.store = store

    @app.post("/sessions")
    async def create_session(
        image: UploadFile = File(...),
        features_file: UploadFile | None = File(default=None, alias="features"),
        config: str | None = Form(default=None),
    ):
        try:
            run_cfg = _parse_run_config(config)
            img = imgio.decode_image(await image.read(), source=image.filename or "upload")
        except DataError as exc:
            return _error(400, str(exc))
        if img.width * img.height > max_pixels:
            return _error(413, f"image exceeds {max_pixels} pixels")

        try:
            if features_file is not None:
                raw = imgio.decode_feature_tensor(
                    await features_file.read(), source=features_file.filename or "upload"
                )
                if (raw.width, raw.height) != (img.width, img.height):
                    return _error(422, "feature tensor dimensions do not match the image")
                field = features.prepare_field(raw)
            else:
                field = features.fallback_field(img, blur_sigma=run_cfg.blur_sigma)
        except DataError as exc:
            return _error(400, str(exc))

        try:
            pal = palette.extract_palette(
                img, field, run_cfg.palette_config(), run_cfg.superpixel_config()
            )
            model = weights.fit_lambda(pal)
            wf = weights.weight_field(img, field, model)
        except DataError as exc:
            return _error(400, str(exc))
        except NumericalError as exc:
            return _error(422, str(exc))

        now = time.monotonic()
        session = Session(
            id=uuid.uuid4().hex,
            image=img, field=field, palette=pal, model=model, weight_field=wf,
            run_config=run_cfg, created_at=now, last_access=now,
        )
        store.put(session)
        return {
            "session_id": session.id,
            "k": pal.k,
            "palette": palette.palette_to_dict(pal)["entries"],
        }

    @app.post("/sessions/{session_id}/edit")
    async def edit_session(session_id: str, request: Request):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        try:
            doc = json.loads(await request.body())
        except json.JSONDecodeError as exc:
            return _error(400, f"invalid stroke JSON: {exc}")
        try:
            strokes = imgio.strokes_from_dict(doc)
            if not strokes.strokes:
                raise DataError("empty stroke list")
            if (strokes.image_width, strokes.image_height) != (
                session.image.width, session.image.height
            ):
                raise DataError("stroke document dimensions do not match the session image")
            problem = editor.build_problem(
                session.image, session.field, session.model, session.weight_field,
                strokes, session.palette.config,
                constraint_samples=session.run_config.samples,
            )
            solution = editor.solve_edit(problem)
        except DataError as exc:
            return _error(400, str(exc))
        except NumericalError as exc:
            return _error(422, str(exc))

        edited = editor.apply_edit(session.image, session.weight_field, solution)
        png = imgio.encode_png(edited)
        deltas = [[float(v) for v in row] for row in solution.deltas]
        if "image/png" in request.headers.get("accept", ""):
            return Response(
                content=png,
                media_type="image/png",
                headers={
                    "X-Deltas": json.dumps(deltas),
                    "X-Energy": repr(solution.energy),
                    "X-Fidelity": repr(solution.fidelity),
                    "X-Propagation": repr(solution.propagation),
                },
            )
        return {
            "image_png_base64": base64.b64encode(png).decode("ascii"),
            "deltas": deltas,
            "energy": solution.energy,
            "fidelity": solution.fidelity,
            "propagation": solution.propagation,
        }

    @app.get("/sessions/{session_id}/weights/{entry}")
    async def weight_map(session_id: str, entry: int):
        session = store.get(session_id)
        if session is None:
            return _error(404, "unknown session")
        if not (0 <= entry < session.palette.k):
            return _error(416, f"entry {entry} out of range (k={session.palette.k})")
        png = imgio.encode_gray_png(session.weight_field.data[:, :, entry])
        return Response(content=png, media_type="image/png")

    @app.delete("/sessions/{session_id}", status_code=204)
    async def delete_session(session_id: str):
        store.delete(session_id)  # idempotent; unknown ids are fine
        return Response(status_code=204)

    return app


def _parse_run_config(config: str | None) -> RunConfig:
    cfg = RunConfig()
    if not config:
        return cfg
    try:
        doc = json.loads(config)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid config JSON: {exc}")
    if not isinstance(doc, dict):
        raise DataError("config must be a JSON object")
    for key, value in doc.items():
        if not hasattr(cfg, key):
            raise DataError(f"unknown config key: {key}")
        try:
            setattr(cfg, key, type(getattr(cfg, key))(value))
        except (TypeError, ValueError) as exc:
            raise DataError(f"bad config value for {key}: {exc}")
    return cfg


app = create_app()


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(
        "sempal.service:app",
        host=os.environ.get("SEMPAL_HOST", "127.0.0.1"),
        port=int(os.environ.get("SEMPAL_PORT", "8000")),
    )
