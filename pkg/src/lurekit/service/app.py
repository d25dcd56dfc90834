"""FastAPI application: REST endpoints around the core package plus the
websocket session protocol for the browser teaching UI."""

from __future__ import annotations

import asyncio
import json
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.staticfiles import StaticFiles
from pydantic import ValidationError

from .. import __version__
from ..policy import load_model
from ..scenarios import make_scene
from ..world import Scene
from .models import (ErrorFrame, HealthResponse, HelloFrame, ModelInfoResponse,
                     ObstacleOut, PROTOCOL_VERSION, SceneResponse, ServerHello,
                     client_frame_adapter)
from .session import SessionState

BROADCAST_DT = 0.1
CLOSE_BAD_VERSION = 4400


def create_app(scene_file: Optional[str] = None,
               model_file: Optional[str] = None,
               data_dir: str = "sessions",
               realtime: bool = True) -> FastAPI:
    scene = Scene.load(scene_file) if scene_file else make_scene("course", seed=0)
    model = load_model(model_file) if model_file else None
    app = FastAPI(title="lurekit", version=__version__)
    app.state.scene = scene
    app.state.model = model
    app.state.data_dir = data_dir
    app.state.realtime = realtime

    @app.get("/health", response_model=HealthResponse)
    def health():
        return HealthResponse(status="ok", version=__version__,
                              protocol=PROTOCOL_VERSION)

    @app.get("/api/scene", response_model=SceneResponse)
    def get_scene():
        s = app.state.scene
        return SceneResponse(
            id=s.id, bounds_m=s.bounds,
            obstacles=[ObstacleOut(kind=o.kind, x=o.pose.x, y=o.pose.y,
                                   yaw=o.pose.yaw, dims=list(o.dims))
                       for o in s.obstacles],
            tiles=list(s.tiles))

    @app.get("/api/model", response_model=ModelInfoResponse)
    def model_info():
        m = app.state.model
        if m is None:
            return ModelInfoResponse(loaded=False)
        return ModelInfoResponse(loaded=True, layers=m.layer_sizes,
                                 activation=m.activation)

    @app.websocket("/ws")
    async def ws_session(ws: WebSocket):
        await ws.accept()
        session = SessionState(app.state.scene, app.state.model,
                               data_dir=app.state.data_dir)
        await ws.send_text(ServerHello(mode=session.mode,
                                       scene_id=session.scene.id).model_dump_json())
        try:
            first = await ws.receive_text()
            frame = client_frame_adapter.validate_json(first)
            if not isinstance(frame, HelloFrame) or frame.version != PROTOCOL_VERSION:
                await ws.close(code=CLOSE_BAD_VERSION,
                               reason="protocol version mismatch")
                return
        except (ValidationError, json.JSONDecodeError):
            await ws.close(code=CLOSE_BAD_VERSION, reason="expected hello frame")
            return
        except WebSocketDisconnect:
            return

        inbox: asyncio.Queue = asyncio.Queue()

        async def reader():
            try:
                while True:
                    inbox.put_nowait(await ws.receive_text())
            except WebSocketDisconnect:
                inbox.put_nowait(None)

        reader_task = asyncio.create_task(reader())
        next_tick = time.monotonic()
        try:
            while True:
                # apply queued commands at the tick boundary
                closed = False
                while not inbox.empty():
                    raw = inbox.get_nowait()
                    if raw is None:
                        closed = True
                        break
                    try:
                        frame = client_frame_adapter.validate_json(raw)
                    except (ValidationError, json.JSONDecodeError) as e:
                        await ws.send_text(ErrorFrame(
                            message=f"malformed frame: {e.__class__.__name__}").model_dump_json())
                        continue
                    reply = session.apply(frame)
                    await ws.send_text(reply.model_dump_json())
                if closed:
                    break
                state = session.tick_once()
                await ws.send_text(state.model_dump_json())
                next_tick += BROADCAST_DT
                if app.state.realtime:
                    delay = next_tick - time.monotonic()
                    if delay > 0:
                        await asyncio.sleep(delay)
                    else:
                        next_tick = time.monotonic()
                else:
                    await asyncio.sleep(0)
        except WebSocketDisconnect:
            pass
        finally:
            reader_task.cancel()
            session.flush_recording()

    ui_dir = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    return app
