"""HTTP + websocket surface over the session manager.

REST handles session CRUD; a per-session websocket channel carries the
bidirectional message stream (instruction, clarificationAnswer, reset,
loadMission in; everything else out).
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, PlainTextResponse

from ..data.missions import CDFMission
from .manager import AgentFactory, ServiceError, SessionManager
from .protocol import CLIENT_KINDS, SessionMessage


def make_app(
    agent_factory: AgentFactory,
    missions: Optional[dict[str, CDFMission]] = None,
    layouts: Optional[dict[str, dict]] = None,
) -> FastAPI:
    app = FastAPI(title="chorebot session service")
    manager = SessionManager(agent_factory)
    missions = missions or {}
    layouts = layouts or {}
    app.state.manager = manager
    app.state.missions = missions

    def _resolve_mission(payload: dict) -> Optional[CDFMission]:
        mission_id = payload.get("missionId")
        if mission_id is None:
            return None
        if mission_id not in missions:
            raise ServiceError("unknownMission", f"no mission {mission_id!r}")
        return missions[mission_id]

    def _resolve_layout(payload: dict) -> Optional[dict]:
        if "layout" in payload and payload["layout"] is not None:
            return payload["layout"]
        layout_id = payload.get("layoutId")
        if layout_id is None:
            return None
        if layout_id not in layouts:
            raise ServiceError("unknownLayout", f"no layout {layout_id!r}")
        return layouts[layout_id]

    @app.post("/sessions")
    def create_session(payload: dict):
        try:
            mission = _resolve_mission(payload)
            layout = _resolve_layout(payload)
            managed, messages = manager.create_session(
                layout=layout,
                mission=mission,
                qa_mode=payload.get("qaMode", "never"),
                seed=int(payload.get("seed", 0)),
            )
        except ServiceError as err:
            return JSONResponse(status_code=400, content={"error": err.code, "message": str(err)})
        return {
            "sessionId": managed.session_id,
            "messages": [m.to_json() for m in messages],
        }

    @app.get("/sessions")
    def list_sessions():
        return {"sessions": manager.list_sessions()}

    @app.delete("/sessions/{session_id}")
    def delete_session(session_id: str):
        try:
            manager.delete_session(session_id)
        except ServiceError as err:
            return JSONResponse(status_code=404, content={"error": err.code, "message": str(err)})
        return {"deleted": session_id}

    @app.get("/sessions/{session_id}/trajectory")
    def get_trajectory(session_id: str):
        try:
            document = manager.export(session_id)
        except ServiceError as err:
            return JSONResponse(status_code=404, content={"error": err.code, "message": str(err)})
        return PlainTextResponse(document, media_type="application/jsonl")

    @app.get("/missions")
    def list_missions():
        return {
            "missions": [
                {"id": m.mission_id, "category": m.category,
                 "instructions": [i.text for i in m.instructions]}
                for m in missions.values()
            ]
        }

    @app.websocket("/sessions/{session_id}/channel")
    async def channel(websocket: WebSocket, session_id: str):
        await websocket.accept()
        try:
            manager.get(session_id)
        except ServiceError as err:
            await websocket.send_json(
                SessionMessage("error", session_id, 0, {"code": err.code, "message": str(err)}).to_json()
            )
            await websocket.close()
            return
        try:
            while True:
                doc = await websocket.receive_json()
                kind = doc.get("kind")
                payload = doc.get("payload", {})
                if kind not in CLIENT_KINDS:
                    managed = manager.get(session_id)
                    messages = [manager._error(managed, "badKind", f"unknown message kind {kind!r}")]
                elif kind == "instruction":
                    messages = manager.post_instruction(session_id, payload.get("text", ""))
                elif kind == "clarificationAnswer":
                    messages = manager.post_clarification_answer(session_id, payload.get("text", ""))
                elif kind == "reset":
                    messages = manager.reset(session_id)
                elif kind == "loadMission":
                    try:
                        mission = _resolve_mission(payload)
                        managed = manager.get(session_id)
                        managed.mission = mission
                        messages = manager.reset(session_id)
                    except ServiceError as err:
                        managed = manager.get(session_id)
                        messages = [manager._error(managed, err.code, str(err))]
                else:  # createSession over the channel is not supported
                    managed = manager.get(session_id)
                    messages = [manager._error(managed, "badKind", "use POST /sessions to create sessions")]
                for message in messages:
                    await websocket.send_json(message.to_json())
        except WebSocketDisconnect:
            return

    return app
