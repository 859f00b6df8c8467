"""HTTP + WebSocket front end for the session engine.

Read-only HTTP endpoints expose the catalog, embodiments, baselines,
reports, and stored trials. The WebSocket channel speaks the message
protocol: sessions created over a connection are ticked in real time at
the session tick period (or manually in replay/test sessions) and their
state is broadcast at the configured rate.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
from pathlib import Path

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse

from ..scoring import ScoringError, aggregate, read_trials
from .protocol import PROTOCOL_VERSION, ProtocolError, check_version, parse_input_frame
from .session import Session, SessionError, SessionManager


def task_summary(task) -> dict:
    d = {
        "id": task.id,
        "name": task.name,
        "configuration": task.configuration,
        "axis_tag": task.axis_tag,
        "mechanism": task.mechanism_type,
        "object": task.object.shape,
    }
    params = task.mechanism_params
    if task.mechanism_type == "notch_rod":
        d["notches"] = len(params["notches"])
        d["gate_angles_deg"] = [n["half_angle_deg"] for n in params["notches"]]
    elif task.mechanism_type == "curved_rail":
        d["sections"] = len(params["sections"])
        if "stick_limit_deg" in params:
            d["stick_limit_deg"] = params["stick_limit_deg"]
    elif task.mechanism_type == "gear":
        d["ratio"] = params.get("ratio", 3.0)
    elif task.mechanism_type == "screw":
        d["pitch"] = params.get("pitch", 0.002)
        d["travel"] = params.get("travel", 0.006)
    return d


def _record_score(manager: SessionManager, record) -> dict:
    """Score fields reported with the record so clients never recompute
    them; speed needs a baseline and is 0 otherwise."""
    speed = 0.0
    if manager.baselines is not None and record.task_id in manager.baselines:
        from ..scoring import speed_score

        speed = speed_score(manager.baselines.time(record.task_id), record.duration,
                            record.completed)
    return {
        "correctness": record.correctness,
        "speed": speed,
        "score": (4.0 * record.correctness + speed) / 5.0,
    }


def create_app(manager: SessionManager | None = None,
               console_dir=None) -> FastAPI:
    manager = manager or SessionManager()
    app = FastAPI(title="dexterity benchmark session service")
    app.state.manager = manager

    if console_dir is not None and Path(console_dir).joinpath("index.html").exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=str(console_dir), html=True),
                  name="console")

    @app.get("/tasks")
    def tasks():
        return {
            "protocol_version": PROTOCOL_VERSION,
            "tasks": [task_summary(t) for t in manager.catalog],
        }

    @app.get("/embodiments")
    def embodiments():
        out = []
        for name in sorted(manager.model.embodiments):
            emb = manager.model.embodiments[name]
            out.append({
                "name": name,
                "dof_count": emb.dof_count,
                "locked": [manager.model.joint_names[i]
                           for i, locked in enumerate(emb.lock_mask) if locked],
                "joints": manager.model.joint_names,
            })
        return {"protocol_version": PROTOCOL_VERSION, "embodiments": out}

    @app.get("/baselines")
    def baselines():
        if manager.baselines is None:
            return JSONResponse({"available": False, "baselines": {}}, status_code=200)
        return {"available": True, **manager.baselines.to_dict()}

    @app.get("/reports")
    def reports():
        if manager.store_path is None or not Path(manager.store_path).exists():
            return JSONResponse({"error": "no trial store configured"}, status_code=404)
        if manager.baselines is None:
            return JSONResponse({"error": "no baselines configured"}, status_code=404)
        try:
            report = aggregate(read_trials(manager.store_path), manager.baselines)
        except ScoringError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return report.to_dict()

    @app.get("/trials/{trial_id}")
    def trial(trial_id: int):
        if manager.store_path is None or not Path(manager.store_path).exists():
            return JSONResponse({"error": "no trial store configured"}, status_code=404)
        records = read_trials(manager.store_path)
        if not (0 <= trial_id < len(records)):
            return JSONResponse({"error": f"no trial {trial_id}"}, status_code=404)
        return json.loads(records[trial_id].to_json())

    @app.websocket("/ws")
    async def ws(websocket: WebSocket):
        await websocket.accept()
        out: asyncio.Queue = asyncio.Queue()
        session: Session | None = None
        ticker: asyncio.Task | None = None
        loop = asyncio.get_running_loop()
        t_base = loop.time()

        async def sender():
            while True:
                msg = await out.get()
                await websocket.send_text(json.dumps(msg, sort_keys=True))

        async def live_ticker(s: Session):
            per_state = max(1, int(round(s.config.state_period / s.config.tick_period)))
            k = 0
            while s.status != "finished":
                now = loop.time() - t_base
                update = s.tick(now)
                k += 1
                if k % per_state == 0:
                    out.put_nowait(update)
                await asyncio.sleep(s.config.tick_period)

        send_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    out.put_nowait(ProtocolError("bad_message", "not valid JSON").to_message())
                    continue
                mtype = msg.get("type")
                try:
                    if mtype == "create":
                        check_version(msg)
                        if ticker is not None:
                            ticker.cancel()
                        session = manager.create(
                            msg["task_id"], msg["embodiment_id"], msg.get("config"))
                        if not session.config.manual_tick:
                            ticker = asyncio.create_task(live_ticker(session))
                        out.put_nowait(session.state_update())
                    elif session is None:
                        raise ProtocolError("bad_state", "create a session first")
                    elif mtype == "start_trial":
                        check_version(msg)
                        t = msg.get("t")
                        now = float(t) if t is not None else loop.time() - t_base
                        session.start_trial(t=now, practice=bool(msg.get("practice", False)))
                        out.put_nowait(session.state_update())
                    elif mtype == "input":
                        try:
                            frame = parse_input_frame(msg)
                        except ProtocolError:
                            session.count_dropped()
                            continue
                        session.submit_frame(frame)
                    elif mtype == "tick":
                        if not session.config.manual_tick:
                            raise ProtocolError("bad_state",
                                                "tick messages need a manual_tick session")
                        update = session.tick(float(msg["now"]))
                        out.put_nowait(update)
                    elif mtype == "finalize":
                        check_version(msg)
                        record, trial_id = manager.finalize(session)
                        out.put_nowait({
                            "type": "record",
                            "protocol_version": PROTOCOL_VERSION,
                            "trial_id": trial_id,
                            "record": json.loads(record.to_json()),
                            "score": _record_score(manager, record),
                        })
                    else:
                        raise ProtocolError("bad_message", f"unknown message type {mtype!r}")
                except ProtocolError as exc:
                    out.put_nowait(exc.to_message())
                except SessionError as exc:
                    out.put_nowait(ProtocolError("bad_state", str(exc)).to_message())
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            if ticker is not None:
                ticker.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                if ticker is not None:
                    await ticker

    return app
