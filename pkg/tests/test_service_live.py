"""End-to-end check against a real served instance: HTTP endpoints and a
live (wall-clock-ticked) WebSocket session."""

import asyncio
import json
import socket
import subprocess
import sys
import time

import httpx
import pytest
import websockets

from pomdar.service import PROTOCOL_VERSION


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="module")
def server(tmp_path_factory):
    port = free_port()
    store = tmp_path_factory.mktemp("live") / "trials.jsonl"
    proc = subprocess.Popen(
        [sys.executable, "-m", "pomdar.cli", "--store", str(store),
         "serve", "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
    )
    base = f"http://127.0.0.1:{port}"
    try:
        for _ in range(100):
            try:
                if httpx.get(base + "/tasks", timeout=1.0).status_code == 200:
                    break
            except httpx.TransportError:
                time.sleep(0.1)
        else:
            raise RuntimeError("server did not come up")
        yield base, port
    finally:
        proc.terminate()
        proc.wait(timeout=10)


def test_http_endpoints_live(server):
    base, _ = server
    tasks = httpx.get(base + "/tasks").json()["tasks"]
    assert len(tasks) == 18
    embs = httpx.get(base + "/embodiments").json()["embodiments"]
    assert {e["name"] for e in embs} == {"hand_2", "hand_3", "hand_5", "hand_full"}


def test_live_session_streams_state(server):
    _, port = server

    async def scenario():
        uri = f"ws://127.0.0.1:{port}/ws"
        async with websockets.connect(uri) as ws:
            await ws.send(json.dumps({
                "type": "create", "protocol_version": PROTOCOL_VERSION,
                "task_id": "G4", "embodiment_id": "hand_full",
            }))
            msg = json.loads(await asyncio.wait_for(ws.recv(), 5))
            assert msg["type"] == "state" and msg["status"] == "idle"

            await ws.send(json.dumps({"type": "start_trial",
                                      "protocol_version": PROTOCOL_VERSION}))
            # live ticker broadcasts at the state rate; elapsed must advance
            seen = []
            deadline = time.time() + 5
            while len(seen) < 4 and time.time() < deadline:
                msg = json.loads(await asyncio.wait_for(ws.recv(), 5))
                if msg["type"] == "state" and msg["status"] == "running":
                    seen.append(msg["elapsed"])
            assert len(seen) >= 4
            assert seen == sorted(seen) and seen[-1] > seen[0]

            await ws.send(json.dumps({"type": "finalize",
                                      "protocol_version": PROTOCOL_VERSION}))
            while True:
                msg = json.loads(await asyncio.wait_for(ws.recv(), 5))
                if msg["type"] == "record":
                    break
            assert msg["record"]["task_id"] == "G4"
            assert msg["record"]["correctness"] == 0.0

    asyncio.run(scenario())
