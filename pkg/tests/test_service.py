"""Network service: handshake, hold semantics, validation, replay fidelity."""

import glob
import json
import os
import socket
import time

import pytest

from droem.errors import BindError
from droem.session.config import Schedule, SessionConfig
from droem.session.record import verify_record
from droem.session.service import SessionService


def service_config():
    return SessionConfig(h="3/4", D=8, N=3, angular_order=2,
                         schedules=(Schedule(base=0.3), Schedule(base=0.1)),
                         dt=0.01, frame_every=2, duration=10.0, seed=5,
                         lattice={"delta_i": 0.08, "delta_o": 0.01,
                                  "width": 32, "height": 32})


class Client:
    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=5)
        self.sock.settimeout(5)
        self.buf = b""

    def send(self, msg):
        self.sock.sendall(json.dumps(msg).encode() + b"\n")

    def recv(self, timeout=5.0):
        end = time.monotonic() + timeout
        while b"\n" not in self.buf:
            self.sock.settimeout(max(0.05, end - time.monotonic()))
            chunk = self.sock.recv(65536)
            if not chunk:
                return None
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        return json.loads(line)

    def close(self):
        try:
            self.sock.close()
        except OSError:
            pass


@pytest.fixture
def service(tmp_path):
    svc = SessionService(service_config(), port=0, record_dir=str(tmp_path / "runs"),
                         realtime=False)
    svc.start_background()
    yield svc
    svc.stop()


def drain_until(client, mtype, limit=200):
    for _ in range(limit):
        msg = client.recv()
        if msg is None:
            return None
        if msg.get("type") == mtype:
            return msg
    return None


class TestService:
    def test_handshake_and_silent_frames(self, service):
        c = Client(service.port)
        hello = c.recv()
        assert hello["type"] == "hello"
        cfg = c.recv()
        assert cfg["type"] == "config" and cfg["config"]["D"] == 8
        # no gaze sent: frames still flow on the default hold at u = 0
        frame = drain_until(c, "frame")
        assert frame is not None
        assert frame["w"] == 32 and frame["encoding"] == "f32le"
        c.send({"type": "bye"})
        c.close()

    def test_gaze_domain_error_closes(self, service):
        c = Client(service.port)
        c.recv(), c.recv()
        c.send({"type": "gaze", "t": 0.0, "u": [2.0, 0.0], "du": [0, 0], "xi": []})
        msg = c.recv()
        seen_error = False
        for _ in range(300):
            if msg is None:
                break
            if msg.get("type") == "error":
                assert msg["code"] == "gaze_domain"
                seen_error = True
                break
            msg = c.recv()
        assert seen_error
        c.close()

    def test_malformed_message_error(self, service):
        c = Client(service.port)
        c.recv(), c.recv()
        c.sock.sendall(b"this is not json\n")
        for _ in range(300):
            msg = c.recv()
            if msg is None or msg.get("type") == "error":
                break
        assert msg is None or msg["code"] in ("malformed", "unknown_type")
        c.close()

    def test_record_flushed_and_replays(self, service, tmp_path):
        c = Client(service.port)
        c.recv(), c.recv()
        t0 = time.monotonic()
        k = 0
        while time.monotonic() - t0 < 0.4:
            c.send({"type": "gaze", "t": 0.01 * k, "u": [0.3, 0.1],
                    "du": [0.01, 0.0], "xi": [0.2]})
            k += 1
            time.sleep(0.01)
        drain_until(c, "frame")
        c.send({"type": "bye"})
        c.close()
        for _ in range(100):
            records = glob.glob(str(tmp_path / "runs" / "*.jsonl"))
            if records:
                break
            time.sleep(0.05)
        assert records, "no run record flushed"
        time.sleep(0.3)       # let the writer finish
        result = verify_record(records[0])
        assert result["ok"], result["detail"]

    def test_bind_error(self, service):
        with pytest.raises(BindError):
            SessionService(service_config(), port=service.port)
