"""The session service: one evolution loop per connection.

Transport is newline-delimited JSON over a duplex stream; a connection that
opens with an HTTP upgrade request is served over WebSocket framing instead
(one JSON message per text frame).  Message types: hello, config, gaze,
frame, error, bye.

Concurrency contract per connection: one reader thread feeds a bounded
ingestion queue (drop-oldest beyond 256, with a counter), the stepper owns
the evolution state, one writer thread drains the outgoing queue.
"""

from __future__ import annotations

import base64
import collections
import hashlib
import json
import logging
import os
import socket
import struct
import threading
import time
from typing import Optional

from ..errors import BindError, ParseError, StabilityError
from ..render import encode_frame
from .config import SessionConfig
from .events import GazeEvent
from .loop import Simulator
from .record import frame_digest

log = logging.getLogger("droem.service")

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
QUEUE_LIMIT = 256


class _Transport:
    """NDJSON over a socket, with optional WebSocket framing."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.ws = False
        self.buf = b""
        self.lock = threading.Lock()

    def handshake(self) -> bool:
        """Peek the first bytes; upgrade to WebSocket on an HTTP request.

        A raw NDJSON client may connect silently (the server speaks first),
        so the peek uses a short timeout and falls back to raw mode."""
        try:
            self.sock.settimeout(0.25)
            first = self.sock.recv(4, socket.MSG_PEEK)
        except socket.timeout:
            self.sock.settimeout(None)
            return True
        finally:
            self.sock.settimeout(None)
        if first[:4] != b"GET ":
            return True
        data = b""
        while b"\r\n\r\n" not in data:
            chunk = self.sock.recv(4096)
            if not chunk:
                return False
            data += chunk
        headers = {}
        for line in data.split(b"\r\n")[1:]:
            if b":" in line:
                k, v = line.split(b":", 1)
                headers[k.strip().lower().decode()] = v.strip().decode()
        key = headers.get("sec-websocket-key")
        if not key:
            return False
        accept = base64.b64encode(
            hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        resp = ("HTTP/1.1 101 Switching Protocols\r\n"
                "Upgrade: websocket\r\nConnection: Upgrade\r\n"
                f"Sec-WebSocket-Accept: {accept}\r\n\r\n")
        self.sock.sendall(resp.encode())
        self.ws = True
        return True

    # -- receive ----------------------------------------------------------

    def recv_message(self) -> Optional[dict]:
        raw = self._recv_ws() if self.ws else self._recv_line()
        if raw is None:
            return None
        raw = raw.strip()
        if not raw:
            return {}
        return json.loads(raw)

    def _recv_line(self) -> Optional[bytes]:
        while b"\n" not in self.buf:
            chunk = self.sock.recv(65536)
            if not chunk:
                return None
            self.buf += chunk
        line, self.buf = self.buf.split(b"\n", 1)
        return line

    def _read_exact(self, n: int) -> Optional[bytes]:
        out = b""
        while len(out) < n:
            chunk = self.sock.recv(n - len(out))
            if not chunk:
                return None
            out += chunk
        return out

    def _recv_ws(self) -> Optional[bytes]:
        while True:
            head = self._read_exact(2)
            if head is None:
                return None
            b0, b1 = head
            opcode = b0 & 0x0F
            masked = bool(b1 & 0x80)
            length = b1 & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            payload = self._read_exact(length) if length else b""
            if payload is None:
                return None
            if masked:
                payload = bytes(c ^ mask[i % 4] for i, c in enumerate(payload))
            if opcode == 0x8:      # close
                return None
            if opcode == 0x9:      # ping -> pong
                self._send_ws_frame(0xA, payload)
                continue
            if opcode in (0x1, 0x2):
                return payload

    # -- send -------------------------------------------------------------

    def send_message(self, msg: dict) -> None:
        data = json.dumps(msg).encode()
        with self.lock:
            if self.ws:
                self._send_ws_frame(0x1, data)
            else:
                self.sock.sendall(data + b"\n")

    def _send_ws_frame(self, opcode: int, payload: bytes) -> None:
        head = bytes([0x80 | opcode])
        n = len(payload)
        if n < 126:
            head += bytes([n])
        elif n < 65536:
            head += bytes([126]) + struct.pack(">H", n)
        else:
            head += bytes([127]) + struct.pack(">Q", n)
        self.sock.sendall(head + payload)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class _Connection:
    def __init__(self, sock, config: SessionConfig, record_dir: str,
                 realtime: bool):
        self.transport = _Transport(sock)
        self.config = config
        self.record_dir = record_dir
        self.realtime = realtime
        self.queue = collections.deque()
        self.dropped = 0
        self.rejected_order = 0
        self.last_stamp = float("-inf")
        self.qlock = threading.Lock()
        self.closed = threading.Event()
        self.error_out: Optional[dict] = None

    def reader(self) -> None:
        while not self.closed.is_set():
            try:
                msg = self.transport.recv_message()
            except (OSError, ValueError) as e:
                self.error_out = {"type": "error", "code": "malformed",
                                  "detail": str(e)}
                break
            if msg is None:
                break
            mtype = msg.get("type")
            if mtype == "bye":
                break
            if mtype == "gaze":
                try:
                    ev = GazeEvent.from_dict(msg)
                except ParseError as e:
                    self.error_out = {"type": "error", "code": "malformed",
                                      "detail": str(e)}
                    break
                if abs(ev.u) > 1.0 + 1e-9:
                    self.error_out = {"type": "error", "code": "gaze_domain",
                                      "detail": f"|u| = {abs(ev.u):.4f} > 1"}
                    break
                if ev.t <= self.last_stamp:
                    self.rejected_order += 1   # out-of-order stamps are rejected
                    continue
                self.last_stamp = ev.t
                with self.qlock:
                    if len(self.queue) >= QUEUE_LIMIT:
                        self.queue.popleft()
                        self.dropped += 1
                    self.queue.append(ev)
            elif mtype in ("hello", "config", None):
                continue
            else:
                self.error_out = {"type": "error", "code": "unknown_type",
                                  "detail": str(mtype)}
                break
        self.closed.set()

    def run(self) -> None:
        tr = self.transport
        if not tr.handshake():
            tr.close()
            return
        # assemble the session before greeting so the stepper clock starts
        # the moment the client can react
        sim = Simulator(self.config)
        tr.send_message({"type": "hello", "version": self.config.version})
        tr.send_message({"type": "config", "config": self.config.to_dict()})

        rt = threading.Thread(target=self.reader, daemon=True)
        rt.start()

        out_queue: collections.deque = collections.deque()
        out_ready = threading.Event()

        def writer():
            while not self.closed.is_set() or out_queue:
                if not out_queue:
                    out_ready.wait(0.05)
                    out_ready.clear()
                    continue
                msg = out_queue.popleft()
                try:
                    tr.send_message(msg)
                except OSError:
                    self.closed.set()
                    return

        wt = threading.Thread(target=writer, daemon=True)
        wt.start()

        start_wall = time.monotonic()
        aborted = None
        try:
            while not self.closed.is_set():
                with self.qlock:
                    pending = list(self.queue)
                    self.queue.clear()
                if pending:
                    # zero-order hold: only the newest queued event matters
                    sim.apply_gaze(pending[-1])
                with_frame = (sim.state.step_index % self.config.frame_every == 0)
                row = sim.record_step(with_frame=False)
                if with_frame:
                    frame_msg = encode_frame(sim.render_frame())
                    row["frame_fnv"] = frame_digest(frame_msg)
                    out_queue.append(frame_msg)
                    out_ready.set()
                try:
                    sim.step()
                except StabilityError as e:
                    aborted = str(e)
                    out_queue.append({"type": "error", "code": "stability",
                                      "detail": aborted})
                    out_ready.set()
                    break
                if self.realtime:
                    target = start_wall + sim.state.t
                    delay = target - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
        finally:
            if self.error_out is not None:
                try:
                    tr.send_message(self.error_out)
                except OSError:
                    pass
            self.closed.set()
            out_ready.set()
            wt.join(timeout=1.0)
            rec = sim.finalize_record(aborted)
            rec.dropped_events = self.dropped
            os.makedirs(self.record_dir, exist_ok=True)
            path = os.path.join(self.record_dir,
                                f"session-{int(time.time()*1000)}-{os.getpid()}.jsonl")
            rec.save(path)
            log.info("session record flushed to %s (%d steps, %d dropped)",
                     path, len(rec.steps), self.dropped)
            tr.close()


class SessionService:
    def __init__(self, config: SessionConfig, port: int, host: str = "127.0.0.1",
                 record_dir: str = "runs", realtime: bool = True):
        self.config = config
        self.host = host
        self.record_dir = record_dir
        self.realtime = realtime
        self.sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self.sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            self.sock.bind((host, port))
        except OSError as e:
            raise BindError(f"cannot bind {host}:{port}: {e}") from e
        self.sock.listen(8)
        self.port = self.sock.getsockname()[1]
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None

    def serve_forever(self) -> None:
        log.info("session service listening on %s:%d", self.host, self.port)
        while not self._stop.is_set():
            try:
                self.sock.settimeout(0.2)
                conn, addr = self.sock.accept()
            except socket.timeout:
                continue
            except OSError:
                break
            conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            log.info("connection from %s", addr)
            handler = _Connection(conn, self.config, self.record_dir, self.realtime)
            threading.Thread(target=handler.run, daemon=True).start()

    def start_background(self) -> None:
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        try:
            self.sock.close()
        except OSError:
            pass
        if self._thread:
            self._thread.join(timeout=2.0)


def serve(config: SessionConfig, port: int, host: str = "127.0.0.1",
          record_dir: str = "runs", realtime: bool = True) -> None:
    """Blocking entry point used by the CLI."""
    service = SessionService(config, port, host, record_dir, realtime)
    try:
        service.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()
