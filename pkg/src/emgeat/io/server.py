"""TCP streaming server: samples in, rate/level frames and event logs out.

Each connection is one session. Frames are processed synchronously in
arrival order and every outgoing value is derived from the sample clock, so
identical client transcripts produce byte-identical server transcripts. Two
concurrent sessions share nothing but the (read-only) model.
"""

import socketserver
import threading
from dataclasses import dataclass, field
from pathlib import Path

from ..feedback import FeedbackLevel, RateNormalizer, map_level, normalize_rate
from ..learn import LinearModel
from ..realtime import CalibrationProfile, StreamConfig, StreamEngine
from . import protocol
from .datasets import format_event_line

DEFAULT_REFERENCE_RATE_HZ = 1.6


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 0  # 0 = ephemeral; read the bound port from EmgServer.port
    log_dir: Path = None  # event logs are skipped when None
    reference_rate_hz: float = DEFAULT_REFERENCE_RATE_HZ
    stream: StreamConfig = field(default_factory=StreamConfig)


class _Session:
    """State machine for one connection."""

    def __init__(self, model, config: ServerConfig, log_path):
        self.model = model
        self.config = config
        self.log_path = log_path
        self.engine = None
        self.normalizer = None
        self.last_rate_second = 0
        self.last_level = FeedbackLevel.NO_PULSE
        self.last_t_us = -1

    def open(self, fields) -> list:
        protocol.require_fields(
            "hello", fields, ["participant", "sample_rate", "ref", "mu0", "delta0"]
        )
        sample_rate = protocol.parse_float("hello", fields, "sample_rate")
        if sample_rate <= 0:
            raise protocol.ProtocolError("hello sample_rate must be positive")
        profile = CalibrationProfile(
            reference_amplitude=protocol.parse_float("hello", fields, "ref"),
            mu0=protocol.parse_float("hello", fields, "mu0"),
            delta0=protocol.parse_float("hello", fields, "delta0"),
            sample_rate=sample_rate,
            effective_rate=sample_rate / self.config.stream.decimation,
            source=fields["participant"],
        )
        self.engine = StreamEngine(self.model, profile, self.config.stream)
        r_ref = (
            protocol.parse_float("hello", fields, "r_ref")
            if "r_ref" in fields
            else self.config.reference_rate_hz
        )
        self.normalizer = RateNormalizer(reference_rate_hz=r_ref)
        return [protocol.format_frame("hello", {"participant": fields["participant"]})]

    def samples(self, fields) -> list:
        t_us = protocol.parse_int("samples", fields, "t_us")
        values = protocol.parse_values("samples", fields)
        if not values:
            raise protocol.ProtocolError("samples frame carries no values")
        if t_us <= self.last_t_us:
            raise protocol.ProtocolError(
                f"samples timestamp {t_us} does not advance past {self.last_t_us}"
            )
        fs = self.engine.profile.sample_rate
        if len(values) > protocol.MAX_BUFFERED_S * fs:
            # Back-pressure: refuse to buffer more than MAX_BUFFERED_S at once.
            return [
                protocol.format_frame(
                    "error",
                    {"reason": "slowdown", "max_buffered_s": protocol.MAX_BUFFERED_S},
                )
            ]
        self.last_t_us = t_us
        closed = self.engine.push(values)
        self._log_events(closed)
        return self._tick()

    def close(self) -> list:
        closed = self.engine.finalize() if self.engine else []
        self._log_events(closed)
        n = len(self.engine.events) if self.engine else 0
        return [protocol.format_frame("bye", {"events": n})]

    def _log_events(self, events):
        if events and self.log_path is not None:
            with open(self.log_path, "a") as fh:
                for event in events:
                    fh.write(format_event_line(event) + "\n")

    def _tick(self) -> list:
        """Rate frame per whole streamed second, level frame on transitions."""
        out = []
        now = int(self.engine.current_time_s)
        while self.last_rate_second < now:
            self.last_rate_second += 1
            t = float(self.last_rate_second)
            rate = self.engine.rate_at(t)
            out.append(protocol.format_frame("rate", {"t": t, "value": rate}))
            level = map_level(normalize_rate(rate, self.normalizer))
            if level is not self.last_level:
                out.append(
                    protocol.format_frame("level", {"t": t, "value": level.label})
                )
                self.last_level = level
        return out


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        owner = self.server.owner
        session = _Session(owner.model, owner.config, owner.next_log_path())
        opened = False
        while True:
            line = self.rfile.readline()
            if not line:
                return  # client went away
            try:
                kind, fields = protocol.parse_frame(
                    line.decode(), allowed=protocol.CLIENT_KINDS
                )
                if not opened:
                    if kind != "hello":
                        raise protocol.ProtocolError("session must open with hello")
                    replies = session.open(fields)
                    opened = True
                elif kind == "hello":
                    raise protocol.ProtocolError("duplicate hello")
                elif kind == "samples":
                    replies = session.samples(fields)
                elif kind == "bye":
                    self._send(session.close())
                    return
            except (protocol.ProtocolError, ValueError) as exc:
                reason = (
                    "protocol" if isinstance(exc, protocol.ProtocolError) else "server"
                )
                self._send(
                    [
                        protocol.format_frame(
                            "error",
                            {"reason": reason, "detail": str(exc).replace(" ", "_")},
                        )
                    ]
                )
                return
            self._send(replies)

    def _send(self, frames):
        for frame in frames:
            self.wfile.write((frame + "\n").encode())
        self.wfile.flush()


class _ThreadingServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


class EmgServer:
    """Lifecycle wrapper: bind, run (optionally in a thread), shut down."""

    def __init__(self, model: LinearModel, config: ServerConfig = None):
        self.model = model
        self.config = config or ServerConfig()
        self._tcp = _ThreadingServer(
            (self.config.host, self.config.port), _Handler
        )
        self._tcp.owner = self
        self._session_counter = 0
        self._lock = threading.Lock()
        self._thread = None

    @property
    def port(self) -> int:
        return self._tcp.server_address[1]

    def next_log_path(self):
        if self.config.log_dir is None:
            return None
        with self._lock:
            self._session_counter += 1
            n = self._session_counter
        log_dir = Path(self.config.log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        return log_dir / f"session_{n:03d}.events"

    def serve_forever(self):
        self._tcp.serve_forever(poll_interval=0.05)

    def start_background(self):
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def shutdown(self):
        self._tcp.shutdown()
        self._tcp.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


def serve(model: LinearModel, config: ServerConfig = None) -> EmgServer:
    """Bind a server; call serve_forever() or start_background() on it."""
    return EmgServer(model, config)
