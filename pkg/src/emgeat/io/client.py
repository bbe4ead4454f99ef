"""Replay client: stream a recorded session to a server at real or fast pace.

Pacing only changes wall-clock spacing between sample frames; frame content
is derived from the sample clock, so a x10 replay produces the same server
transcript as a real-time one.
"""

import socket
import threading
import time
from dataclasses import dataclass, field

from ..realtime import CalibrationProfile, calibrate
from . import protocol

DEFAULT_FRAME_S = 0.125


@dataclass
class ClientResult:
    transcript: list = field(default_factory=list)  # raw server lines, in order
    rates: list = field(default_factory=list)  # (t_s, chews_per_s)
    levels: list = field(default_factory=list)  # (t_s, level label)
    errors: list = field(default_factory=list)
    reported_events: int = None


def _connect(host, port, retries, retry_wait_s):
    last = None
    for _ in range(retries + 1):
        try:
            return socket.create_connection((host, port), timeout=30)
        except OSError as exc:
            last = exc
            time.sleep(retry_wait_s)
    raise ConnectionError(f"could not reach {host}:{port} after {retries + 1} tries") from last


def stream_client(
    recording,
    host: str,
    port: int,
    speed: float = 1.0,
    frame_s: float = DEFAULT_FRAME_S,
    channel: str = "masseter",
    profile: CalibrationProfile = None,
    reference_rate_hz: float = None,
    retries: int = 3,
    retry_wait_s: float = 0.2,
    on_frame=None,
) -> ClientResult:
    """Send one recording through a live session and collect the replies.

    speed is a wall-clock divisor: 1.0 replays in real time, 10.0 ten times
    faster, 0 floods without pacing. The calibration profile defaults to one
    computed from the streamed channel itself.
    """
    if speed < 0:
        raise ValueError("speed must be >= 0")
    if profile is None:
        profile = calibrate(
            [recording.channel(channel)],
            recording.sample_rate,
            source=recording.participant_id,
        )
    samples = recording.channel(channel)
    n_frame = max(1, int(frame_s * recording.sample_rate))

    result = ClientResult()
    done = threading.Event()

    sock = _connect(host, port, retries, retry_wait_s)
    reader_file = sock.makefile("r")

    def reader():
        for line in reader_file:
            line = line.rstrip("\n")
            result.transcript.append(line)
            if on_frame is not None:
                on_frame(line)
            try:
                kind, fields = protocol.parse_frame(line, allowed=protocol.SERVER_KINDS)
            except protocol.ProtocolError:
                result.errors.append(line)
                continue
            if kind == "rate":
                result.rates.append(
                    (float(fields.get("t", "nan")), float(fields.get("value", "nan")))
                )
            elif kind == "level":
                result.levels.append((float(fields.get("t", "nan")), fields.get("value")))
            elif kind == "error":
                result.errors.append(line)
            elif kind == "bye":
                if "events" in fields:
                    result.reported_events = int(fields["events"])
                break
        done.set()

    thread = threading.Thread(target=reader, daemon=True)
    thread.start()

    hello = {
        "participant": recording.participant_id,
        "sample_rate": float(recording.sample_rate),
        "ref": profile.reference_amplitude,
        "mu0": profile.mu0,
        "delta0": profile.delta0,
    }
    if reference_rate_hz is not None:
        hello["r_ref"] = float(reference_rate_hz)
    try:
        sock.sendall((protocol.format_frame("hello", hello) + "\n").encode())
        for start in range(0, samples.size, n_frame):
            chunk = samples[start : start + n_frame]
            t_us = round(start * 1_000_000 / recording.sample_rate)
            frame = protocol.format_frame(
                "samples",
                {"t_us": t_us, "n": chunk.size, "v": ",".join(repr(float(v)) for v in chunk)},
            )
            sock.sendall((frame + "\n").encode())
            if speed > 0:
                time.sleep(chunk.size / recording.sample_rate / speed)
            if done.is_set():
                break  # server closed on us (protocol error); stop sending
        if not done.is_set():
            sock.sendall(b"bye\n")
        done.wait(timeout=60)
    except (BrokenPipeError, ConnectionResetError):
        # server hung up mid-stream; its error frame (if any) is in transcript
        done.wait(timeout=5)
    finally:
        try:
            sock.close()
        except OSError:
            pass
        thread.join(timeout=5)
    return result
