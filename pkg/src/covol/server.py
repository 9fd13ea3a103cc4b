"""Networked front door: WebSocket protocol, session registry, routing.

All inbound traffic for a session funnels into one asyncio queue; a
single pump task applies events to the pure state machine and broadcasts
the resulting effects to every joined client in the same order. Real
timers live here, never inside the state machine.
"""

from __future__ import annotations

import argparse
import asyncio
import dataclasses
import json
import logging
import random
import secrets
import string
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles

from covol import session as gs
from covol import wire
from covol.catalog import Catalog, CatalogError, build_prompt_sequence, load_catalog
from covol.recognizer import FinalTranscript, create_recognizer, monotonic_ms
from covol.session import ConfigInvalid, SessionConfig

log = logging.getLogger("covol.server")

JOIN_CODE_ALPHABET = string.ascii_uppercase + string.digits
JOIN_CODE_LENGTH = 4


class ServerError(Exception):
    pass


class CatalogUnavailable(ServerError):
    def __init__(self, language: str):
        self.language = language
        super().__init__(f"no catalog for language {language!r}")


class NoActivePrompt(ServerError):
    pass


@dataclass
class ServerSettings:
    catalog_dir: Path
    defaults: SessionConfig = field(default_factory=SessionConfig)
    model_path: Optional[str] = None
    metrics_out: Optional[Path] = None
    # Virtual-time multiplier. Game timing (feedback delays, pacing,
    # rewards) is defined in virtual milliseconds; scaling above 1.0
    # accelerates real wall-clock sleeps by the same factor so automated
    # runs finish quickly without changing any timing invariant.
    time_scale: float = 1.0


class VirtualClock:
    def __init__(self, scale: float = 1.0):
        self._scale = scale
        self._base = time.monotonic()

    @property
    def scale(self) -> float:
        return self._scale

    def now_ms(self) -> int:
        return int((time.monotonic() - self._base) * 1000 * self._scale)

    def to_real_seconds(self, virtual_ms: int) -> float:
        return virtual_ms / 1000.0 / self._scale


@dataclass
class ClientConn:
    ws: WebSocket
    entry: Optional["SessionEntry"] = None
    player_index: Optional[int] = None

    async def send(self, message: wire.WireMessage) -> None:
        await self.ws.send_text(wire.encode(message))

    async def send_error(self, code: str, message: str) -> None:
        await self.send(wire.WireMessage("error", {"code": code, "message": message}))


class SessionEntry:
    def __init__(self, session_id: str, join_code: str, state: gs.SessionState, registry: "Registry"):
        self.session_id = session_id
        self.join_code = join_code
        self.state = state
        self.registry = registry
        self.clients: dict[int, ClientConn] = {}
        self.ready: set[int] = set()
        self.queue: asyncio.Queue = asyncio.Queue()
        self.pump_task: Optional[asyncio.Task] = None
        self.paused = False
        # Active real timer and what is needed to pause/resume it.
        self._timer_task: Optional[asyncio.Task] = None
        self._timer_id: Optional[str] = None
        self._timer_remaining_ms: int = 0
        self._timer_armed_at: float = 0.0
        # One in-flight utterance per session (the active player's).
        self.utterance = None
        self.utterance_player: Optional[int] = None
        self.last_audio_seq: Optional[int] = None
        self.last_prompt_msg: Optional[wire.WireMessage] = None

    # -- timers ------------------------------------------------------------

    def arm_timer(self, timer_id: str, duration_ms: int) -> None:
        self.cancel_timer()
        self._timer_id = timer_id
        self._timer_remaining_ms = duration_ms
        self._timer_armed_at = asyncio.get_running_loop().time()
        self._timer_task = asyncio.create_task(self._fire_after(timer_id, duration_ms))

    async def _fire_after(self, timer_id: str, duration_ms: int) -> None:
        await asyncio.sleep(self.registry.clock.to_real_seconds(duration_ms))
        self.queue.put_nowait((gs.TimerElapsed(timer_id), None))

    def cancel_timer(self) -> None:
        if self._timer_task is not None:
            self._timer_task.cancel()
            self._timer_task = None

    def pause(self) -> None:
        if self.paused:
            return
        self.paused = True
        if self._timer_task is not None:
            scale = self.registry.clock.scale
            elapsed = (asyncio.get_running_loop().time() - self._timer_armed_at) * 1000 * scale
            self._timer_remaining_ms = max(0, int(self._timer_remaining_ms - elapsed))
            self.cancel_timer()

    def resume(self) -> None:
        if not self.paused:
            return
        self.paused = False
        if self._timer_id is not None and self._timer_id == self.state.pending_timer:
            self.arm_timer(self._timer_id, self._timer_remaining_ms)

    # -- outbound ----------------------------------------------------------

    async def broadcast(self, message: wire.WireMessage) -> None:
        for index in sorted(self.clients):
            conn = self.clients[index]
            try:
                await conn.send(message)
            except Exception:
                pass  # disconnect handled by the receive loop

    # -- event pump --------------------------------------------------------

    async def pump(self) -> None:
        while True:
            event, origin = await self.queue.get()
            if self.state.phase is gs.Phase.COMPLETE:
                continue
            if isinstance(event, gs.TimerElapsed) and event.timer_id != self.state.pending_timer:
                continue  # superseded timer; benign race
            now = self.registry.clock.now_ms()
            try:
                new_state, effects = gs.handle_event(self.state, event, now)
            except gs.InvalidTransition as exc:
                if origin is not None and origin in self.clients:
                    await self.clients[origin].send_error("bad_phase", str(exc))
                continue
            self.state = new_state
            try:
                if isinstance(event, gs.TranscriptFinal):
                    await self.broadcast(_recognition_result(event.transcript, effects))
                for effect in effects:
                    await self.apply_effect(effect)
            except Exception:
                log.exception("effect delivery failed for session %s", self.session_id)

    async def apply_effect(self, effect: gs.Effect) -> None:
        if isinstance(effect, gs.ShowPrompt):
            task = effect.task
            msg = wire.WireMessage(
                "prompt_shown",
                {
                    "task_index": effect.task_index,
                    "object_id": task.object_id,
                    "image_ref": task.image_ref,
                    "sound_ref": task.sound_ref,
                    "prompt_text": task.display_prompt,
                    "mode": task.mode,
                    "active_player": effect.active_player,
                },
            )
            self.last_prompt_msg = msg
            await self.broadcast(msg)
        elif isinstance(effect, gs.StartTimer):
            self.arm_timer(effect.timer_id, effect.duration_ms)
        elif isinstance(effect, gs.ShowReward):
            await self.broadcast(wire.WireMessage("reward", {"icon": effect.icon, "duration_ms": effect.duration_ms}))
        elif isinstance(effect, gs.ShowTryAgain):
            await self.broadcast(wire.WireMessage("try_again", {"attempts_left": effect.attempts_left}))
        elif isinstance(effect, gs.ShowPassed):
            await self.broadcast(wire.WireMessage("prompt_passed", {}))
        elif isinstance(effect, gs.AdvanceTurn):
            name = self.state.players[effect.new_active].display_name
            await self.broadcast(
                wire.WireMessage("turn_changed", {"active_player": effect.new_active, "display_name": name})
            )
        elif isinstance(effect, gs.EndSession):
            self.cancel_timer()
            summary = effect.summary
            await self.broadcast(wire.WireMessage("session_complete", {"summary": _summary_payload(summary)}))
            self.registry.export_metrics(self)
        # RecordOutcome feeds metrics only; recognition_result is synthesized
        # per transcript by the pump.


def _summary_payload(summary: gs.Summary) -> dict:
    return {
        "per_player_correct": list(summary.per_player_correct),
        "per_player_passed": list(summary.per_player_passed),
        "mean_recognition_latency_ms": summary.mean_recognition_latency_ms,
        "total_duration_ms": summary.total_duration_ms,
        "total_tasks": summary.total_tasks,
    }


def _recognition_result(transcript: FinalTranscript, effects: list[gs.Effect]) -> wire.WireMessage:
    matched_label = None
    matched = False
    for effect in effects:
        if isinstance(effect, gs.RecordOutcome) and effect.outcome.result == "correct":
            matched = True
            matched_label = effect.outcome.matched_label
    return wire.WireMessage(
        "recognition_result",
        {
            "matched": matched,
            "matched_label": matched_label,
            "transcript": transcript.text,
            "latency_ms": transcript.latency_ms,
        },
    )


class Registry:
    def __init__(self, settings: ServerSettings):
        self.settings = settings
        self.sessions: dict[str, SessionEntry] = {}
        self.by_join_code: dict[str, SessionEntry] = {}
        self.clock = VirtualClock(settings.time_scale)
        self._catalogs: dict[str, Catalog] = {}

    def recognizer_for(self, language: str):
        return create_recognizer(self.settings.model_path, language=language)

    def catalog_for(self, language: str) -> Catalog:
        if language in self._catalogs:
            return self._catalogs[language]
        path = self.settings.catalog_dir / f"{language}.json"
        if not path.exists():
            raise CatalogUnavailable(language)
        try:
            catalog = load_catalog(path)
        except CatalogError as exc:
            raise CatalogUnavailable(language) from exc
        self._catalogs[language] = catalog
        return catalog

    def available_languages(self) -> list[str]:
        if not self.settings.catalog_dir.is_dir():
            return []
        return sorted(p.stem for p in self.settings.catalog_dir.glob("*.json"))

    def new_join_code(self) -> str:
        while True:
            code = "".join(secrets.choice(JOIN_CODE_ALPHABET) for _ in range(JOIN_CODE_LENGTH))
            if code not in self.by_join_code:
                return code

    def create_and_pair(self, overrides: dict, seed: Optional[int] = None) -> SessionEntry:
        config = config_with_overrides(self.settings.defaults, overrides)
        config.validate()
        catalog = self.catalog_for(config.language)
        if seed is None:
            seed = random.SystemRandom().randrange(2**63)
        tasks = build_prompt_sequence(catalog, config, seed)
        session_id = secrets.token_hex(8)
        state = gs.create_session(session_id, config, tasks)
        entry = SessionEntry(session_id, self.new_join_code(), state, self)
        entry.pump_task = asyncio.create_task(entry.pump())
        self.sessions[session_id] = entry
        self.by_join_code[entry.join_code] = entry
        return entry

    def find(self, session_id: Optional[str] = None, join_code: Optional[str] = None) -> Optional[SessionEntry]:
        if session_id and session_id in self.sessions:
            return self.sessions[session_id]
        if join_code and join_code.upper() in self.by_join_code:
            return self.by_join_code[join_code.upper()]
        return None

    def drop(self, entry: SessionEntry) -> None:
        entry.cancel_timer()
        if entry.pump_task is not None:
            entry.pump_task.cancel()
        self.sessions.pop(entry.session_id, None)
        self.by_join_code.pop(entry.join_code, None)

    def export_metrics(self, entry: SessionEntry) -> None:
        out_dir = self.settings.metrics_out
        if out_dir is None:
            return
        out_dir.mkdir(parents=True, exist_ok=True)
        state = entry.state
        doc = {
            "session_id": entry.session_id,
            "summary": _summary_payload(gs.session_summary(state)),
            "outcomes": [dataclasses.asdict(o) for o in state.metrics],
        }
        (out_dir / f"{entry.session_id}.json").write_text(
            json.dumps(doc, ensure_ascii=False, indent=2), encoding="utf-8"
        )


def config_with_overrides(defaults: SessionConfig, overrides: dict) -> SessionConfig:
    field_names = {f.name for f in dataclasses.fields(SessionConfig)}
    unknown = set(overrides) - field_names
    if unknown:
        raise ConfigInvalid(f"unknown config fields: {sorted(unknown)}")
    return dataclasses.replace(defaults, **overrides)


def transcript_injection(entry: SessionEntry, player_index: int, text: str) -> FinalTranscript:
    """Text-mode bypass: behaves exactly like a zero-latency final result."""
    if entry.state.phase is not gs.Phase.AWAITING_ANSWER:
        raise NoActivePrompt(f"phase is {entry.state.phase.value}")
    now = entry.registry.clock.now_ms()
    transcript = FinalTranscript(text=text, utterance_end=now, decoded_at=now)
    entry.queue.put_nowait((gs.TranscriptFinal(transcript), player_index))
    return transcript


# --- WebSocket handling ---------------------------------------------------


async def _handle_create(conn: ClientConn, registry: Registry, payload: dict) -> None:
    overrides = payload.get("config", {})
    seed = payload.get("seed")
    try:
        entry = registry.create_and_pair(overrides, seed=seed)
    except ConfigInvalid as exc:
        await conn.send_error("config_invalid", str(exc))
        return
    except CatalogUnavailable as exc:
        await conn.send_error("catalog_unavailable", str(exc))
        return
    await conn.send(
        wire.WireMessage("session_created", {"session_id": entry.session_id, "join_code": entry.join_code})
    )


async def _handle_join(conn: ClientConn, registry: Registry, payload: dict) -> None:
    entry = registry.find(payload.get("session_id"), payload.get("join_code"))
    if entry is None:
        await conn.send_error("unknown_session", "no such session or join code")
        return
    requested = payload.get("player_index")
    index = None
    if requested is not None:
        if requested in entry.clients or requested >= entry.state.config.player_count:
            await conn.send_error("slot_taken", f"slot {requested} unavailable")
            return
        index = requested
    else:
        for i in range(entry.state.config.player_count):
            if i not in entry.clients:
                index = i
                break
        if index is None:
            await conn.send_error("session_full", "all player slots are joined")
            return
    conn.entry = entry
    conn.player_index = index
    entry.clients[index] = conn
    slot = gs.PlayerSlot(
        index=index,
        display_name=payload.get("display_name") or f"Player {index + 1}",
        avatar_id=payload.get("avatar_id") or "default",
        connected=True,
    )
    entry.queue.put_nowait((gs.PlayerJoined(slot), index))
    roster = [
        {
            "player_index": i,
            "display_name": slot.display_name if i == index else entry.state.players[i].display_name,
            "connected": i == index or i in entry.clients,
        }
        for i in range(entry.state.config.player_count)
    ]
    await conn.send(wire.WireMessage("joined", {"player_index": index, "roster": roster}))
    # Mid-session rejoin: resume timers and replay the current prompt.
    if entry.state.phase not in (gs.Phase.LOBBY, gs.Phase.COMPLETE):
        entry.resume()
        if entry.last_prompt_msg is not None:
            await conn.send(entry.last_prompt_msg)


async def _handle_ready(conn: ClientConn) -> None:
    entry = conn.entry
    if entry is None or conn.player_index is None:
        await conn.send_error("not_joined", "join a session first")
        return
    if entry.state.phase is not gs.Phase.LOBBY:
        return  # ready after a resume is a no-op
    entry.ready.add(conn.player_index)
    if len(entry.ready) == entry.state.config.player_count:
        entry.queue.put_nowait((gs.AllReady(), None))


def _turn_guard(conn: ClientConn) -> Optional[str]:
    entry = conn.entry
    if entry is None or conn.player_index is None:
        return "not_joined"
    if entry.paused:
        return "paused"
    if entry.state.phase is not gs.Phase.AWAITING_ANSWER:
        return "bad_phase"
    if conn.player_index != entry.state.active_player:
        return "not_your_turn"
    return None


async def _handle_transcript(conn: ClientConn, payload: dict) -> None:
    code = _turn_guard(conn)
    if code is not None:
        await conn.send_error(code, "transcript rejected")
        return
    transcript_injection(conn.entry, conn.player_index, payload.get("text", ""))


async def _handle_audio(conn: ClientConn, frame: bytes) -> None:
    from covol.recognizer import AudioChunk

    code = _turn_guard(conn)
    if code is not None:
        await conn.send_error(code, "audio rejected")
        return
    entry = conn.entry
    try:
        seq, pcm = wire.decode_audio_frame(frame)
    except wire.MalformedFrame as exc:
        await conn.send_error("malformed", str(exc))
        return
    if entry.utterance is None or entry.utterance_player != conn.player_index:
        recognizer = entry.registry.recognizer_for(entry.state.config.language)
        entry.utterance = recognizer.begin_utterance(entry.state.config.language)
        entry.utterance_player = conn.player_index
        entry.last_audio_seq = None
    if entry.last_audio_seq is not None and seq <= entry.last_audio_seq:
        await conn.send_error("bad_seq", f"audio seq {seq} not increasing")
        return
    entry.last_audio_seq = seq
    try:
        partial = entry.utterance.push_audio(AudioChunk(samples=pcm, capture_timestamp=monotonic_ms()))
    except ValueError as exc:
        await conn.send_error("malformed", str(exc))
        return
    if partial:
        await entry.broadcast(wire.WireMessage("partial_transcript", {"text": partial}))


async def _handle_end_of_speech(conn: ClientConn) -> None:
    entry = conn.entry
    if entry is None or entry.utterance is None or entry.utterance_player != conn.player_index:
        if conn.entry is not None:
            await conn.send_error("bad_phase", "no utterance in flight")
        return
    utterance = entry.utterance
    player = entry.utterance_player
    entry.utterance = None
    entry.utterance_player = None
    entry.last_audio_seq = None
    transcript = await asyncio.to_thread(utterance.finalize)
    entry.queue.put_nowait((gs.TranscriptFinal(transcript), player))


async def _handle_disconnect(conn: ClientConn) -> None:
    entry = conn.entry
    if entry is None or conn.player_index is None:
        return
    if entry.clients.get(conn.player_index) is conn:
        del entry.clients[conn.player_index]
        entry.state = gs.set_connected(entry.state, conn.player_index, False)
        if entry.state.phase in (gs.Phase.LOBBY, gs.Phase.COMPLETE):
            if not entry.clients:
                entry.registry.drop(entry)
        else:
            entry.pause()
    conn.entry = None
    conn.player_index = None


async def _dispatch(conn: ClientConn, registry: Registry, message: wire.WireMessage) -> bool:
    """Returns False when the connection must close."""
    if not wire.version_compatible(message):
        await conn.send_error("version", f"protocol version {message.protocol_version} unsupported")
        return False
    tag = message.type
    if tag == "create_session":
        await _handle_create(conn, registry, message.payload)
    elif tag == "join_session":
        await _handle_join(conn, registry, message.payload)
    elif tag == "ready":
        await _handle_ready(conn)
    elif tag == "transcript":
        await _handle_transcript(conn, message.payload)
    elif tag == "end_of_speech":
        await _handle_end_of_speech(conn)
    elif tag == "leave":
        return False
    elif not message.known:
        log.debug("ignoring unknown message tag %r", tag)
    else:
        await conn.send_error("bad_phase", f"server does not accept {tag!r}")
    return True


def create_app(settings: ServerSettings) -> FastAPI:
    app = FastAPI(title="covol")
    registry = Registry(settings)
    app.state.registry = registry

    @app.get("/healthz", response_class=PlainTextResponse)
    async def healthz() -> str:
        return "ok"

    @app.get("/catalogs")
    async def catalogs() -> list[str]:
        return registry.available_languages()

    if settings.catalog_dir.is_dir():
        app.mount("/assets", StaticFiles(directory=str(settings.catalog_dir)), name="assets")

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        conn = ClientConn(ws)
        try:
            while True:
                frame = await ws.receive()
                if frame["type"] == "websocket.disconnect":
                    break
                if frame.get("text") is not None:
                    try:
                        message = wire.decode(frame["text"])
                    except wire.MalformedFrame as exc:
                        await conn.send_error("malformed", str(exc))
                        continue
                    if not await _dispatch(conn, registry, message):
                        break
                elif frame.get("bytes") is not None:
                    await _handle_audio(conn, frame["bytes"])
        except WebSocketDisconnect:
            pass
        finally:
            await _handle_disconnect(conn)
            try:
                await ws.close()
            except Exception:
                pass

    return app


def load_defaults(path: Optional[str]) -> SessionConfig:
    if path is None:
        return SessionConfig()
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    return config_with_overrides(SessionConfig(), raw)


def main(argv: Optional[list[str]] = None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(prog="covol-server", description="CoVoL game session server")
    parser.add_argument("--listen", default="127.0.0.1:8080", help="addr:port to bind")
    parser.add_argument("--catalog-dir", default="catalogs", help="directory of catalog JSON files and assets")
    parser.add_argument("--config", default=None, help="JSON file with session config defaults")
    parser.add_argument("--model-path", default=None, help="ASR model directory (engine mode)")
    parser.add_argument("--metrics-out", default=None, help="directory for per-session metrics exports")
    args = parser.parse_args(argv)

    host, _, port = args.listen.rpartition(":")
    settings = ServerSettings(
        catalog_dir=Path(args.catalog_dir),
        defaults=load_defaults(args.config),
        model_path=args.model_path,
        metrics_out=Path(args.metrics_out) if args.metrics_out else None,
    )
    logging.basicConfig(level=logging.INFO)
    uvicorn.run(create_app(settings), host=host or "127.0.0.1", port=int(port))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
