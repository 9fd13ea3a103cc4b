"""Pluggable speech-to-text boundary.

Two implementations share one utterance-stream contract: a deterministic
scripted recognizer (tests, demos, benchmarks) and an optional offline
engine binding selected via COVOL_MODEL_PATH. Latency is measured from
end-of-audio to availability of the final result.
"""

from __future__ import annotations

import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional


class RecognizerError(Exception):
    pass


class UnsupportedLanguage(RecognizerError):
    pass


class HandleFinalized(RecognizerError):
    pass


class RecognizerUnavailable(RecognizerError):
    pass


def monotonic_ms() -> int:
    return int(time.monotonic() * 1000)


@dataclass(frozen=True)
class AudioChunk:
    """PCM frame bytes: 16 kHz, 16-bit signed, mono."""

    samples: bytes
    capture_timestamp: int

    def __post_init__(self):
        if not self.samples or len(self.samples) % 2 != 0:
            raise ValueError("PCM chunk must be non-empty with even byte length")


@dataclass(frozen=True)
class FinalTranscript:
    text: str
    utterance_end: int
    decoded_at: int

    @property
    def latency_ms(self) -> int:
        return self.decoded_at - self.utterance_end

    def __post_init__(self):
        if self.decoded_at < self.utterance_end:
            raise ValueError("latency must be non-negative")


@dataclass(frozen=True)
class RecognizerDescriptor:
    kind: str  # "scripted" | "engine"
    model_identifier: str = ""
    language: str = "en"


@dataclass(frozen=True)
class UtteranceScript:
    """What one scripted utterance does: partials per chunk count, then
    a final text after an artificial decode delay."""

    text: str
    delay_ms: int = 0
    partials: dict[int, str] = field(default_factory=dict)


class ScriptedUtterance:
    def __init__(self, script: UtteranceScript, clock: Callable[[], int], sleep: Callable[[float], None]):
        self._script = script
        self._clock = clock
        self._sleep = sleep
        self._chunks = 0
        self._finalized = False
        self._lock = threading.Lock()

    def push_audio(self, chunk: AudioChunk) -> Optional[str]:
        with self._lock:
            if self._finalized:
                raise HandleFinalized("utterance already finalized")
            self._chunks += 1
            return self._script.partials.get(self._chunks)

    def finalize(self) -> FinalTranscript:
        with self._lock:
            if self._finalized:
                raise HandleFinalized("utterance already finalized")
            self._finalized = True
        end = self._clock()
        if self._script.delay_ms:
            self._sleep(self._script.delay_ms / 1000.0)
        return FinalTranscript(text=self._script.text, utterance_end=end, decoded_at=self._clock())


class ScriptedRecognizer:
    """Deterministic stand-in for a speech engine.

    Scripts are consumed in order, one per utterance; when exhausted,
    utterances decode to empty text.
    """

    kind = "scripted"

    def __init__(
        self,
        scripts: Optional[list[UtteranceScript]] = None,
        languages: tuple[str, ...] = ("en",),
        clock: Callable[[], int] = monotonic_ms,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._scripts = deque(scripts or [])
        self._languages = languages
        self._clock = clock
        self._sleep = sleep

    def describe(self) -> RecognizerDescriptor:
        return RecognizerDescriptor(kind="scripted", language=self._languages[0])

    def supports_language(self, language: str) -> bool:
        return language in self._languages

    def begin_utterance(self, language: str) -> ScriptedUtterance:
        if not self.supports_language(language):
            raise UnsupportedLanguage(language)
        script = self._scripts.popleft() if self._scripts else UtteranceScript(text="")
        return ScriptedUtterance(script, self._clock, self._sleep)


class EngineUtterance:
    def __init__(self, engine_recognizer, clock: Callable[[], int]):
        self._rec = engine_recognizer
        self._clock = clock
        self._finalized = False
        self._last_partial = ""

    def push_audio(self, chunk: AudioChunk) -> Optional[str]:
        if self._finalized:
            raise HandleFinalized("utterance already finalized")
        self._rec.AcceptWaveform(chunk.samples)
        partial = json.loads(self._rec.PartialResult()).get("partial", "")
        if partial and partial != self._last_partial:
            self._last_partial = partial
            return partial
        return None

    def finalize(self) -> FinalTranscript:
        if self._finalized:
            raise HandleFinalized("utterance already finalized")
        self._finalized = True
        end = self._clock()
        text = json.loads(self._rec.FinalResult()).get("text", "")
        return FinalTranscript(text=text, utterance_end=end, decoded_at=self._clock())


class EngineRecognizer:
    """Binding for an offline Vosk-style engine; optional at runtime."""

    kind = "engine"
    SAMPLE_RATE = 16000

    def __init__(self, model_path: str, language: str = "en", clock: Callable[[], int] = monotonic_ms):
        try:
            import vosk  # noqa: F401  deferred: engine is an optional plug-in
        except ImportError as exc:
            raise RecognizerUnavailable(f"engine library not installed: {exc}") from exc
        if not os.path.isdir(model_path):
            raise RecognizerUnavailable(f"model directory not found: {model_path}")
        self._vosk = vosk
        self._model = vosk.Model(model_path)
        self._model_path = model_path
        self._language = language
        self._clock = clock

    def describe(self) -> RecognizerDescriptor:
        return RecognizerDescriptor(kind="engine", model_identifier=self._model_path, language=self._language)

    def supports_language(self, language: str) -> bool:
        return language == self._language

    def begin_utterance(self, language: str) -> EngineUtterance:
        if not self.supports_language(language):
            raise UnsupportedLanguage(language)
        rec = self._vosk.KaldiRecognizer(self._model, self.SAMPLE_RATE)
        return EngineUtterance(rec, self._clock)


def create_recognizer(model_path: Optional[str] = None, language: str = "en"):
    """Factory honoring COVOL_MODEL_PATH; no model means scripted mode."""
    path = model_path or os.environ.get("COVOL_MODEL_PATH")
    if path:
        return EngineRecognizer(path, language=language)
    return ScriptedRecognizer(languages=(language,))
