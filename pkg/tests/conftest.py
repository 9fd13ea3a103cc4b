from pathlib import Path

import pytest

from covol.catalog import load_catalog
from covol.recognizer import FinalTranscript
from covol.session import (
    AllReady,
    Phase,
    SessionConfig,
    StartTimer,
    TimerElapsed,
    TranscriptFinal,
    create_session,
    handle_event,
)

REPO_ROOT = Path(__file__).resolve().parent.parent
CATALOG_DIR = REPO_ROOT / "catalogs"


@pytest.fixture
def en_catalog():
    return load_catalog(CATALOG_DIR / "en.json")


class SessionDriver:
    """Drives the pure state machine on a simulated millisecond clock.

    Only one timer is ever pending; firing it advances the clock to the
    timer's deadline, exactly like the real server would.
    """

    def __init__(self, config: SessionConfig, tasks, session_id="test"):
        self.state = create_session(session_id, config, tasks)
        self.now = 0
        self.pending = None  # (timer_id, fire_at)
        self.log = []  # (now, effect)

    def apply(self, event):
        self.state, effects = handle_event(self.state, event, self.now)
        for effect in effects:
            self.log.append((self.now, effect))
            if isinstance(effect, StartTimer):
                self.pending = (effect.timer_id, self.now + effect.duration_ms)
        return effects

    def start(self):
        return self.apply(AllReady())

    def fire_timer(self):
        assert self.pending is not None, "no timer pending"
        timer_id, fire_at = self.pending
        self.pending = None
        self.now = fire_at
        return self.apply(TimerElapsed(timer_id))

    def answer(self, text: str, latency_ms: int = 0, wait_ms: int = 0):
        """Deliver a final transcript `wait_ms` after the current moment."""
        self.now += wait_ms
        transcript = FinalTranscript(text=text, utterance_end=self.now - latency_ms, decoded_at=self.now)
        return self.apply(TranscriptFinal(transcript))

    def settle(self):
        """Fire timers until the session waits for an answer or is done."""
        while self.state.phase not in (Phase.AWAITING_ANSWER, Phase.COMPLETE):
            self.fire_timer()

    def effects(self, effect_type):
        return [(t, e) for t, e in self.log if isinstance(e, effect_type)]
