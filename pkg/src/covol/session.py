"""Authoritative game state machine: one session, pure transitions.

All time comes in through the `now` argument and all randomness was spent
when the prompt sequence was built, so every transition is replayable.
The surrounding server owns real clocks and timers; here a timer is just
an effect asking for a future TimerElapsed event.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from covol.catalog import PromptTask
from covol.matching import match
from covol.recognizer import FinalTranscript

# 55 prompts/minute ceiling on pictogram pacing.
MIN_PICTOGRAM_INTERVAL_MS = 1091


class SessionError(Exception):
    pass


class ConfigInvalid(SessionError):
    def __init__(self, rule: str):
        self.rule = rule
        super().__init__(rule)


class TaskCountMismatch(SessionError):
    pass


class SessionNotComplete(SessionError):
    pass


class InvalidTransition(SessionError):
    def __init__(self, phase: "Phase", event: "SessionEvent"):
        self.phase = phase
        self.event = event
        super().__init__(f"event {type(event).__name__} not valid in phase {phase.value}")


class Phase(enum.Enum):
    LOBBY = "lobby"
    PROMPTING = "prompting"
    AWAITING_ANSWER = "awaiting_answer"
    PRE_REWARD_DELAY = "pre_reward_delay"
    REWARD = "reward"
    PASSED_NOTICE = "passed_notice"
    COMPLETE = "complete"


def default_mode_weights() -> dict[str, float]:
    return {"label": 1.0, "attribute": 0.0, "sound": 0.0}


@dataclass(frozen=True)
class SessionConfig:
    player_count: int = 1
    prompts_per_session: int = 10
    min_feedback_delay_ms: int = 1500
    reward_every_n_correct: int = 1
    reward_icon: str = "star"
    reward_duration_ms: int = 2000
    attempt_timeout_ms: int = 10000
    max_attempts: int = 3
    pictogram_interval_ms: int = 3000
    language: str = "en"
    mode_weights: dict[str, float] = field(default_factory=default_mode_weights)

    def validate(self) -> None:
        if self.player_count not in (1, 2):
            raise ConfigInvalid("player_count must be 1 or 2")
        if self.prompts_per_session < 1:
            raise ConfigInvalid("prompts_per_session must be positive")
        if self.min_feedback_delay_ms < 0:
            raise ConfigInvalid("min_feedback_delay_ms must be non-negative")
        if self.reward_every_n_correct < 1:
            raise ConfigInvalid("reward_every_n_correct must be positive")
        if self.reward_duration_ms < 1:
            raise ConfigInvalid("reward_duration_ms must be positive")
        if self.attempt_timeout_ms < 1:
            raise ConfigInvalid("attempt_timeout_ms must be positive")
        if self.max_attempts < 1:
            raise ConfigInvalid("max_attempts must be positive")
        if self.pictogram_interval_ms < MIN_PICTOGRAM_INTERVAL_MS:
            raise ConfigInvalid(
                f"pictogram_interval_ms below 55/minute ceiling ({MIN_PICTOGRAM_INTERVAL_MS} ms)"
            )
        unknown = set(self.mode_weights) - {"label", "attribute", "sound"}
        if unknown:
            raise ConfigInvalid(f"unknown modes in mode_weights: {sorted(unknown)}")
        if any(w < 0 for w in self.mode_weights.values()):
            raise ConfigInvalid("mode weights must be non-negative")
        if not any(w > 0 for w in self.mode_weights.values()):
            raise ConfigInvalid("at least one mode weight must be positive")


@dataclass(frozen=True)
class PlayerSlot:
    index: int
    display_name: str = ""
    avatar_id: str = "default"
    connected: bool = False

    def __post_init__(self):
        if not self.display_name:
            object.__setattr__(self, "display_name", f"Player {self.index + 1}")


@dataclass(frozen=True)
class PromptOutcome:
    task_index: int
    player_index: int
    result: str  # "correct" | "passed"
    attempts_used: int
    final_transcript: str
    matched_label: Optional[str]
    recognition_latency_ms: int


@dataclass(frozen=True)
class Summary:
    per_player_correct: tuple[int, ...]
    per_player_passed: tuple[int, ...]
    mean_recognition_latency_ms: float
    total_duration_ms: int
    total_tasks: int


# --- Events ---------------------------------------------------------------


@dataclass(frozen=True)
class PlayerJoined:
    slot: PlayerSlot


@dataclass(frozen=True)
class AllReady:
    pass


@dataclass(frozen=True)
class TranscriptFinal:
    transcript: FinalTranscript


@dataclass(frozen=True)
class AttemptTimeout:
    pass


@dataclass(frozen=True)
class TimerElapsed:
    timer_id: str


SessionEvent = Union[PlayerJoined, AllReady, TranscriptFinal, AttemptTimeout, TimerElapsed]


# --- Effects --------------------------------------------------------------


@dataclass(frozen=True)
class ShowPrompt:
    task: PromptTask
    task_index: int
    active_player: int


@dataclass(frozen=True)
class StartTimer:
    timer_id: str
    duration_ms: int


@dataclass(frozen=True)
class ShowReward:
    icon: str
    duration_ms: int


@dataclass(frozen=True)
class ShowTryAgain:
    attempts_left: int


@dataclass(frozen=True)
class ShowPassed:
    pass


@dataclass(frozen=True)
class AdvanceTurn:
    new_active: int


@dataclass(frozen=True)
class RecordOutcome:
    outcome: PromptOutcome


@dataclass(frozen=True)
class EndSession:
    summary: Summary


Effect = Union[ShowPrompt, StartTimer, ShowReward, ShowTryAgain, ShowPassed, AdvanceTurn, RecordOutcome, EndSession]

TIMER_ATTEMPT = "attempt"
TIMER_FEEDBACK = "feedback_delay"
TIMER_REWARD = "reward"
TIMER_NEXT_PROMPT = "next_prompt"


@dataclass(frozen=True)
class SessionState:
    session_id: str
    config: SessionConfig
    players: tuple[PlayerSlot, ...]
    tasks: tuple[PromptTask, ...]
    cursor: int = 0
    active_player: int = 0
    attempts_on_current: int = 0
    correct_counts: tuple[int, ...] = ()
    phase: Phase = Phase.LOBBY
    metrics: tuple[PromptOutcome, ...] = ()
    pending_timer: Optional[str] = None
    timer_seq: int = 0
    last_prompt_at: Optional[int] = None
    started_at: Optional[int] = None
    completed_at: Optional[int] = None

    @property
    def current_task(self) -> PromptTask:
        return self.tasks[self.cursor]


def create_session(session_id: str, config: SessionConfig, tasks: list[PromptTask]) -> SessionState:
    config.validate()
    if len(tasks) != config.prompts_per_session:
        raise TaskCountMismatch(
            f"{len(tasks)} tasks for prompts_per_session={config.prompts_per_session}"
        )
    return SessionState(
        session_id=session_id,
        config=config,
        players=tuple(PlayerSlot(index=i) for i in range(config.player_count)),
        tasks=tuple(tasks),
        correct_counts=tuple(0 for _ in range(config.player_count)),
    )


def _timer(state: SessionState, kind: str) -> tuple[SessionState, str]:
    seq = state.timer_seq + 1
    timer_id = f"{kind}#{seq}"
    return replace(state, timer_seq=seq, pending_timer=timer_id), timer_id


def _show_prompt(state: SessionState, now: int, effects: list[Effect]) -> SessionState:
    state, timer_id = _timer(state, TIMER_ATTEMPT)
    effects.append(ShowPrompt(task=state.current_task, task_index=state.cursor, active_player=state.active_player))
    effects.append(StartTimer(timer_id, state.config.attempt_timeout_ms))
    return replace(state, phase=Phase.AWAITING_ANSWER, attempts_on_current=0, last_prompt_at=now)


def _advance(state: SessionState, now: int, effects: list[Effect], waiting_phase: Phase) -> SessionState:
    cursor = state.cursor + 1
    state = replace(state, cursor=cursor, attempts_on_current=0)
    if cursor == len(state.tasks):
        state = replace(state, phase=Phase.COMPLETE, pending_timer=None, completed_at=now)
        effects.append(EndSession(session_summary(state)))
        return state
    if state.config.player_count == 2:
        new_active = cursor % 2
        state = replace(state, active_player=new_active)
        effects.append(AdvanceTurn(new_active))
    gap = 0
    if state.last_prompt_at is not None:
        gap = state.config.pictogram_interval_ms - (now - state.last_prompt_at)
    if gap > 0:
        state, timer_id = _timer(state, TIMER_NEXT_PROMPT)
        effects.append(StartTimer(timer_id, gap))
        return replace(state, phase=waiting_phase)
    return _show_prompt(state, now, effects)


def _record(state: SessionState, outcome: PromptOutcome) -> SessionState:
    return replace(state, metrics=state.metrics + (outcome,))


def _fail_attempt(state: SessionState, transcript_text: str, latency_ms: int, now: int) -> tuple[SessionState, list[Effect]]:
    effects: list[Effect] = []
    attempts = state.attempts_on_current + 1
    state = replace(state, attempts_on_current=attempts)
    if attempts < state.config.max_attempts:
        state, timer_id = _timer(state, TIMER_ATTEMPT)
        effects.append(ShowTryAgain(attempts_left=state.config.max_attempts - attempts))
        effects.append(StartTimer(timer_id, state.config.attempt_timeout_ms))
        return state, effects
    outcome = PromptOutcome(
        task_index=state.cursor,
        player_index=state.active_player,
        result="passed",
        attempts_used=attempts,
        final_transcript=transcript_text,
        matched_label=None,
        recognition_latency_ms=latency_ms,
    )
    state = _record(state, outcome)
    effects.append(RecordOutcome(outcome))
    effects.append(ShowPassed())
    state = _advance(state, now, effects, waiting_phase=Phase.PASSED_NOTICE)
    return state, effects


def handle_event(state: SessionState, event: SessionEvent, now: int) -> tuple[SessionState, list[Effect]]:
    """Apply one event; returns the successor state and ordered effects.

    Raises InvalidTransition (without touching state) when the event is
    not meaningful in the current phase.
    """
    cfg = state.config

    if isinstance(event, PlayerJoined):
        slot = event.slot
        if slot.index >= cfg.player_count:
            raise InvalidTransition(state.phase, event)
        players = tuple(slot if p.index == slot.index else p for p in state.players)
        return replace(state, players=players), []

    if isinstance(event, AllReady):
        if state.phase is not Phase.LOBBY:
            raise InvalidTransition(state.phase, event)
        effects: list[Effect] = []
        state = replace(state, started_at=now)
        if not state.tasks:
            state = replace(state, phase=Phase.COMPLETE, completed_at=now)
            effects.append(EndSession(session_summary(state)))
            return state, effects
        return _show_prompt(state, now, effects), effects

    if isinstance(event, TranscriptFinal):
        if state.phase is not Phase.AWAITING_ANSWER:
            raise InvalidTransition(state.phase, event)
        transcript = event.transcript
        result = match(transcript.text, state.current_task.expected)
        if not result.matched:
            return _fail_attempt(state, transcript.text, transcript.latency_ms, now)
        effects = []
        counts = list(state.correct_counts)
        counts[state.active_player] += 1
        outcome = PromptOutcome(
            task_index=state.cursor,
            player_index=state.active_player,
            result="correct",
            attempts_used=state.attempts_on_current + 1,
            final_transcript=transcript.text,
            matched_label=result.matched_label,
            recognition_latency_ms=transcript.latency_ms,
        )
        state = _record(replace(state, correct_counts=tuple(counts)), outcome)
        effects.append(RecordOutcome(outcome))
        state, timer_id = _timer(state, TIMER_FEEDBACK)
        effects.append(StartTimer(timer_id, cfg.min_feedback_delay_ms))
        return replace(state, phase=Phase.PRE_REWARD_DELAY), effects

    if isinstance(event, AttemptTimeout):
        if state.phase is not Phase.AWAITING_ANSWER:
            raise InvalidTransition(state.phase, event)
        return _fail_attempt(state, "", 0, now)

    if isinstance(event, TimerElapsed):
        if event.timer_id != state.pending_timer:
            raise InvalidTransition(state.phase, event)
        kind = event.timer_id.split("#", 1)[0]
        state = replace(state, pending_timer=None)
        if kind == TIMER_ATTEMPT and state.phase is Phase.AWAITING_ANSWER:
            return _fail_attempt(state, "", 0, now)
        if kind == TIMER_FEEDBACK and state.phase is Phase.PRE_REWARD_DELAY:
            effects = []
            total_correct = sum(state.correct_counts)
            if total_correct % cfg.reward_every_n_correct == 0:
                state, timer_id = _timer(state, TIMER_REWARD)
                effects.append(ShowReward(cfg.reward_icon, cfg.reward_duration_ms))
                effects.append(StartTimer(timer_id, cfg.reward_duration_ms))
                return replace(state, phase=Phase.REWARD), effects
            return _advance(state, now, effects, waiting_phase=Phase.PROMPTING), effects
        if kind == TIMER_REWARD and state.phase is Phase.REWARD:
            effects = []
            return _advance(state, now, effects, waiting_phase=Phase.PROMPTING), effects
        if kind == TIMER_NEXT_PROMPT and state.phase in (Phase.PROMPTING, Phase.PASSED_NOTICE):
            effects = []
            return _show_prompt(state, now, effects), effects
        raise InvalidTransition(state.phase, event)

    raise InvalidTransition(state.phase, event)


def session_summary(state: SessionState) -> Summary:
    if state.phase is not Phase.COMPLETE:
        raise SessionNotComplete(f"phase is {state.phase.value}")
    n = state.config.player_count
    correct = [0] * n
    passed = [0] * n
    latencies = []
    for outcome in state.metrics:
        if outcome.result == "correct":
            correct[outcome.player_index] += 1
        else:
            passed[outcome.player_index] += 1
        latencies.append(outcome.recognition_latency_ms)
    duration = 0
    if state.started_at is not None and state.completed_at is not None:
        duration = state.completed_at - state.started_at
    return Summary(
        per_player_correct=tuple(correct),
        per_player_passed=tuple(passed),
        mean_recognition_latency_ms=(sum(latencies) / len(latencies)) if latencies else 0.0,
        total_duration_ms=duration,
        total_tasks=len(state.tasks),
    )


def set_connected(state: SessionState, player_index: int, connected: bool) -> SessionState:
    """Connectivity bookkeeping for the server; not a game transition."""
    players = tuple(
        replace(p, connected=connected) if p.index == player_index else p for p in state.players
    )
    return replace(state, players=players)
