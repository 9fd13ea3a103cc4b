import random
import threading

import pytest

from covol.recognizer import (
    AudioChunk,
    FinalTranscript,
    HandleFinalized,
    ScriptedRecognizer,
    UnsupportedLanguage,
    UtteranceScript,
    create_recognizer,
)


class FakeClock:
    """Deterministic monotonic clock; sleep() advances it."""

    def __init__(self):
        self.now = 0

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.now += int(seconds * 1000)


def scripted(scripts, clock=None):
    clock = clock or FakeClock()
    return ScriptedRecognizer(scripts=scripts, clock=clock, sleep=clock.sleep), clock


def chunk(n=320):
    return AudioChunk(samples=b"\x00" * n, capture_timestamp=0)


def test_audio_chunk_must_be_even_and_nonempty():
    with pytest.raises(ValueError):
        AudioChunk(samples=b"", capture_timestamp=0)
    with pytest.raises(ValueError):
        AudioChunk(samples=b"\x00" * 3, capture_timestamp=0)


def test_final_transcript_latency_non_negative():
    with pytest.raises(ValueError):
        FinalTranscript(text="x", utterance_end=100, decoded_at=50)


def test_begin_utterance_unsupported_language():
    rec, _ = scripted([UtteranceScript(text="apple")])
    with pytest.raises(UnsupportedLanguage):
        rec.begin_utterance("xx")


def test_scripted_partials_per_chunk():
    rec, _ = scripted([UtteranceScript(text="apple", partials={1: "app", 3: "apple"})])
    handle = rec.begin_utterance("en")
    assert handle.push_audio(chunk()) == "app"
    assert handle.push_audio(chunk()) is None
    assert handle.push_audio(chunk()) == "apple"


def test_finalize_zero_delay():
    rec, _ = scripted([UtteranceScript(text="apple", delay_ms=0)])
    handle = rec.begin_utterance("en")
    final = handle.finalize()
    assert final.text == "apple"
    assert 0 <= final.latency_ms <= 20


def test_finalize_simulated_slow_model():
    rec, _ = scripted([UtteranceScript(text="apple", delay_ms=5000)])
    final = rec.begin_utterance("en").finalize()
    assert 5000 <= final.latency_ms <= 5100


def test_finalize_empty_text():
    rec, _ = scripted([UtteranceScript(text="")])
    assert rec.begin_utterance("en").finalize().text == ""


def test_push_after_finalize_rejected():
    rec, _ = scripted([UtteranceScript(text="apple")])
    handle = rec.begin_utterance("en")
    handle.finalize()
    with pytest.raises(HandleFinalized):
        handle.push_audio(chunk())
    with pytest.raises(HandleFinalized):
        handle.finalize()


def test_scripts_consumed_in_order_then_empty():
    rec, _ = scripted([UtteranceScript(text="one"), UtteranceScript(text="two")])
    assert rec.begin_utterance("en").finalize().text == "one"
    assert rec.begin_utterance("en").finalize().text == "two"
    assert rec.begin_utterance("en").finalize().text == ""


def test_latency_matches_configured_delay_real_clock():
    rec = ScriptedRecognizer(scripts=[UtteranceScript(text="hi", delay_ms=50)])
    final = rec.begin_utterance("en").finalize()
    assert abs(final.latency_ms - 50) <= 100


def test_exactly_one_final_per_utterance_under_random_interleaving():
    # Randomized scheduler: pushes and finalizes race across threads, yet
    # each begun utterance yields exactly one FinalTranscript.
    rng = random.Random(1234)
    for trial in range(20):
        clock = FakeClock()
        rec = ScriptedRecognizer(
            scripts=[UtteranceScript(text=f"u{i}") for i in range(5)],
            clock=clock,
            sleep=lambda s: None,
        )
        handles = [rec.begin_utterance("en") for _ in range(5)]
        finals = []
        errors = []

        def worker(handle, ops):
            for op in ops:
                try:
                    if op == "push":
                        handle.push_audio(chunk())
                    else:
                        finals.append(handle.finalize())
                except HandleFinalized:
                    errors.append(handle)

        threads = []
        for handle in handles:
            ops = ["push"] * rng.randint(0, 4) + ["final", "final"]
            rng.shuffle(ops)
            threads.append(threading.Thread(target=worker, args=(handle, ops)))
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert len(finals) == 5  # one per utterance, duplicates rejected
        assert sorted(f.text for f in finals) == [f"u{i}" for i in range(5)]


def test_factory_defaults_to_scripted(monkeypatch):
    monkeypatch.delenv("COVOL_MODEL_PATH", raising=False)
    rec = create_recognizer(None, language="en")
    assert rec.kind == "scripted"
    assert rec.describe().kind == "scripted"
