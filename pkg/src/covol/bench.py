"""Recognizer benchmarking: word error rate, accuracy, and latency stats.

Mirrors the evaluation workflow we use when trying out candidate engine
models on a manifest of recordings (or scripted stand-ins): decode each
entry, check whether the target answer was matched, and aggregate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from covol.matching import match, normalize
from covol.recognizer import (
    AudioChunk,
    EngineRecognizer,
    RecognizerDescriptor,
    RecognizerUnavailable,
    ScriptedRecognizer,
    UtteranceScript,
)

CHUNK_FRAMES = 4000  # 0.25 s at 16 kHz


class BenchError(Exception):
    pass


class EmptyReference(BenchError):
    pass


class AudioUnreadable(BenchError):
    def __init__(self, entry_index: int, reason: str):
        self.entry_index = entry_index
        super().__init__(f"entry {entry_index}: {reason}")


@dataclass(frozen=True)
class BenchEntry:
    references: tuple[str, ...]
    language: str = "en"
    script: Optional[str] = None
    delay_ms: int = 0
    audio_ref: Optional[str] = None


@dataclass(frozen=True)
class BenchManifest:
    entries: tuple[BenchEntry, ...]
    recognizer: RecognizerDescriptor
    base_dir: Optional[Path] = None


@dataclass(frozen=True)
class BenchRow:
    index: int
    recognized: str
    matched: bool
    exact: bool
    wer: Fraction
    latency_ms: int


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    accuracy: Fraction
    exact_accuracy: Fraction
    mean_wer: Fraction
    mean_latency_ms: float
    max_latency_ms: int
    model_identifier: str

    @property
    def entry_count(self) -> int:
        return len(self.rows)


def word_level_distance(a: list[str], b: list[str]) -> int:
    """Levenshtein distance over word tokens (substitution cost 1)."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, wa in enumerate(a, start=1):
        cur = [i]
        for j, wb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (wa != wb)))
        prev = cur
    return prev[-1]


def word_error_rate(reference: str, hypothesis: str) -> Fraction:
    ref = normalize(reference)
    if not ref:
        raise EmptyReference(f"reference {reference!r} is empty after normalization")
    hyp = normalize(hypothesis)
    return Fraction(word_level_distance(ref, hyp), len(ref))


def load_manifest(path) -> BenchManifest:
    path = Path(path)
    raw = json.loads(path.read_text(encoding="utf-8"))
    rec = raw.get("recognizer", {})
    descriptor = RecognizerDescriptor(
        kind=rec.get("kind", "scripted"),
        model_identifier=rec.get("model_identifier", ""),
        language=rec.get("language", "en"),
    )
    entries = []
    for i, e in enumerate(raw.get("entries", [])):
        refs = e.get("reference")
        if isinstance(refs, str):
            refs = [refs]
        if not refs:
            raise BenchError(f"entry {i}: reference is required")
        entries.append(
            BenchEntry(
                references=tuple(refs),
                language=e.get("language", "en"),
                script=e.get("script"),
                delay_ms=int(e.get("delay_ms", 0)),
                audio_ref=e.get("audio"),
            )
        )
    if not entries:
        raise BenchError("manifest has no entries")
    return BenchManifest(entries=tuple(entries), recognizer=descriptor, base_dir=path.parent)


def _read_wav(path: Path, entry_index: int) -> bytes:
    try:
        with wave.open(str(path), "rb") as wav:
            if wav.getframerate() != 16000 or wav.getsampwidth() != 2 or wav.getnchannels() != 1:
                raise AudioUnreadable(entry_index, "WAV must be 16 kHz, 16-bit, mono")
            return wav.readframes(wav.getnframes())
    except (OSError, wave.Error) as exc:
        raise AudioUnreadable(entry_index, str(exc)) from exc


def _decode_entry(index: int, entry: BenchEntry, manifest: BenchManifest, model_path: Optional[str]) -> BenchRow:
    if entry.script is not None:
        recognizer = ScriptedRecognizer(
            scripts=[UtteranceScript(text=entry.script, delay_ms=entry.delay_ms)],
            languages=(entry.language,),
        )
        handle = recognizer.begin_utterance(entry.language)
        final = handle.finalize()
    else:
        if model_path is None:
            raise RecognizerUnavailable(
                f"entry {index} needs an engine model for audio decoding"
            )
        recognizer = EngineRecognizer(model_path, language=entry.language)
        handle = recognizer.begin_utterance(entry.language)
        base = manifest.base_dir or Path(".")
        pcm = _read_wav(base / entry.audio_ref, index)
        ts = 0
        for off in range(0, len(pcm), CHUNK_FRAMES * 2):
            chunk = pcm[off : off + CHUNK_FRAMES * 2]
            if chunk:
                handle.push_audio(AudioChunk(samples=chunk, capture_timestamp=ts))
                ts += CHUNK_FRAMES * 1000 // 16000
        final = handle.finalize()

    result = match(final.text, entry.references)
    canonical = entry.references[0]
    return BenchRow(
        index=index,
        recognized=final.text,
        matched=result.matched,
        exact=normalize(final.text) == normalize(canonical),
        wer=word_error_rate(canonical, final.text),
        latency_ms=final.latency_ms,
    )


def run_benchmark(manifest: BenchManifest, model_path: Optional[str] = None, max_workers: int = 8) -> BenchReport:
    """Decode every entry (in parallel, order preserved) and aggregate."""
    if not manifest.entries:
        raise BenchError("manifest has no entries")
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(
            pool.map(
                lambda pair: _decode_entry(pair[0], pair[1], manifest, model_path),
                enumerate(manifest.entries),
            )
        )
    n = len(rows)
    return BenchReport(
        rows=tuple(rows),
        accuracy=Fraction(sum(r.matched for r in rows), n),
        exact_accuracy=Fraction(sum(r.exact for r in rows), n),
        mean_wer=sum((r.wer for r in rows), Fraction(0)) / n,
        mean_latency_ms=sum(r.latency_ms for r in rows) / n,
        max_latency_ms=max(r.latency_ms for r in rows),
        model_identifier=model_path or manifest.recognizer.model_identifier,
    )


def _report_dict(report: BenchReport) -> dict:
    return {
        "rows": [
            {
                "index": r.index,
                "recognized": r.recognized,
                "matched": r.matched,
                "wer": f"{float(r.wer):.6f}",
                "latency_ms": r.latency_ms,
            }
            for r in report.rows
        ],
        "aggregate": {
            "accuracy": f"{float(report.accuracy):.6f}",
            "exact_accuracy": f"{float(report.exact_accuracy):.6f}",
            "mean_wer": f"{float(report.mean_wer):.6f}",
            "mean_latency_ms": f"{report.mean_latency_ms:.3f}",
            "max_latency_ms": report.max_latency_ms,
            "model_identifier": report.model_identifier,
            "entry_count": report.entry_count,
        },
    }


def render_report(report: BenchReport, fmt: str) -> str:
    """Bit-stable rendering for equal reports; csv or json."""
    if fmt == "json":
        return json.dumps(_report_dict(report), ensure_ascii=False, sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["index", "recognized", "matched", "wer", "latency_ms"])
        for r in report.rows:
            writer.writerow([r.index, r.recognized, int(r.matched), f"{float(r.wer):.6f}", r.latency_ms])
        return buf.getvalue()
    raise ValueError(f"unknown format {fmt!r}")


def export_report(report: BenchReport, fmt: str, path) -> None:
    Path(path).write_text(render_report(report, fmt), encoding="utf-8")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="covol-bench", description="Recognizer accuracy/latency benchmark")
    parser.add_argument("--manifest", required=True, help="benchmark manifest JSON")
    parser.add_argument("--model-path", default=None, help="engine model directory (audio entries)")
    parser.add_argument("--out", default=None, help="report output path (default: stdout)")
    parser.add_argument("--format", choices=["csv", "json"], default="csv")
    args = parser.parse_args(argv)

    manifest = load_manifest(args.manifest)
    report = run_benchmark(manifest, model_path=args.model_path)
    if args.out:
        export_report(report, args.format, args.out)
    else:
        print(render_report(report, args.format), end="")
    agg = _report_dict(report)["aggregate"]
    print(
        f"entries={agg['entry_count']} accuracy={agg['accuracy']} "
        f"mean_wer={agg['mean_wer']} mean_latency_ms={agg['mean_latency_ms']}"
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
