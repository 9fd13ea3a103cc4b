#!/usr/bin/env python3
"""Headless demo: play a scripted single- or two-player session and print
every effect the state machine emits, with virtual timestamps."""

import argparse
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from covol.catalog import build_prompt_sequence, load_catalog
from covol.session import Phase, SessionConfig
from conftest import SessionDriver

CATALOG_DIR = Path(__file__).resolve().parent.parent / "catalogs"


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--players", type=int, choices=[1, 2], default=2)
    parser.add_argument("--prompts", type=int, default=6)
    parser.add_argument("--language", default="en")
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--miss-rate", type=float, default=0.2, help="chance a prompt is answered wrong")
    args = parser.parse_args()

    catalog = load_catalog(CATALOG_DIR / f"{args.language}.json")
    config = SessionConfig(player_count=args.players, prompts_per_session=args.prompts, language=args.language)
    tasks = build_prompt_sequence(catalog, config, args.seed)
    rng = random.Random(args.seed)

    driver = SessionDriver(config, tasks, session_id="demo")
    driver.start()
    while driver.state.phase is not Phase.COMPLETE:
        task = driver.state.current_task
        if rng.random() < args.miss_rate:
            driver.answer("umm I do not know", wait_ms=1200)
        else:
            driver.answer(f"it is a {task.expected[0]}", wait_ms=800)
        driver.settle()

    for at, effect in driver.log:
        print(f"{at:>8} ms  {effect}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
