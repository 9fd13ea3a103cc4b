#!/usr/bin/env python3
"""Record the full server->client message stream of a scripted two-player
session, as a JSON fixture the web client's reducer tests replay.

Runs the real server on a loopback socket with an accelerated clock.
"""

import argparse
import json
import sys
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))

from server_utils import Client, run_server  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(REPO_ROOT / "frontend" / "test" / "fixtures" / "session_stream.json"))
    parser.add_argument("--prompts", type=int, default=6)
    parser.add_argument("--seed", type=int, default=2026)
    args = parser.parse_args()

    with run_server() as (app, port):
        c1, c2 = Client(port), Client(port)
        created = c1.create_session({"player_count": 2, "prompts_per_session": args.prompts}, seed=args.seed)
        c1.join(session_id=created.payload["session_id"], display_name="Ana")
        c2.join(join_code=created.payload["join_code"], display_name="Ben")
        c1.ready()
        c2.ready()
        catalog = app.state.registry.catalog_for("en")

        # Drive the session manually so the stream also contains a wrong
        # attempt (try_again) before the first correct answer.
        by_index = {c.player_index: c for c in (c1, c2)}
        done = set()
        answered = None
        missed_once = False
        while len(done) < 2:
            for client in (c1, c2):
                if client.player_index in done:
                    continue
                message = client.recv()
                if message.type == "session_complete":
                    done.add(client.player_index)
                elif message.type == "prompt_shown":
                    active = message.payload["active_player"]
                    key = (message.payload["task_index"], active)
                    if active == client.player_index and answered != key:
                        answered = key
                        label = catalog.object_by_id(message.payload["object_id"]).canonical_label
                        if not missed_once:
                            missed_once = True
                            by_index[active].transcript("umm I am not sure")
                        by_index[active].transcript(label)
        stream = [
            {"type": m.type, "protocol_version": m.protocol_version, "payload": m.payload}
            for m in c1.received
        ]
        c1.close()
        c2.close()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(stream, ensure_ascii=False, indent=2), encoding="utf-8")
    print(f"wrote {len(stream)} messages to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
