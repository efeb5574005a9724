"""Record a real API exchange into the frontend contract-test fixture.

Trains a small model on the demo graph, drives the HTTP app in-process, and
writes frontend/tests/fixtures/session.json. Rerun when the API schema or
the demo data changes:

    python scripts/record_ui_fixture.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient

from pkchat.model import ModelConfig
from pkchat.service import Orchestrator, SessionStore, create_app
from pkchat.textpipe import gen_synthetic_corpus, make_demo_kg
from pkchat.trainer import TrainConfig, to_model, train

OUT = Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures" / "session.json"


def main():
    kg = make_demo_kg(seed=2, n_entities=8)
    scens = gen_synthetic_corpus(kg, seed=3, n_scenarios=8, switch_fraction=0.25)
    config = ModelConfig(layers=2, heads=2, hidden=32, latent=3, ffn_mult=2,
                         max_knowledge=64, max_context=32, max_response=12)
    ckpt, _ = train(scens, config,
                    TrainConfig(steps=300, batch_size=8, seed=1, crf_epochs=5),
                    kg=kg)
    orch = Orchestrator(to_model(ckpt), kg, crf=ckpt.crf,
                        corpus_stats=ckpt.corpus_stats, tau=0.5,
                        checkpoint_path="demo.ckpt")
    client = TestClient(create_app(orch, SessionStore()))

    session_id = client.post("/api/sessions").json()["id"]
    heads = kg.head_entities()
    texts = [
        f"what is the catalogued_as of {heads[0]} ?",
        f"tell me the found_in of {heads[0]} .",
        f"what is the is_a of {heads[1]} ?",
    ]
    exchanges = []
    for text in texts:
        resp = client.post(f"/api/sessions/{session_id}/messages",
                           json={"text": text})
        resp.raise_for_status()
        exchanges.append({"text": text, "response": resp.json()})
    snapshot = client.get(f"/api/sessions/{session_id}").json()

    has_copy = any(t["source"] == "copy"
                   for ex in exchanges for t in ex["response"]["tokens"])
    has_switch = any(ex["response"]["topic_switched"] for ex in exchanges)
    if not (has_copy and has_switch):
        raise SystemExit("fixture lacks copy tokens or a switch; retrain longer")

    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(
        {"exchanges": exchanges, "snapshot": snapshot}, indent=2) + "\n",
        encoding="utf-8")
    print(f"wrote {OUT}")
    print(f"copy tokens: {sum(t['source'] == 'copy' for ex in exchanges for t in ex['response']['tokens'])}")


if __name__ == "__main__":
    main()
