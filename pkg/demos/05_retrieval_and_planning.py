"""
In-context example retrieval and mock planning
===============================================

Planning prompts carry k example conversations chosen by nearest-neighbor
search over precomputed audio embeddings. This demo runs the full planning
loop offline against a scriptable mock provider.
"""
import random

from vsltools import (CandidateDatabase, ExampleConversation, MockProvider,
                      PlanConfig, knn, plan, serialize)
from vsltools.planner import build_system_instruction, mentions_all_cue_families

from _shared import make_vsl  # small layout factory shared by the demos

rng = random.Random(7)

# A candidate database: each entry pairs a reference audio (by path), its
# embedding, a written reasoning statement, and a reference layout.
db = CandidateDatabase(tuple(
    ExampleConversation(
        id=f"ex{i}", audio_ref=f"audio/ex{i}.wav",
        embedding=(rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1)),
        reasoning="the source is centered and steady",
        vsl=make_vsl(rng))
    for i in range(8)))

query_embedding = db.entries[5].embedding  # pretend the query sounds like ex5
for entry in knn(db, query_embedding, 3):
    print("retrieved:", entry.id)

# The system instruction frames the task and directs attention to the four
# spatial cue families before any layout is written.
cfg = PlanConfig(k=3, temperature=0.5)
instruction = build_system_instruction(cfg)
print("mentions all cue families:", mentions_all_cue_families(instruction))

# A mock provider stands in for the real endpoint: script it to answer with
# a rendered layout, run the planner, and inspect the result.
target = make_vsl(rng)
provider = MockProvider([
    "let me think about that...",          # first reply fails to parse
    serialize(target, cfg.template(), reasoning="sources placed by level"),
])
result = plan("audio/query.wav", query_embedding, db, cfg, provider)
print("attempts:", result.attempts)
print("examples used:", result.example_ids)
print("planned keyframes:", len(result.parsed.vsl.keyframes))
print("reasoning:", result.parsed.reasoning)
