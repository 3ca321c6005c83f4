"""Drive the human-in-the-loop service end to end, in process.

An annotator leases the selected batch, labels spans (minting one brand-new
slot along the way), and the loop advances once the batch resolves.

Run: python demos/06_annotation_service.py
"""

from fastapi.testclient import TestClient

import slotdiscovery as sd
from slotdiscovery import loop as al
from slotdiscovery.service import AnnotationSession, create_app

dataset = sd.generate(sd.SynthSpec(n_slots=4, n_new_slots=2, n_utterances=160, new_slot_share=0.2, seed=0))
config = sd.RunConfig(
    selection=sd.SelectionConfig(strategy="margin", batch_fraction=0.05, seed=0),
    training=sd.TrainingConfig(alpha=0.05, learning_rate=0.02, batch_size=32,
                               max_initial_epochs=10, epochs_per_iteration=2, seed=0),
    model=sd.ModelConfig(encoder_dim=24, projection_dim=32, n_buckets=1024, dropout_rate=0.1),
    stopping=sd.StoppingRule(budget_fraction=0.2, patience=None),
)
print("training the warm-up model ...")
state = al.initialize_state(dataset, config, simulation=False)
session = AnnotationSession(state)
session.start()
client = TestClient(create_app(session))

progress = client.get("/api/progress").json()
print(f"iteration {progress['iteration']}, labeled {progress['labeled_fraction']:.1%}, "
      f"known slots {progress['known_slot_count']}, phase {progress['phase']}")

batch = client.get("/api/batch", params={"annotator": "demo", "max": 100}).json()
print(f"\nleased {len(batch['tasks'])} tasks")
for i, task in enumerate(batch["tasks"]):
    tokens = task["tokens"]
    s = task["span"]
    highlighted = " ".join(
        f"[{t}]" if s["start"] <= j < s["start"] + s["len"] else t for j, t in enumerate(tokens)
    )
    top = task["suggestions"][0] if task["suggestions"] else {"slot": "?", "probability": 0.0}
    print(f"  {task['task_id']}: {highlighted}")
    print(f"      weak={task['weak_label']}  model suggests {top['slot']} ({top['probability']:.2f})")
    if i == 0:
        body = {"annotator": "demo", "new_slot": {"name": "roomtype", "description": "the kind of room"}}
        print("      -> minting new slot 'roomtype'")
    elif i == 1:
        client.post(f"/api/tasks/{task['task_id']}/skip", json={"annotator": "demo"})
        print("      -> skipped (stays in the unlabeled pool)")
        continue
    else:
        body = {"annotator": "demo", "slot": top["slot"]}
        print(f"      -> accepting suggestion {top['slot']}")
    client.post(f"/api/tasks/{task['task_id']}/label", json=body)

progress = client.get("/api/progress").json()
print(f"\nbatch resolved: iteration {progress['iteration']}, labeled {progress['labeled_fraction']:.1%}, "
      f"known slots {progress['known_slot_count']}")
slots = client.get("/api/slots").json()
print("known slots now:", [s["name"] for s in slots["slots"] if s["known"]])
curve = client.get("/api/curve").json()["curve"]
print("curve:", [(row["iteration"], round(row["span_f1"], 3)) for row in curve])
