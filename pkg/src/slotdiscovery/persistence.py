"""Checkpointing: versioned, atomic, bit-exact state round-trips.

A checkpoint is a single .npz container holding the model arrays plus a JSON
metadata blob (config, pools, catalog, assigned labels, history). All
randomness in a run derives from seeds recorded in the config, so resuming a
checkpoint replays the exact downstream trajectory.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import zipfile
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .classifier import MultiTaskModel
from .corpus import ALPools, Dataset, DatasetSplit, SlotCatalog, load_dataset
from .encoder import HashAttentionBackend
from .loop import ALState, IterationRecord, RunConfig

FORMAT_VERSION = "1"

_ARRAY_KEYS = ("embed", "wq", "wk", "wv", "w1", "b1", "slot_w", "slot_b", "weak_w", "weak_b")


class CheckpointError(RuntimeError):
    """Raised for unreadable, corrupt or incompatible checkpoint files."""


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _model_arrays(model: MultiTaskModel) -> dict[str, np.ndarray]:
    return {
        "embed": model.backend.table,
        "wq": model.backend.wq,
        "wk": model.backend.wk,
        "wv": model.backend.wv,
        "w1": model.w1,
        "b1": model.b1,
        "slot_w": model.slot_weight,
        "slot_b": model.slot_bias,
        "weak_w": model.weak_weight,
        "weak_b": model.weak_bias,
    }


def _model_meta(model: MultiTaskModel) -> dict:
    return {
        "slot_labels": list(model.slot_labels),
        "weak_labels": list(model.weak_labels),
        "seed": model.seed,
        "encoder_dim": model.backend.dim,
        "n_buckets": model.backend.n_buckets,
        "dropout_rate": model.backend.dropout_rate,
    }


def _rebuild_model(meta: dict, arrays: dict[str, np.ndarray]) -> MultiTaskModel:
    backend = HashAttentionBackend(
        dim=int(meta["encoder_dim"]),
        n_buckets=int(meta["n_buckets"]),
        dropout_rate=float(meta["dropout_rate"]),
        seed=int(meta["seed"]),
    )
    backend.table = arrays["embed"]
    backend.wq = arrays["wq"]
    backend.wk = arrays["wk"]
    backend.wv = arrays["wv"]
    if backend.table.shape != (backend.n_buckets + 1, backend.dim):
        raise CheckpointError(f"embedding table shape {backend.table.shape} does not match metadata")
    return MultiTaskModel(
        backend=backend,
        w1=arrays["w1"],
        b1=arrays["b1"],
        slot_weight=arrays["slot_w"],
        slot_bias=arrays["slot_b"],
        weak_weight=arrays["weak_w"],
        weak_bias=arrays["weak_b"],
        slot_labels=list(meta["slot_labels"]),
        weak_labels=list(meta["weak_labels"]),
        seed=int(meta["seed"]),
    )


def _atomic_write(path: Path, payload: bytes) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(payload)
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def save_state(state: ALState, path: str | Path, service: dict | None = None) -> None:
    """Write the full run state atomically.

    ``service`` carries the annotation session's partial-batch bookkeeping
    (completed labels, declared slots) so restarts never lose human work.
    """
    path = Path(path)
    meta = {
        "format": FORMAT_VERSION,
        "kind": "al-state",
        "config": state.config.to_dict(),
        "simulation": state.simulation,
        "split": {
            "train": list(state.split.train),
            "test": list(state.split.test),
            "validation": list(state.split.validation),
        },
        "pools": {
            "labeled": sorted(state.pools.labeled),
            "unlabeled": sorted(state.pools.unlabeled),
        },
        "catalog": {"labels": list(state.catalog.labels), "known": sorted(state.catalog.known)},
        "assigned": dict(sorted(state.assigned.items())),
        "warmup": asdict(state.warmup),
        "history": [asdict(r) for r in state.history],
        "model": _model_meta(state.model),
    }
    if service is not None:
        meta["service"] = service
    if state.config.dataset_path:
        try:
            meta["dataset_digest"] = file_digest(state.config.dataset_path)
        except OSError:
            meta["dataset_digest"] = None
    buffer = io.BytesIO()
    np.savez(buffer, meta=np.array(json.dumps(meta, sort_keys=True)), **_model_arrays(state.model))
    _atomic_write(path, buffer.getvalue())


def _load_container(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    try:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["meta"]))
            arrays = {k: np.array(data[k]) for k in _ARRAY_KEYS}
    except (OSError, zipfile.BadZipFile, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if meta.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format {meta.get('format')!r} (expected {FORMAT_VERSION!r})")
    return meta, arrays


def resume(path: str | Path, dataset: Dataset | None = None) -> ALState:
    """Restore a run state; the dataset reloads from its recorded path.

    Passing ``dataset`` skips the file reload (the digest is still checked
    when available).
    """
    meta, arrays = _load_container(path)
    config = RunConfig.from_dict(meta["config"])
    if dataset is None:
        if not config.dataset_path:
            raise CheckpointError("checkpoint records no dataset path; pass the dataset explicitly")
        if meta.get("dataset_digest"):
            digest = file_digest(config.dataset_path)
            if digest != meta["dataset_digest"]:
                raise CheckpointError(
                    f"dataset file {config.dataset_path} changed since checkpoint "
                    f"(sha256 {digest[:12]} != {meta['dataset_digest'][:12]})"
                )
        dataset = load_dataset(config.dataset_path)
    model = _rebuild_model(meta["model"], arrays)
    state = ALState(
        dataset=dataset,
        split=DatasetSplit(
            train=tuple(meta["split"]["train"]),
            test=tuple(meta["split"]["test"]),
            validation=tuple(meta["split"]["validation"]),
        ),
        pools=ALPools(labeled=set(meta["pools"]["labeled"]), unlabeled=set(meta["pools"]["unlabeled"])),
        catalog=SlotCatalog(labels=list(meta["catalog"]["labels"]), known=set(meta["catalog"]["known"])),
        model=model,
        config=config,
        assigned=dict(meta["assigned"]),
        warmup=IterationRecord(**_record_fields(meta["warmup"])),
        history=[IterationRecord(**_record_fields(r)) for r in meta["history"]],
        simulation=bool(meta["simulation"]),
    )
    if state.catalog.labels != model.slot_labels:
        raise CheckpointError("catalog and model slot labels disagree; checkpoint is corrupt")
    return state


def load_service_meta(path: str | Path) -> dict | None:
    """The annotation session's bookkeeping stored alongside the state, if any."""
    meta, _ = _load_container(path)
    return meta.get("service")


def load_model(path: str | Path) -> tuple[MultiTaskModel, SlotCatalog]:
    """Load just the model and slot catalog from any checkpoint (for evaluation)."""
    meta, arrays = _load_container(path)
    model = _rebuild_model(meta["model"], arrays)
    catalog = SlotCatalog(labels=list(meta["catalog"]["labels"]), known=set(meta["catalog"]["known"]))
    return model, catalog


def _record_fields(raw: dict) -> dict:
    return {
        "iteration": int(raw["iteration"]),
        "selected": tuple(raw["selected"]),
        "newly_discovered": tuple(raw["newly_discovered"]),
        "labeled_count": int(raw["labeled_count"]),
        "labeled_fraction": float(raw["labeled_fraction"]),
        "test_f1": float(raw["test_f1"]),
        "validation_f1": float(raw["validation_f1"]),
        "known_slots": int(raw["known_slots"]),
    }
