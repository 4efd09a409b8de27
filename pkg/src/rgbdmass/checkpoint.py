"""Single-file checkpoints: a zip archive of named, shape-tagged arrays with
a versioned JSON header."""

from __future__ import annotations

import io
import json
import zipfile
from pathlib import Path

import numpy as np
import torch

from .errors import CheckpointShapeError, VersionError
from .nets.model import MassModel

FORMAT_VERSION = 1


def save_checkpoint(model: MassModel, path: str | Path) -> None:
    state = model.state_dict()  # parameters and buffers (e.g. norm statistics)
    meta = {
        "format_version": FORMAT_VERSION,
        "build_config": model.build_config,
        "dtype": str(next(model.parameters()).dtype).removeprefix("torch."),
        "param_names": list(state),
    }
    arrays = {"param::" + name: t.detach().cpu().numpy() for name, t in state.items()}
    arrays["meta"] = np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8)
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    Path(path).write_bytes(buffer.getvalue())


def _read_archive(path: str | Path):
    try:
        archive = np.load(path)
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise VersionError(f"unreadable checkpoint {path}: {exc}") from exc
    if "meta" not in archive:
        raise VersionError(f"checkpoint {path} has no metadata header")
    meta = json.loads(archive["meta"].tobytes().decode())
    if meta.get("format_version") != FORMAT_VERSION:
        raise VersionError(
            f"unsupported checkpoint version {meta.get('format_version')} in {path}"
        )
    return archive, meta


def load_weights(model: MassModel, path: str | Path) -> MassModel:
    """Load parameters and buffers into an existing model, verifying every
    tensor's shape."""
    archive, meta = _read_archive(path)
    current = model.state_dict()
    state = {}
    for name, tensor in current.items():
        key = "param::" + name
        if key not in archive:
            raise CheckpointShapeError(f"checkpoint is missing parameter '{name}'")
        array = archive[key]
        if tuple(array.shape) != tuple(tensor.shape):
            raise CheckpointShapeError(
                f"shape mismatch for '{name}': checkpoint {tuple(array.shape)} "
                f"vs model {tuple(tensor.shape)}"
            )
        state[name] = torch.from_numpy(array.copy())
    extra = [
        k.removeprefix("param::")
        for k in archive.files
        if k.startswith("param::") and k.removeprefix("param::") not in current
    ]
    if extra:
        raise CheckpointShapeError(f"checkpoint has unexpected parameter '{extra[0]}'")
    # .to(dtype) casts floating tensors only; integer buffers are untouched
    model.to(getattr(torch, meta["dtype"]))
    model.load_state_dict(state)
    return model


def load_checkpoint(path: str | Path) -> MassModel:
    """Rebuild the model recorded in the checkpoint and load its weights."""
    _, meta = _read_archive(path)
    config = dict(meta["build_config"])
    model = MassModel(**config)
    return load_weights(model, path)
