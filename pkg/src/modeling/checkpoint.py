"""Byte-deterministic parameter checkpoints.

A checkpoint is a ZIP archive readable by :func:`numpy.load`: one ``.npy``
member per named parameter plus a ``meta.json`` member holding the format
version and the model configuration. Members are stored uncompressed in
name order with a fixed timestamp, so identical parameters always produce
identical bytes.
"""

from __future__ import annotations

import io
import json
import logging
import zipfile
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from ..exceptions import CheckpointError
from ..models.domain.configs import ModelConfig
from ..models.domain.enums import BetaOneMode
from .params import ModelParams

_LOG = logging.getLogger(__name__)

FORMAT_VERSION = 1
META_MEMBER = "meta.json"
_EPOCH = (1980, 1, 1, 0, 0, 0)


def _member(name: str) -> zipfile.ZipInfo:
    info = zipfile.ZipInfo(name, date_time=_EPOCH)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    return info


def save_checkpoint(params: ModelParams, path: str | Path) -> Path:
    """Write every parameter of ``params`` to ``path``.

    Examples
    --------
    .. code-block:: python

        save_checkpoint(params, "out/checkpoint.npz")
        restored = load_checkpoint("out/checkpoint.npz")

    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "format_version": FORMAT_VERSION,
        "model_config": params.config.model_dump(mode="json"),
        "beta": params.attention.beta,
        "beta_one_mode": params.attention.beta_one_mode.value,
    }
    with zipfile.ZipFile(target, "w") as archive:
        archive.writestr(_member(META_MEMBER), json.dumps(meta, sort_keys=True, indent=2))
        for name, tensor in sorted(params.named_tensors().items()):
            buffer = io.BytesIO()
            np.lib.format.write_array(buffer, np.ascontiguousarray(tensor.data), allow_pickle=False)
            archive.writestr(_member(f"{name}.npy"), buffer.getvalue())
    _LOG.info("Saved checkpoint with %d tensors to %s", len(params.named_tensors()), target)
    return target


def load_checkpoint(path: str | Path) -> ModelParams:
    """Rebuild :class:`ModelParams` from a checkpoint.

    Raises
    ------
    CheckpointError
        If the file is missing, not a checkpoint, of another format version,
        or its tensors do not match the stored model configuration

    """
    source = Path(path)
    if not source.is_file():
        raise CheckpointError(f"checkpoint not found: {source}")
    try:
        with zipfile.ZipFile(source) as archive:
            meta = json.loads(archive.read(META_MEMBER))
            if meta.get("format_version") != FORMAT_VERSION:
                raise CheckpointError(
                    f"unsupported checkpoint format version {meta.get('format_version')!r} (expected {FORMAT_VERSION})"
                )
            params = ModelParams.init(ModelConfig.model_validate(meta["model_config"]))
            state = {}
            for name in params.named_tensors():
                with archive.open(f"{name}.npy") as member:
                    state[name] = np.lib.format.read_array(io.BytesIO(member.read()), allow_pickle=False)
    except (zipfile.BadZipFile, KeyError, json.JSONDecodeError, ValidationError, ValueError) as e:
        raise CheckpointError(f"unreadable checkpoint {source}: {e}") from e
    params.load_state(state)
    params.attention.beta = float(meta["beta"])
    params.attention.beta_one_mode = BetaOneMode(meta["beta_one_mode"])
    return params
