"""Binary model checkpoints.

Layout (all integers little-endian uint32)::

    b"KWSM" | version | descriptor_len | descriptor (UTF-8 JSON)
    | float32 LE blobs, one per tensor, in descriptor order
    | label_count | (uint32 byte length, UTF-8 name) * label_count

The JSON descriptor holds the model spec, the expanded layer list, and the
name and shape of every stored tensor (parameters and batch-norm running
statistics).
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .model import Model, ModelSpec

MAGIC = b"KWSM"
VERSION = 1


def checkpoint_bytes(model: Model, extra: dict | None = None) -> bytes:
    state = model.state()
    descriptor = {
        "spec": model.spec.to_dict(),
        "layers": model.spec.layer_list(),
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in state.items()],
    }
    if extra:
        descriptor["extra"] = extra
    header = json.dumps(descriptor, sort_keys=True).encode()
    buf = io.BytesIO()
    buf.write(MAGIC + struct.pack("<II", VERSION, len(header)))
    buf.write(header)
    for v in state.values():
        buf.write(np.ascontiguousarray(v, dtype="<f4").tobytes())
    buf.write(struct.pack("<I", len(model.labels)))
    for name in model.labels:
        raw = name.encode()
        buf.write(struct.pack("<I", len(raw)) + raw)
    return buf.getvalue()


def save_checkpoint(model: Model, path, extra: dict | None = None) -> None:
    Path(path).write_bytes(checkpoint_bytes(model, extra))


def read_checkpoint(data: bytes) -> tuple[Model, dict]:
    try:
        if data[:4] != MAGIC:
            raise CheckpointError("bad magic; not a model checkpoint")
        version, hlen = struct.unpack_from("<II", data, 4)
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        pos = 12
        descriptor = json.loads(data[pos:pos + hlen].decode())
        pos += hlen
        state = {}
        for t in descriptor["tensors"]:
            count = int(np.prod(t["shape"], dtype=np.int64))
            end = pos + 4 * count
            if end > len(data):
                raise CheckpointError(f"truncated tensor {t['name']}")
            state[t["name"]] = np.frombuffer(data[pos:end], dtype="<f4").reshape(t["shape"])
            pos = end
        (n_labels,) = struct.unpack_from("<I", data, pos)
        pos += 4
        labels = []
        for _ in range(n_labels):
            (n,) = struct.unpack_from("<I", data, pos)
            labels.append(data[pos + 4:pos + 4 + n].decode())
            pos += 4 + n
    except (struct.error, ValueError, KeyError, UnicodeDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint: {exc}") from exc
    spec = ModelSpec.from_dict(descriptor["spec"])
    if spec.layer_list() != descriptor["layers"]:
        raise CheckpointError("layer list does not match the stored model spec")
    model = Model(spec, labels=labels)
    model.load_state(state)
    return model, descriptor.get("extra", {})


def load_checkpoint(path) -> Model:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"{path}: {exc}") from exc
    return read_checkpoint(data)[0]
