"""Binary model format and the size audit.

Layout, all little-endian, weights serialized in layer order with each
layer's weight tensor before its bias:

    magic ``D2FL`` (4 bytes)
    format version, u16
    metadata length, u32, then UTF-8 JSON metadata
    architecture length, u32, then UTF-8 JSON layer list
    raw float32 parameters
    CRC-32 of all preceding bytes, u32

The CRC is verified before anything else is interpreted, so any
single-byte corruption of the payload surfaces as a checksum failure.
The exact byte layout is a compatibility contract pinned by golden-file
tests.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from .architectures import ModelConfig, config_digest
from .net.network import Conv1d, Dense, NetworkSpec, ParameterSet

MAGIC = b"D2FL"
FORMAT_VERSION = 1

_HEAD = struct.Struct("<4sH")
_U32 = struct.Struct("<I")
_MIN_FILE = _HEAD.size + 2 * _U32.size + _U32.size


class ModelFormatError(Exception):
    """Base for every model-file problem."""


class TruncatedFileError(ModelFormatError):
    pass


class ChecksumError(ModelFormatError):
    pass


class BadMagicError(ModelFormatError):
    pass


class VersionMismatchError(ModelFormatError):
    pass


def expected_param_shapes(spec: NetworkSpec) -> Dict[int, Dict[str, tuple]]:
    shapes: Dict[int, Dict[str, tuple]] = {}
    for index, layer in spec.parametric_layers():
        if isinstance(layer, Conv1d):
            shapes[index] = {
                "weight": (layer.out_channels, layer.in_channels, layer.kernel_size),
                "bias": (layer.out_channels,),
            }
        elif isinstance(layer, Dense):
            shapes[index] = {
                "weight": (layer.out_features, layer.in_features),
                "bias": (layer.out_features,),
            }
    return shapes


@dataclass
class ModelArtifact:
    """A deployable model: architecture, trained weights, and metadata.

    Metadata carries the config, its digest, the training seed, the epoch
    count, and an optional creation timestamp. The timestamp is None on
    the deterministic training path so identical runs serialize to
    byte-identical files.
    """

    spec: NetworkSpec
    params: ParameterSet
    metadata: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        expected = expected_param_shapes(self.spec)
        actual = {
            i: {name: tuple(t.shape) for name, t in tensors.items()}
            for i, tensors in self.params.by_layer.items()
        }
        if expected != actual:
            raise ValueError(
                f"parameters are not congruent with the architecture: "
                f"expected {expected}, got {actual}"
            )
        meta_config = self.metadata.get("config")
        meta_digest = self.metadata.get("config_digest")
        if meta_config is not None and meta_digest is not None:
            recomputed = config_digest(ModelConfig.from_json_obj(meta_config))
            if recomputed != meta_digest:
                raise ValueError(
                    f"metadata digest {meta_digest} does not match its config ({recomputed})"
                )

    @property
    def config(self) -> Optional[ModelConfig]:
        raw = self.metadata.get("config")
        return ModelConfig.from_json_obj(raw) if raw is not None else None

    def __eq__(self, other) -> bool:
        if not isinstance(other, ModelArtifact):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.metadata == other.metadata
            and self.params.equal(other.params)
        )


def make_metadata(
    config: ModelConfig,
    seed: int,
    epochs: int = 0,
    created: Optional[str] = None,
) -> dict:
    return {
        "config": config.to_json_obj(),
        "config_digest": config_digest(config),
        "variant": config.variant,
        "seed": int(seed),
        "epochs": int(epochs),
        "created": created,
    }


def serialize_model(artifact: ModelArtifact) -> bytes:
    meta = json.dumps(artifact.metadata, sort_keys=True, separators=(",", ":")).encode("utf-8")
    arch = json.dumps(artifact.spec.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [
        _HEAD.pack(MAGIC, FORMAT_VERSION),
        _U32.pack(len(meta)),
        meta,
        _U32.pack(len(arch)),
        arch,
    ]
    for _, _, tensor in artifact.params.iter_tensors():
        parts.append(np.ascontiguousarray(tensor, dtype="<f4").tobytes())
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


def save_model(artifact: ModelArtifact, destination: Union[str, Path]) -> None:
    Path(destination).write_bytes(serialize_model(artifact))


def deserialize_model(blob: bytes) -> ModelArtifact:
    if len(blob) < _MIN_FILE:
        raise TruncatedFileError(
            f"file holds {len(blob)} bytes, shorter than the {_MIN_FILE}-byte minimum frame"
        )
    (stored_crc,) = _U32.unpack_from(blob, len(blob) - _U32.size)
    actual_crc = zlib.crc32(blob[: -_U32.size])
    if stored_crc != actual_crc:
        raise ChecksumError(
            f"CRC-32 mismatch: stored {stored_crc:#010x}, computed {actual_crc:#010x}"
        )
    magic, version = _HEAD.unpack_from(blob, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"format version {version}, this reader supports {FORMAT_VERSION}")

    offset = _HEAD.size
    payload_end = len(blob) - _U32.size

    def take_block(kind: str) -> bytes:
        nonlocal offset
        if offset + _U32.size > payload_end:
            raise TruncatedFileError(f"{kind} length field overruns the file")
        (n,) = _U32.unpack_from(blob, offset)
        start = offset + _U32.size
        if start + n > payload_end:
            raise TruncatedFileError(f"{kind} block of {n} bytes overruns the file")
        offset = start + n
        return blob[start : start + n]

    try:
        metadata = json.loads(take_block("metadata").decode("utf-8"))
        arch = json.loads(take_block("architecture").decode("utf-8"))
        spec = NetworkSpec.from_dict(arch)
    except (ValueError, KeyError, TypeError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed header JSON: {exc}") from exc

    shapes = expected_param_shapes(spec)
    expected_bytes = 4 * sum(
        int(np.prod(shape)) for tensors in shapes.values() for shape in tensors.values()
    )
    if payload_end - offset != expected_bytes:
        raise TruncatedFileError(
            f"parameter payload holds {payload_end - offset} bytes, architecture needs {expected_bytes}"
        )
    by_layer: Dict[int, Dict[str, np.ndarray]] = {}
    for index in sorted(shapes):
        tensors = {}
        for name in ("weight", "bias"):
            shape = shapes[index][name]
            n = 4 * int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f4", count=int(np.prod(shape)), offset=offset)
            tensors[name] = arr.reshape(shape).copy()
            offset += n
        by_layer[index] = tensors
    return ModelArtifact(spec=spec, params=ParameterSet(by_layer), metadata=metadata)


def load_model(source: Union[str, Path]) -> ModelArtifact:
    return deserialize_model(Path(source).read_bytes())


def audit_size(artifact: ModelArtifact) -> int:
    """Exact byte length the artifact serializes to."""
    return len(serialize_model(artifact))


def size_breakdown(artifact: ModelArtifact) -> dict:
    total = audit_size(artifact)
    param_bytes = 4 * artifact.params.total_count
    return {
        "total_bytes": total,
        "parameter_count": artifact.params.total_count,
        "parameter_bytes": param_bytes,
        "envelope_bytes": total - param_bytes,
    }
