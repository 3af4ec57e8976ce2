"""Binary model files.

Layout (all little-endian)::

    magic        8 bytes  b"CILIAHD\\x00"
    version      u16
    header_len   u32
    header       JSON, UTF-8 (config, shapes, label values, flip totals)
    centers      float64[n, m]
    per bank     packed sign bits of levels[m, D] (1 = +1), int32 flip_counts[m-1],
                 int32 flip positions (concatenated, sum(flip_counts) entries)
    record       packed level_hvs[m, D], packed id_hvs[n, D]   (record variant only)
    prototypes   float64[K, 2D], float64[K] norms, float64[K, 2D] normalized
    crc32        u32 over every preceding byte
"""

import json
import struct
import zlib
from pathlib import Path

import numpy as np

from ciliagraph.baselines import RecordCodebook
from ciliagraph.encoder import LevelBank
from ciliagraph.errors import ChecksumError, IntegrityError, TruncatedModelError, VersionMismatchError
from ciliagraph.quantizer import AttributeCenters

MAGIC = b"CILIAHD\x00"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<8sHI")


def _packed_len(bits: int) -> int:
    return (bits + 7) // 8


def _pack_signs(hvs: np.ndarray) -> bytes:
    return np.packbits((hvs > 0).ravel(), bitorder="little").tobytes()


def _unpack_signs(buf: bytes, shape) -> np.ndarray:
    count = int(np.prod(shape))
    bits = np.unpackbits(np.frombuffer(buf, dtype=np.uint8), count=count, bitorder="little")
    return (2 * bits.astype(np.int8) - 1).reshape(shape)


def payload_size(n: int, m: int, dim: int, k: int, flip_totals, record: bool) -> int:
    """Bytes between the header and the checksum."""
    size = 8 * n * m
    for total in flip_totals:
        size += _packed_len(m * dim) + 4 * (m - 1) + 4 * total
    if record:
        size += _packed_len(m * dim) + _packed_len(n * dim)
    size += 8 * k * 2 * dim + 8 * k + 8 * k * 2 * dim
    return size


def model_file_size(n: int, m: int, dim: int, k: int, flip_totals, record: bool, header_len: int) -> int:
    return _PREFIX.size + header_len + payload_size(n, m, dim, k, flip_totals, record) + 4


def _header(model) -> dict:
    proto_dim = int(model.prototypes.shape[1])
    return {
        "format_version": FORMAT_VERSION,
        "config": model.config.to_dict(),
        "attr_count": model.attr_count,
        "levels": int(model.centers[0].m) if model.centers else model.config.levels,
        "dim": proto_dim // 2,
        "class_count": int(model.class_count),
        "label_values": [int(x) for x in model.label_values],
        "flip_totals": [int(b.flip_counts.sum()) for b in model.banks],
        "record": model.record_codebook is not None,
    }


def dumps_model(model) -> bytes:
    header = json.dumps(_header(model), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, len(header)), header]
    parts.append(np.stack([c.centers for c in model.centers]).astype("<f8").tobytes())
    for bank in model.banks:
        parts.append(_pack_signs(bank.levels))
        parts.append(bank.flip_counts.astype("<i4").tobytes())
        flat = np.concatenate([np.asarray(p, dtype=np.int64) for p in bank.flip_positions] or [np.zeros(0)])
        parts.append(flat.astype("<i4").tobytes())
    if model.record_codebook is not None:
        parts.append(_pack_signs(model.record_codebook.level_hvs))
        parts.append(_pack_signs(model.record_codebook.id_hvs))
    parts.append(model.prototypes.astype("<f8").tobytes())
    parts.append(model.prototype_norms.astype("<f8").tobytes())
    parts.append(model.normalized_prototypes.astype("<f8").tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


def save_model(model, path) -> Path:
    path = Path(path)
    path.write_bytes(dumps_model(model))
    return path


class _Reader:
    def __init__(self, buf: bytes, offset: int):
        self.buf = buf
        self.pos = offset

    def take(self, nbytes: int) -> bytes:
        chunk = self.buf[self.pos : self.pos + nbytes]
        if len(chunk) != nbytes:
            raise TruncatedModelError("model file ends before its payload is complete")
        self.pos += nbytes
        return chunk

    def array(self, dtype: str, shape) -> np.ndarray:
        count = int(np.prod(shape))
        raw = self.take(np.dtype(dtype).itemsize * count)
        return np.frombuffer(raw, dtype=dtype).reshape(shape).astype(dtype[1:] if dtype[0] == "<" else dtype)


def loads_model(buf: bytes):
    from ciliagraph.classifier import ModelConfig, TrainedModel

    if len(buf) < _PREFIX.size:
        raise TruncatedModelError("model file is shorter than its fixed prefix")
    magic, version, header_len = _PREFIX.unpack_from(buf, 0)
    if magic != MAGIC:
        raise IntegrityError("not a model file (bad magic)")
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"model format version {version}, this build reads {FORMAT_VERSION}")
    if len(buf) < _PREFIX.size + header_len:
        raise TruncatedModelError("model file ends inside its header")
    try:
        header = json.loads(buf[_PREFIX.size : _PREFIX.size + header_len].decode("utf-8"))
        n, m, dim, k = header["attr_count"], header["levels"], header["dim"], header["class_count"]
        flip_totals = header["flip_totals"]
        record = bool(header["record"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ChecksumError(f"model header is corrupt: {exc}") from None
    expected = model_file_size(n, m, dim, k, flip_totals, record, header_len)
    if len(buf) < expected:
        raise TruncatedModelError(f"model file has {len(buf)} bytes, layout needs {expected}")
    if len(buf) > expected:
        raise IntegrityError(f"model file has {len(buf) - expected} trailing bytes")
    (stored_crc,) = struct.unpack_from("<I", buf, len(buf) - 4)
    if zlib.crc32(buf[:-4]) != stored_crc:
        raise ChecksumError("model checksum mismatch")

    r = _Reader(buf, _PREFIX.size + header_len)
    center_rows = r.array("<f8", (n, m))
    centers = [AttributeCenters(center_rows[i].copy(), attr_index=i) for i in range(n)]
    banks = []
    for i, total in enumerate(flip_totals):
        levels = _unpack_signs(r.take(_packed_len(m * dim)), (m, dim))
        counts = r.array("<i4", (m - 1,)).astype(np.int64)
        flat = r.array("<i4", (total,)).astype(np.int64)
        bounds = np.concatenate([[0], np.cumsum(counts)])
        positions = tuple(flat[bounds[j] : bounds[j + 1]] for j in range(m - 1))
        banks.append(LevelBank(levels, centers[i], counts, positions))
    codebook = None
    if record:
        lv = _unpack_signs(r.take(_packed_len(m * dim)), (m, dim))
        ids = _unpack_signs(r.take(_packed_len(n * dim)), (n, dim))
        codebook = RecordCodebook(lv, ids)
    protos = r.array("<f8", (k, 2 * dim))
    norms = r.array("<f8", (k,))
    normalized = r.array("<f8", (k, 2 * dim))
    return TrainedModel(
        ModelConfig.from_dict(header["config"]),
        centers,
        banks,
        protos,
        norms,
        normalized,
        k,
        tuple(header["label_values"]),
        codebook,
    )


def load_model(path):
    return loads_model(Path(path).read_bytes())
