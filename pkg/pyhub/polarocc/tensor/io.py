"""PVOARR1 array container and small-array JSON export."""

import struct
from pathlib import Path
from typing import BinaryIO, Union

import numpy as np

from pyhub.polarocc.core.exceptions import DataError

from .ops import Array, as_array

ARRAY_MAGIC = b"PVOARR1"

_U32 = struct.Struct("<I")


def dumps_array(array: Array) -> bytes:
    array = as_array(array)
    header = ARRAY_MAGIC + _U32.pack(array.ndim) + b"".join(_U32.pack(extent) for extent in array.shape)
    return header + array.astype("<f8", copy=False).tobytes(order="C")


def loads_array(buffer: bytes, offset: int = 0) -> tuple[Array, int]:
    """Decode one record starting at ``offset``; returns (array, offset past the record)."""
    end = offset + len(ARRAY_MAGIC)
    if buffer[offset:end] != ARRAY_MAGIC:
        raise DataError(f"not a PVOARR1 record at byte {offset}")
    try:
        (rank,) = _U32.unpack_from(buffer, end)
        end += _U32.size
        shape = tuple(_U32.unpack_from(buffer, end + i * _U32.size)[0] for i in range(rank))
    except struct.error as e:
        raise DataError(f"truncated PVOARR1 header at byte {offset}") from e
    end += rank * _U32.size
    count = int(np.prod(shape)) if shape else 0
    payload_end = end + count * 8
    if rank < 1 or count < 1 or payload_end > len(buffer):
        raise DataError(f"invalid PVOARR1 record: rank={rank} shape={shape}")
    array = np.frombuffer(buffer, dtype="<f8", count=count, offset=end).astype(np.float64).reshape(shape)
    return array, payload_end


def write_array(path: Union[str, Path, BinaryIO], array: Array) -> None:
    data = dumps_array(array)
    if hasattr(path, "write"):
        path.write(data)
    else:
        Path(path).write_bytes(data)


def read_array(path: Union[str, Path]) -> Array:
    buffer = Path(path).read_bytes()
    array, end = loads_array(buffer)
    if end != len(buffer):
        raise DataError(f"{path}: {len(buffer) - end} trailing bytes after PVOARR1 record")
    return array


def read_array_records(path: Union[str, Path]) -> list[Array]:
    buffer = Path(path).read_bytes()
    records, offset = [], 0
    while offset < len(buffer):
        array, offset = loads_array(buffer, offset)
        records.append(array)
    return records


def array_to_json(array: Array) -> dict:
    array = as_array(array)
    return {"shape": list(array.shape), "data": array.reshape(-1).tolist()}


def array_from_json(obj: dict) -> Array:
    try:
        shape = tuple(int(extent) for extent in obj["shape"])
        data = np.asarray(obj["data"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as e:
        raise DataError(f"invalid array JSON: {e}") from e
    if data.size != int(np.prod(shape)):
        raise DataError(f"array JSON holds {data.size} values for shape {shape}")
    return as_array(data.reshape(shape))
