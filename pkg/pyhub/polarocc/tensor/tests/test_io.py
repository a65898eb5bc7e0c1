import struct

import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import DataError
from pyhub.polarocc.tensor import (
    ARRAY_MAGIC,
    array_from_json,
    array_to_json,
    dumps_array,
    loads_array,
    read_array,
    read_array_records,
    write_array,
)


def test_header_layout():
    data = dumps_array(np.arange(6, dtype=float).reshape(2, 3))
    assert data[:7] == ARRAY_MAGIC
    assert struct.unpack_from("<III", data, 7) == (2, 2, 3)
    assert struct.unpack_from("<d", data, 19)[0] == 0.0
    assert len(data) == 7 + 4 * 3 + 6 * 8


def test_file_round_trip(tmp_path):
    array = np.random.default_rng(0).normal(size=(2, 3, 2, 4))
    path = tmp_path / "a.arr"
    write_array(path, array)
    np.testing.assert_array_equal(read_array(path), array)


def test_consecutive_records(tmp_path):
    path = tmp_path / "many.arr"
    path.write_bytes(dumps_array(np.ones(3)) + dumps_array(np.zeros((2, 2))))
    records = read_array_records(path)
    assert [r.shape for r in records] == [(3,), (2, 2)]
    _, offset = loads_array(path.read_bytes())
    assert offset == 7 + 4 + 4 + 3 * 8


@pytest.mark.parametrize(
    "payload", [b"NOTARR1" + b"\x00" * 8, ARRAY_MAGIC + b"\x01", ARRAY_MAGIC + struct.pack("<II", 1, 4)]
)
def test_malformed_records(payload):
    with pytest.raises(DataError):
        loads_array(payload)


def test_trailing_bytes_rejected(tmp_path):
    path = tmp_path / "x.arr"
    path.write_bytes(dumps_array(np.ones(2)) + b"\x00")
    with pytest.raises(DataError):
        read_array(path)


def test_json_export():
    array = np.array([[1.0, 2.0], [3.0, 4.0]])
    obj = array_to_json(array)
    assert obj == {"shape": [2, 2], "data": [1.0, 2.0, 3.0, 4.0]}
    np.testing.assert_array_equal(array_from_json(obj), array)
    with pytest.raises(DataError):
        array_from_json({"shape": [3], "data": [1.0]})
