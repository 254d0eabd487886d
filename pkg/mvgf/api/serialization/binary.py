# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""MVGF binary snapshot format.

Layout, all integers unsigned 32-bit little-endian:

    b"MVGF" | format version | dim | M | channels | values

'values' are little-endian float64, channel-major, nodes in row-major order,
i.e. exactly the bytes of a C-contiguous (channels, M, ..., M) array.
"""
import struct

import numpy as np

# pylint: disable=cyclic-import
from mvgf import SNAPSHOT_FORMAT_VERSION
from mvgf.api.serialization import (
    DeserializationError,
    SerializationError,
    SnapshotDeserializer,
    SnapshotSerializer,
)
from mvgf.api.snapshot import Snapshot
from mvgf.grid import RealField, create_grid

MAGIC = b"MVGF"
_HEADER = struct.Struct("<4sIIII")
_VALUE_TYPE = np.dtype("<f8")


class BinaryDeserializer(SnapshotDeserializer):
    """Provides MVGF bytes to Snapshot deserialize method."""

    def deserialize(self, raw_data: bytes) -> Snapshot:
        """Deserialize MVGF bytes into a Snapshot object."""
        if len(raw_data) < _HEADER.size:
            raise DeserializationError(
                "snapshot is " + str(len(raw_data)) + " bytes, shorter than its header"
            )
        magic, version, dim, points, channels = _HEADER.unpack_from(raw_data)
        if magic != MAGIC:
            raise DeserializationError("bad magic bytes " + repr(magic))
        if version != SNAPSHOT_FORMAT_VERSION:
            raise DeserializationError(
                "unsupported snapshot format version " + str(version)
            )

        try:
            grid = create_grid(dim, points)
            count = channels * grid.size
            expected = _HEADER.size + count * _VALUE_TYPE.itemsize
            if len(raw_data) != expected:
                raise DeserializationError(
                    "snapshot is " + str(len(raw_data)) + " bytes, expected "
                    + str(expected)
                )
            values = np.frombuffer(
                raw_data, dtype=_VALUE_TYPE, count=count, offset=_HEADER.size
            )
            field = RealField(grid, values.reshape((channels,) + grid.shape))

        except DeserializationError:
            raise
        except Exception as e:  # pylint: disable=broad-except
            raise DeserializationError("invalid snapshot payload") from e

        return Snapshot(field)


class BinarySerializer(SnapshotSerializer):
    """Provides Snapshot to MVGF bytes serialize method."""

    def serialize(self, snapshot: Snapshot) -> bytes:
        """Serialize a Snapshot object into MVGF bytes."""
        try:
            field = snapshot.field
            header = _HEADER.pack(
                MAGIC,
                SNAPSHOT_FORMAT_VERSION,
                field.grid.dim,
                field.grid.points_per_axis,
                field.channels,
            )
            payload = np.ascontiguousarray(field.values, dtype=_VALUE_TYPE).tobytes()

        except Exception as e:  # pylint: disable=broad-except
            raise SerializationError("cannot serialize snapshot") from e

        return header + payload
