# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Snapshot container: a field on the torus together with its persistence.

Snapshots are read and written through a securesystemslib storage backend;
writes go through a temporary file so a partially written snapshot never
replaces a complete one.
"""
import logging
import tempfile
from typing import Optional

from securesystemslib.storage import FilesystemBackend, StorageBackendInterface
from securesystemslib.util import persist_temp_file

from mvgf.api.serialization import SnapshotDeserializer, SnapshotSerializer
from mvgf.exceptions import SnapshotError
from mvgf.grid import DensityField, RealField, TorusGrid

logger = logging.getLogger(__name__)


class Snapshot:
    """A field saved at one instant of a run.

    Attributes:
        field: The field, scalar (a density) or vector valued.
    """

    def __init__(self, field: RealField):
        self.field = field

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Snapshot):
            return False
        return (
            self.field.grid == other.field.grid
            and self.field.values.shape == other.field.values.shape
            and bool((self.field.values == other.field.values).all())
        )

    @property
    def grid(self) -> TorusGrid:
        return self.field.grid

    def density(self) -> DensityField:
        """The snapshot as a density.

        Raises:
            SnapshotError: the snapshot is vector valued.
            PositivityError: the values are negative.
        """
        if not self.field.is_scalar:
            raise SnapshotError(
                "snapshot has " + str(self.field.channels)
                + " channels, a density has 1"
            )
        return DensityField(self.field.grid, self.field.values)

    @classmethod
    def from_file(
        cls,
        filename: str,
        deserializer: Optional[SnapshotDeserializer] = None,
        storage_backend: Optional[StorageBackendInterface] = None,
    ) -> "Snapshot":
        """Loads a snapshot from file storage.

        Arguments:
            filename: The path to read the file from.
            deserializer: A SnapshotDeserializer instance. Per default a
                BinaryDeserializer is used.
            storage_backend: An object that implements
                securesystemslib.storage.StorageBackendInterface. Per default
                a (local) FilesystemBackend is used.

        Raises:
            securesystemslib.exceptions.StorageError: The file cannot be read.
            mvgf.api.serialization.DeserializationError:
                The file cannot be deserialized.
        """
        if storage_backend is None:
            storage_backend = FilesystemBackend()

        with storage_backend.get(filename) as file_obj:
            return cls.from_bytes(file_obj.read(), deserializer)

    @staticmethod
    def from_bytes(
        data: bytes, deserializer: Optional[SnapshotDeserializer] = None
    ) -> "Snapshot":
        """Loads a snapshot from raw MVGF bytes (or the deserializer's
        format)."""
        if deserializer is None:
            # pylint: disable=import-outside-toplevel
            from mvgf.api.serialization.binary import BinaryDeserializer

            deserializer = BinaryDeserializer()

        return deserializer.deserialize(data)

    def to_bytes(self, serializer: Optional[SnapshotSerializer] = None) -> bytes:
        """Return the serialized snapshot.

        Raises:
            mvgf.api.serialization.SerializationError:
                The snapshot cannot be serialized.
        """
        if serializer is None:
            # pylint: disable=import-outside-toplevel
            from mvgf.api.serialization.binary import BinarySerializer

            serializer = BinarySerializer()

        return serializer.serialize(self)

    def to_file(
        self,
        filename: str,
        serializer: Optional[SnapshotSerializer] = None,
        storage_backend: Optional[StorageBackendInterface] = None,
    ) -> None:
        """Writes the snapshot to file storage.

        Raises:
            mvgf.api.serialization.SerializationError:
                The snapshot cannot be serialized.
            securesystemslib.exceptions.StorageError:
                The file cannot be written.
        """
        bytes_data = self.to_bytes(serializer)

        with tempfile.TemporaryFile() as temp_file:
            temp_file.write(bytes_data)
            persist_temp_file(temp_file, filename, storage_backend)
        logger.debug("Wrote %d bytes to %s", len(bytes_data), filename)
