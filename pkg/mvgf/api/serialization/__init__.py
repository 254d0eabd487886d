# Copyright the mvgf contributors
# SPDX-License-Identifier: MIT OR Apache-2.0

"""Field snapshot de/serialization.

This sub-package provides abstract base classes and the concrete MVGF binary
implementation to serialize and deserialize field snapshots.

Custom de/serialization implementations should inherit from the abstract
base classes defined in this __init__.py module.
"""
import abc
from typing import TYPE_CHECKING

from mvgf.exceptions import Error

if TYPE_CHECKING:
    # pylint: disable=cyclic-import
    from mvgf.api.snapshot import Snapshot


class SerializationError(Error):
    """Error during serialization."""


class DeserializationError(Error):
    """Error during deserialization."""


class SnapshotDeserializer(metaclass=abc.ABCMeta):
    """Abstract base class for deserialization of Snapshot objects."""

    @abc.abstractmethod
    def deserialize(self, raw_data: bytes) -> "Snapshot":
        """Deserialize passed bytes to Snapshot object."""
        raise NotImplementedError


class SnapshotSerializer(metaclass=abc.ABCMeta):
    """Abstract base class for serialization of Snapshot objects."""

    @abc.abstractmethod
    def serialize(self, snapshot: "Snapshot") -> bytes:
        """Serialize passed Snapshot object to bytes."""
        raise NotImplementedError
