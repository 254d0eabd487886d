# This value is embedded in the provenance header of every output file.
# setup.py has it hard-coded separately.
# Currently, when the version is changed, it must be set in both locations.
__version__ = "0.1.0"

# Version of the MVGF binary snapshot layout written by mvgf.api.snapshot.
# Readers reject any other value.
SNAPSHOT_FORMAT_VERSION = 1
