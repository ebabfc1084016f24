"""
Binary export format for sampled lattice paths.

A path file is a 32-byte little-endian header followed by the positions
X_0..X_n as a row-major int64 array of shape (n+1, d):

    magic(4) = b'RWPT' + version(4) + d(4) + flags(4) + n(8) + seed(8)

The format exists for debugging: paths can be dumped from a run and
inspected with numpy.fromfile or re-loaded with read_path_file.
"""

import struct
from enum import IntFlag
from pathlib import Path
from typing import NamedTuple, Union, TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from numpy.typing import NDArray

PATH_MAGIC = b'RWPT'
PATH_FORMAT_VERSION = 1
HEADER_SIZE = 32
_HEADER_STRUCT = struct.Struct('<4sIIIqq')


class PathFlags(IntFlag):
    """Header flag bits"""
    NONE = 0
    LAZY = 1          # increment law has mass at the origin
    HEAVY_TAILED = 2  # Pareto-type increments
    STREAMED = 4      # positions were produced chunk by chunk


class PathHeader(NamedTuple):
    """32-byte path file header"""
    magic: bytes
    version: int
    d: int
    flags: int
    n: int        # number of steps; the file holds n+1 positions
    seed: int     # replica seed (signed 64-bit view)

    @property
    def payload_size(self) -> int:
        """Size of the position payload in bytes"""
        return (self.n + 1) * self.d * 8

    def has_flag(self, flag: PathFlags) -> bool:
        return bool(self.flags & flag)


def pack_path_header(header: PathHeader) -> bytes:
    """Serialise a PathHeader to its 32-byte form."""
    return _HEADER_STRUCT.pack(header.magic, header.version, header.d,
                               header.flags, header.n, header.seed)


def parse_path_header(data: bytes) -> PathHeader:
    """
    Parse the 32-byte path header.

    Raises:
        ValueError: if the buffer is short or the magic/version is wrong
    """
    if len(data) < HEADER_SIZE:
        raise ValueError(f"Path header too short: {len(data)} < {HEADER_SIZE} bytes")

    header = PathHeader(*_HEADER_STRUCT.unpack(data[:HEADER_SIZE]))
    if header.magic != PATH_MAGIC:
        raise ValueError(f"Bad path file magic: {header.magic!r}")
    if header.version != PATH_FORMAT_VERSION:
        raise ValueError(f"Unsupported path format version: {header.version}")
    if header.d < 1 or header.n < 0:
        raise ValueError(f"Corrupt path header: d={header.d}, n={header.n}")
    return header


def _signed_seed(seed: int) -> int:
    # seeds are unsigned 64-bit; the header stores the two's complement view
    seed &= (1 << 64) - 1
    return seed - (1 << 64) if seed >= (1 << 63) else seed


def encode_positions(positions: 'NDArray', seed: int = 0,
                     flags: int = PathFlags.NONE) -> bytes:
    """
    Encode an (n+1, d) integer position array to the binary path format.
    """
    positions = np.ascontiguousarray(positions, dtype='<i8')
    if positions.ndim != 2 or positions.shape[0] < 1:
        raise ValueError(f"Positions must have shape (n+1, d), got {positions.shape}")

    header = PathHeader(PATH_MAGIC, PATH_FORMAT_VERSION, positions.shape[1],
                        int(flags), positions.shape[0] - 1, _signed_seed(seed))
    return pack_path_header(header) + positions.tobytes(order='C')


def decode_positions(data: bytes) -> tuple[PathHeader, 'NDArray']:
    """
    Decode a binary path buffer.

    Returns:
        (header, positions) with positions of shape (n+1, d), dtype int64
    """
    header = parse_path_header(data)
    end = HEADER_SIZE + header.payload_size
    if len(data) < end:
        raise ValueError(f"Path payload truncated: {len(data)} < {end} bytes")

    positions = np.frombuffer(data[HEADER_SIZE:end], dtype='<i8')
    return header, positions.reshape(header.n + 1, header.d).astype(np.int64)


def write_path_file(filename: Union[str, Path], positions: 'NDArray', seed: int = 0,
                    flags: int = PathFlags.NONE) -> int:
    """Write positions to a path file and return the number of bytes written."""
    blob = encode_positions(positions, seed, flags)
    with open(filename, 'wb') as f:
        f.write(blob)
    return len(blob)


def read_path_file(filename: Union[str, Path]) -> tuple[PathHeader, 'NDArray']:
    """Read a path file written by write_path_file."""
    with open(filename, 'rb') as f:
        return decode_positions(f.read())
