"""Named parameter store with seeded initialization and a binary container.

Container layout ("NMW1"): the 4-byte magic, then one record per tensor:
name length (u64 LE), UTF-8 name, rank (u64 LE), dims (u64 LE each), then
row-major float32 LE data. Records run to end of file.
"""

import struct

import numpy as np

MAGIC = b"NMW1"


def _tensor_rng(seed, name):
    # Name-keyed stream: adding or reordering parameters never shifts the
    # values drawn for existing ones.
    return np.random.default_rng(np.random.SeedSequence([seed, *name.encode("utf-8")]))


class WeightStore:
    """Mapping from parameter names to float64 arrays."""

    def __init__(self, rng_seed=0):
        self.rng_seed = rng_seed
        self._tensors = {}

    def __contains__(self, name):
        return name in self._tensors

    def __getitem__(self, name):
        try:
            return self._tensors[name]
        except KeyError:
            raise KeyError(f"missing parameter {name!r}") from None

    def __len__(self):
        return len(self._tensors)

    def names(self):
        return list(self._tensors)

    def manifest(self):
        """List of (name, shape) pairs in insertion order."""
        return [(name, tuple(t.shape)) for name, t in self._tensors.items()]

    def set(self, name, value):
        value = np.asarray(value, dtype=np.float64)
        if not np.all(np.isfinite(value)):
            raise ValueError(f"parameter {name!r} contains non-finite values")
        self._tensors[name] = value

    def add_uniform(self, name, shape, fan_in=None):
        """Add a tensor drawn uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).

        fan_in defaults to the product of all dims but the first.
        """
        if name in self._tensors:
            raise ValueError(f"duplicate parameter {name!r}")
        if fan_in is None:
            fan_in = int(np.prod(shape[1:])) if len(shape) > 1 else int(shape[0])
        bound = 1.0 / np.sqrt(fan_in)
        rng = _tensor_rng(self.rng_seed, name)
        self._tensors[name] = rng.uniform(-bound, bound, size=shape)
        return self._tensors[name]

    def add_constant(self, name, shape, value):
        if name in self._tensors:
            raise ValueError(f"duplicate parameter {name!r}")
        self._tensors[name] = np.full(shape, float(value))
        return self._tensors[name]

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            for name, tensor in self._tensors.items():
                encoded = name.encode("utf-8")
                fh.write(struct.pack("<Q", len(encoded)))
                fh.write(encoded)
                fh.write(struct.pack("<Q", tensor.ndim))
                fh.write(struct.pack(f"<{tensor.ndim}Q", *tensor.shape))
                fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())

    @classmethod
    def load(cls, path):
        store = cls()
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != MAGIC:
                raise ValueError(f"{path}: not a weight container (bad magic {magic!r})")
            while True:
                head = fh.read(8)
                if not head:
                    break
                name, shape = _read_header(fh, head, path)
                count = int(np.prod(shape)) if shape else 1
                raw = fh.read(4 * count)
                if len(raw) != 4 * count:
                    raise ValueError(f"{path}: truncated data for parameter {name!r}")
                data = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)
                store.set(name, data)
        return store


def _read_header(fh, head, path):
    (name_len,) = struct.unpack("<Q", head)
    if name_len > 1 << 16:
        raise ValueError(f"{path}: implausible name length {name_len}")
    raw_name = fh.read(name_len)
    if len(raw_name) != name_len:
        raise ValueError(f"{path}: truncated parameter name")
    name = raw_name.decode("utf-8")
    raw_rank = fh.read(8)
    if len(raw_rank) != 8:
        raise ValueError(f"{path}: truncated record for {name!r}")
    (rank,) = struct.unpack("<Q", raw_rank)
    if rank > 8:
        raise ValueError(f"{path}: implausible rank {rank} for {name!r}")
    raw_dims = fh.read(8 * rank)
    if len(raw_dims) != 8 * rank:
        raise ValueError(f"{path}: truncated dims for {name!r}")
    shape = struct.unpack(f"<{rank}Q", raw_dims)
    return name, shape


def read_manifest(path):
    """List (name, shape) records of a container without loading the data."""
    import os

    manifest = []
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a weight container")
        while True:
            head = fh.read(8)
            if not head:
                break
            name, shape = _read_header(fh, head, path)
            count = int(np.prod(shape)) if shape else 1
            end = fh.tell() + 4 * count
            if end > size:
                raise ValueError(f"{path}: truncated data for parameter {name!r}")
            fh.seek(end)
            manifest.append((name, tuple(int(d) for d in shape)))
    return manifest
