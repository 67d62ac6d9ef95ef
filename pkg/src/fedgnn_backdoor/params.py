"""Flat model-parameter vectors with a named layout, plus the vector algebra
used by aggregation and the similarity-based defenses.

A ParamVector is a single contiguous float64 array; the layout maps parameter
names to shapes so the training code can view slices as matrices without
copying. Two vectors are compatible when their layouts match exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import LayoutError

Layout = tuple[tuple[str, tuple[int, ...]], ...]


def layout_size(layout: Layout) -> int:
    return int(sum(int(np.prod(shape)) for _, shape in layout))


@dataclass(eq=False)
class ParamVector:
    """Named, flat float64 parameter vector."""

    layout: Layout
    data: np.ndarray

    def __post_init__(self):
        self.layout = tuple((str(n), tuple(int(d) for d in s)) for n, s in self.layout)
        self.data = np.ascontiguousarray(self.data, dtype=np.float64).ravel()
        if self.data.shape[0] != layout_size(self.layout):
            raise LayoutError(
                f"data has {self.data.shape[0]} entries, layout needs {layout_size(self.layout)}"
            )
        names = [n for n, _ in self.layout]
        if len(set(names)) != len(names):
            raise LayoutError("duplicate parameter names in layout")

    @classmethod
    def zeros(cls, layout: Layout) -> "ParamVector":
        return cls(layout, np.zeros(layout_size(layout)))

    def copy(self) -> "ParamVector":
        return ParamVector(self.layout, self.data.copy())

    def view(self, name: str) -> np.ndarray:
        """Writable ndarray view of one named parameter."""
        off = 0
        for n, shape in self.layout:
            size = int(np.prod(shape))
            if n == name:
                return self.data[off:off + size].reshape(shape)
            off += size
        raise LayoutError(f"no parameter named {name!r}")

    def _check(self, other: "ParamVector") -> None:
        if self.layout != other.layout:
            raise LayoutError("parameter layouts differ")

    # -- algebra ------------------------------------------------------------

    def add(self, other: "ParamVector") -> "ParamVector":
        self._check(other)
        return ParamVector(self.layout, self.data + other.data)

    def sub(self, other: "ParamVector") -> "ParamVector":
        self._check(other)
        return ParamVector(self.layout, self.data - other.data)

    def scale(self, c: float) -> "ParamVector":
        return ParamVector(self.layout, self.data * float(c))

    def dot(self, other: "ParamVector") -> float:
        self._check(other)
        return float(self.data @ other.data)

    def l2(self) -> float:
        return float(np.linalg.norm(self.data))

    def cosine(self, other: "ParamVector") -> float:
        """Cosine similarity; 0.0 when either vector has zero norm."""
        self._check(other)
        na, nb = np.linalg.norm(self.data), np.linalg.norm(other.data)
        if na == 0.0 or nb == 0.0:
            return 0.0
        return float(self.data @ other.data / (na * nb))

    # -- serialization --------------------------------------------------------

    def to_bytes(self) -> bytes:
        """One JSON manifest line, newline, then little-endian float64 payload."""
        manifest = json.dumps({"layout": [[n, list(s)] for n, s in self.layout]})
        return manifest.encode("utf-8") + b"\n" + self.data.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ParamVector":
        nl = blob.find(b"\n")
        if nl < 0:
            raise LayoutError("missing manifest line")
        try:
            manifest = json.loads(blob[:nl].decode("utf-8"))
            layout = tuple((n, tuple(s)) for n, s in manifest["layout"])
        except (ValueError, KeyError, TypeError) as e:
            raise LayoutError(f"bad manifest: {e}") from None
        payload = blob[nl + 1:]
        expected = layout_size(layout) * 8
        if len(payload) != expected:
            raise LayoutError(f"payload has {len(payload)} bytes, layout needs {expected}")
        data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
        return cls(layout, data)


def mean_params(vectors: list[ParamVector]) -> ParamVector:
    """Unweighted average of compatible parameter vectors.

    Computed as first + mean(deltas) so that averaging identical vectors
    returns them bit-exactly."""
    if not vectors:
        raise LayoutError("cannot average zero vectors")
    first = vectors[0]
    for v in vectors[1:]:
        first._check(v)
    deltas = np.stack([v.data - first.data for v in vectors])
    return ParamVector(first.layout, first.data + deltas.mean(axis=0))
