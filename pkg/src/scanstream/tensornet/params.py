"""Named parameter store with matching gradient buffers."""

from __future__ import annotations

import numpy as np


class ParamStore:
    """Ordered map name -> tensor, plus a gradient buffer per tensor.

    Insertion order is the canonical order used by serialization and
    the optimizer, so two stores built the same way behave identically.
    """

    def __init__(self):
        self._params: dict[str, np.ndarray] = {}
        self._grads: dict[str, np.ndarray] = {}

    def add(self, name: str, value: np.ndarray) -> np.ndarray:
        if name in self._params:
            raise ValueError(f"duplicate parameter name: {name}")
        arr = np.asarray(value)
        self._params[name] = arr
        self._grads[name] = np.zeros_like(arr)
        return arr

    def __getitem__(self, name: str) -> np.ndarray:
        return self._params[name]

    def __setitem__(self, name: str, value: np.ndarray) -> None:
        if name in self._params and self._params[name].shape != value.shape:
            raise ValueError(f"shape change for {name}")
        self._params[name] = value
        if name not in self._grads:
            self._grads[name] = np.zeros_like(value)

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    @property
    def grads(self) -> dict[str, np.ndarray]:
        return self._grads

    def zero_grads(self) -> None:
        for g in self._grads.values():
            g[...] = 0

    def param_count(self) -> int:
        return sum(int(p.size) for p in self._params.values())

    def copy(self) -> "ParamStore":
        out = ParamStore()
        for name, p in self._params.items():
            out.add(name, p.copy())
        return out

    def allclose(self, other: "ParamStore", **kw) -> bool:
        if self.names() != other.names():
            return False
        return all(np.allclose(self[n], other[n], **kw) for n in self.names())
