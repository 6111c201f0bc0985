"""Flat trainable-parameter vector with named, shaped segments.

Networks register their weight arrays as segments during construction;
after :meth:`ParamStore.freeze` all values live in one contiguous float64
vector that the optimizer updates in place.  Segment views alias that
vector, so refreshed leaf jets always see current values.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Jet

__all__ = ["ParamStore"]


class ParamStore:
    def __init__(self):
        self._pending = []
        self._segments = {}  # name -> (slice, shape)
        self.flat = None

    def add(self, name, values):
        """Register a named segment (only before freeze)."""
        if self.flat is not None:
            raise RuntimeError("parameter store is frozen")
        if name in self._segments or any(n == name for n, _ in self._pending):
            raise ValueError(f"duplicate parameter segment {name!r}")
        self._pending.append((name, np.asarray(values, dtype=np.float64)))
        return name

    def freeze(self):
        if self.flat is not None:
            raise RuntimeError("parameter store is already frozen")
        offset = 0
        chunks = []
        for name, arr in self._pending:
            self._segments[name] = (slice(offset, offset + arr.size), arr.shape)
            chunks.append(arr.ravel())
            offset += arr.size
        self.flat = np.concatenate(chunks) if chunks else np.zeros(0)
        self._pending = []
        return self

    @property
    def size(self):
        return 0 if self.flat is None else self.flat.size

    @property
    def names(self):
        return tuple(self._segments)

    def segment_slice(self, name):
        return self._segments[name][0]

    def view(self, name):
        """Writable array view of one segment (aliases the flat vector)."""
        sl, shape = self._segments[name]
        return self.flat[sl].reshape(shape)

    def views(self):
        return {name: self.view(name) for name in self._segments}

    def as_jets(self):
        """Fresh leaf jets over the current segment views (one training step)."""
        return {name: Jet.leaf(self.view(name)) for name in self._segments}

    def collect_grad(self, jets):
        """Assemble a flat gradient vector from backpropagated leaf jets.

        Leaves the loss never touched contribute zeros.  Raises if ``jets``
        names a segment this store does not own.
        """
        grad = np.zeros(self.size)
        for name, jet in jets.items():
            if name not in self._segments:
                raise KeyError(f"parameter segment {name!r} not in store")
            if jet.gval is not None:
                sl, shape = self._segments[name]
                grad[sl] = np.asarray(jet.gval).reshape(-1)
        return grad

    def get_flat(self):
        return self.flat.copy()

    def set_flat(self, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != self.flat.shape:
            raise ValueError("flat vector length mismatch")
        self.flat[:] = values
