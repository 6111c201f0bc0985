"""Second-order forward jets with reverse-mode parameter gradients.

Every quantity flowing through a network is a :class:`Jet`: a float64 value
(scalar or batched array) carrying optional first and second partial
derivatives with respect to up to two input coordinates.  Jet arithmetic
propagates those payloads exactly (chain/product rules through second
order), while each operation is also recorded on an implicit tape so that a
single :func:`backward` sweep accumulates gradients of a scalar loss with
respect to every leaf it touched.

Input derivatives are forward-mode (cheap: at most two coordinates in any
problem handled here); parameter gradients are reverse-mode (cheap: one
sweep regardless of parameter count).  Mixed second partials are not
carried -- ``d2`` holds the diagonal only, which is closed under
composition and is all any supported differential operator needs.

All arithmetic is float64.  Evaluation is deterministic: the tape is walked
in a fixed topological order and gradients accumulate in that order, so
identical expressions on identical inputs produce bitwise-identical values
and gradients.
"""

from __future__ import annotations

import numpy as np
from scipy.special import expit

__all__ = [
    "Jet",
    "as_jet",
    "lift_input",
    "lift_points",
    "backward",
    "first_derivative",
    "second_derivative",
    "second_order_coords",
    "column",
    "matmul",
    "reshape",
    "jet_sum",
    "jet_mean",
    "square",
    "sin",
    "cos",
    "exp",
    "tanh",
    "logistic",
    "silu",
    "reciprocal",
]


def _f64(x):
    return np.asarray(x, dtype=np.float64)


def _unbroadcast(g, shape):
    """Sum ``g`` down to ``shape`` (the adjoint of numpy broadcasting)."""
    g = np.asarray(g)
    if g.shape == tuple(shape):
        return g
    extra = g.ndim - len(shape)
    if extra > 0:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


class Jet:
    """A batched scalar with derivative payloads, linked into the tape.

    Attributes
    ----------
    val : ndarray or float
        The value at each point.
    d1, d2 : tuple of (ndarray | float | None) or None
        Per-coordinate first/second partials with respect to the lifted
        inputs.  ``None`` (for a whole tuple or a single entry) means
        structurally zero and is skipped by all arithmetic.
    """

    __slots__ = ("val", "d1", "d2", "_parents", "_vjp", "gval", "gd1", "gd2")

    def __init__(self, val, d1=None, d2=None, parents=(), vjp=None):
        self.val = val
        self.d1 = d1
        self.d2 = d2
        self._parents = parents
        self._vjp = vjp
        self.gval = None
        self.gd1 = None
        self.gd2 = None

    @staticmethod
    def constant(value):
        """A jet with zero derivative payloads (and no tape history)."""
        return Jet(_f64(value))

    # Parameter leaves are constants whose accumulated gradient is read
    # back after ``backward``; the distinction is in how callers use them.
    leaf = constant

    @property
    def shape(self):
        return np.shape(self.val)

    def partial(self, coord):
        """Raw first partial with respect to input ``coord`` (zeros if unset)."""
        comp = None if self.d1 is None else self.d1[coord]
        if comp is None:
            return np.zeros(np.shape(self.val))
        return np.broadcast_to(_f64(comp), np.shape(self.val))

    def partial2(self, coord):
        """Raw second partial with respect to input ``coord`` (zeros if unset)."""
        comp = None if self.d2 is None else self.d2[coord]
        if comp is None:
            return np.zeros(np.shape(self.val))
        return np.broadcast_to(_f64(comp), np.shape(self.val))

    # -- operator overloads -------------------------------------------------

    def __add__(self, other):
        return _add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return _add(self, _neg(other))

    def __rsub__(self, other):
        return _add(_neg(self), other)

    def __mul__(self, other):
        return _mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return _neg(self)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return _mul(self, reciprocal(other))
        other = _f64(other)
        if np.any(other == 0.0):
            raise ZeroDivisionError("jet division by zero")
        return _mul(self, 1.0 / other)

    def __rtruediv__(self, other):
        return _mul(reciprocal(self), other)

    def __pow__(self, p):
        return _pow(self, p)

    def __repr__(self):
        return f"Jet(val={self.val!r}, d1={self.d1!r}, d2={self.d2!r})"


def as_jet(x):
    """Coerce a raw value to a constant jet (jets pass through)."""
    return x if isinstance(x, Jet) else Jet.constant(x)


_ACTIVE_D2 = None  # None: second partials propagate for every coordinate


def _d2_active(coord):
    return _ACTIVE_D2 is None or coord in _ACTIVE_D2


class second_order_coords:
    """Limit second-partial propagation to the given coordinates.

    Residual operators declare which coordinates they differentiate twice;
    suppressing the rest skips real work (a first-order residual never
    pays for curvature payloads).  Purely a construction-time filter:
    expressions built inside the context simply never carry the payload.
    """

    def __init__(self, coords):
        self.coords = None if coords is None else frozenset(coords)
        self._saved = None

    def __enter__(self):
        global _ACTIVE_D2
        self._saved = _ACTIVE_D2
        _ACTIVE_D2 = self.coords
        return self

    def __exit__(self, *exc):
        global _ACTIVE_D2
        _ACTIVE_D2 = self._saved
        return False


class _View:
    """Uniform (val, d1, d2, jet) access for Jet and raw-constant operands."""

    __slots__ = ("val", "d1", "d2", "jet")

    def __init__(self, x):
        if isinstance(x, Jet):
            self.val, self.d1, self.d2, self.jet = x.val, x.d1, x.d2, x
        else:
            self.val, self.d1, self.d2, self.jet = _f64(x), None, None, None


def _ncoords(*views):
    n = 0
    for v in views:
        for t in (v.d1, v.d2):
            if t is not None:
                if n and len(t) != n:
                    raise ValueError("mixed input dimensions in one expression")
                n = max(n, len(t))
    return n


def _entries(t, n):
    return (None,) * n if t is None else t


def _tuple_or_none(entries):
    entries = tuple(entries)
    return None if all(e is None for e in entries) else entries


def _acc_val(jet, g):
    g = _unbroadcast(g, np.shape(jet.val))
    jet.gval = g if jet.gval is None else jet.gval + g


def _acc_d1(jet, c, g):
    g = _unbroadcast(g, np.shape(jet.d1[c]))
    if jet.gd1 is None:
        jet.gd1 = [None] * len(jet.d1)
    jet.gd1[c] = g if jet.gd1[c] is None else jet.gd1[c] + g


def _acc_d2(jet, c, g):
    g = _unbroadcast(g, np.shape(jet.d2[c]))
    if jet.gd2 is None:
        jet.gd2 = [None] * len(jet.d2)
    jet.gd2[c] = g if jet.gd2[c] is None else jet.gd2[c] + g


def _grad_parts(out, n):
    gv = out.gval
    g1 = out.gd1 if out.gd1 is not None else [None] * n
    g2 = out.gd2 if out.gd2 is not None else [None] * n
    return gv, g1, g2


# -- lifting ------------------------------------------------------------------


def lift_input(values, index, n_inputs=1):
    """Seed ``values`` as input coordinate ``index`` of ``n_inputs``.

    The result carries d1 equal to the unit vector at ``index`` and zero
    second derivatives, i.e. the derivative of a coordinate with respect
    to itself is one.
    """
    if not 0 <= index < n_inputs:
        raise IndexError(f"coordinate index {index} out of range for {n_inputs} inputs")
    if n_inputs > 2:
        raise ValueError("at most two input coordinates are supported")
    d1 = tuple(1.0 if c == index else None for c in range(n_inputs))
    return Jet(_f64(values), d1=d1)


def lift_points(points):
    """Lift an (N, D) coordinate array into a single seeded jet.

    Column ``c`` of the value is coordinate ``c``; the d1 payload for
    coordinate ``c`` is the one-hot row selecting that column.
    """
    pts = _f64(points)
    if pts.ndim != 2:
        raise ValueError("expected an (N, D) point array")
    n, dim = pts.shape
    if not 1 <= dim <= 2:
        raise ValueError("input dimension must be 1 or 2")
    seeds = []
    for c in range(dim):
        row = np.zeros((1, dim))
        row[0, c] = 1.0
        seeds.append(row)
    return Jet(pts, d1=tuple(seeds))


# -- elementary operations ----------------------------------------------------


def _add(a, b):
    A, B = _View(a), _View(b)
    n = _ncoords(A, B)
    a1, b1 = _entries(A.d1, n), _entries(B.d1, n)
    a2, b2 = _entries(A.d2, n), _entries(B.d2, n)

    def comb(x, y):
        if x is None:
            return y
        if y is None:
            return x
        return x + y

    d1 = _tuple_or_none(comb(a1[c], b1[c]) for c in range(n))
    d2 = _tuple_or_none(comb(a2[c], b2[c]) for c in range(n))
    parents = tuple(v.jet for v in (A, B) if v.jet is not None)
    if not parents:
        return Jet(A.val + B.val, d1, d2)

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        for V, v1, v2 in ((A, a1, a2), (B, b1, b2)):
            if V.jet is None:
                continue
            if gv is not None:
                _acc_val(V.jet, gv)
            for c in range(n):
                if g1[c] is not None and v1[c] is not None:
                    _acc_d1(V.jet, c, g1[c])
                if g2[c] is not None and v2[c] is not None:
                    _acc_d2(V.jet, c, g2[c])

    return Jet(A.val + B.val, d1, d2, parents, vjp)


def _neg(a):
    if not isinstance(a, Jet):
        return -_f64(a)
    n = _ncoords(_View(a))
    a1, a2 = _entries(a.d1, n), _entries(a.d2, n)
    d1 = _tuple_or_none(None if x is None else -x for x in a1)
    d2 = _tuple_or_none(None if x is None else -x for x in a2)

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if gv is not None:
            _acc_val(a, -gv)
        for c in range(n):
            if g1[c] is not None and a1[c] is not None:
                _acc_d1(a, c, -g1[c])
            if g2[c] is not None and a2[c] is not None:
                _acc_d2(a, c, -g2[c])

    return Jet(-a.val, d1, d2, (a,), vjp)


def _mul(a, b):
    A, B = _View(a), _View(b)
    n = _ncoords(A, B)
    a1, b1 = _entries(A.d1, n), _entries(B.d1, n)
    a2, b2 = _entries(A.d2, n), _entries(B.d2, n)
    av, bv = A.val, B.val

    d1, d2 = [], []
    for c in range(n):
        t = None
        if a1[c] is not None:
            t = a1[c] * bv
        if b1[c] is not None:
            t = av * b1[c] if t is None else t + av * b1[c]
        d1.append(t)
        s = None
        if _d2_active(c):
            if a2[c] is not None:
                s = a2[c] * bv
            if a1[c] is not None and b1[c] is not None:
                u = 2.0 * (a1[c] * b1[c])
                s = u if s is None else s + u
            if b2[c] is not None:
                u = av * b2[c]
                s = u if s is None else s + u
        d2.append(s)
    d1, d2 = _tuple_or_none(d1), _tuple_or_none(d2)
    parents = tuple(v.jet for v in (A, B) if v.jet is not None)
    if not parents:
        return Jet(av * bv, d1, d2)

    def vjp(out):
        # each contribution is un-broadcast separately inside the
        # accumulators; terms of different broadcast shapes must never be
        # summed before reduction
        gv, g1, g2 = _grad_parts(out, n)
        for X, Y, x1, x2, y1, y2 in ((A, B, a1, a2, b1, b2), (B, A, b1, b2, a1, a2)):
            if X.jet is None:
                continue
            # o = x*y, o1 = x1*y + x*y1, o2 = x2*y + 2*x1*y1 + x*y2
            if gv is not None:
                _acc_val(X.jet, gv * Y.val)
            for c in range(n):
                if g1[c] is not None and y1[c] is not None:
                    _acc_val(X.jet, g1[c] * y1[c])
                if g2[c] is not None and y2[c] is not None:
                    _acc_val(X.jet, g2[c] * y2[c])
                if x1[c] is not None:
                    if g1[c] is not None:
                        _acc_d1(X.jet, c, g1[c] * Y.val)
                    if g2[c] is not None and y1[c] is not None:
                        _acc_d1(X.jet, c, 2.0 * (g2[c] * y1[c]))
                if x2[c] is not None and g2[c] is not None:
                    _acc_d2(X.jet, c, g2[c] * Y.val)

    return Jet(av * bv, d1, d2, parents, vjp)


def _unary(a, table, name):
    """Apply an elementwise function given a fused-derivative table.

    ``table(v, need1, need2, need3)`` returns the function value and first
    three derivatives (unneeded entries None), so shared intermediates are
    computed once per call.
    """
    A = _View(a)
    n = _ncoords(A)
    a1, a2 = _entries(A.d1, n), _entries(A.d2, n)
    has_d1 = any(x is not None for x in a1)
    has_d2 = any(x is not None for x in a2)
    need1 = A.jet is not None or has_d1 or has_d2
    need2 = has_d1 or has_d2
    need3 = any(a1[c] is not None and _d2_active(c) for c in range(n))
    fv, F1, F2, F3 = table(A.val, need1, need2, need3)

    d1, d2 = [], []
    for c in range(n):
        d1.append(None if a1[c] is None else F1 * a1[c])
        s = None
        if _d2_active(c):
            if a1[c] is not None:
                s = F2 * (a1[c] * a1[c])
            if a2[c] is not None:
                u = F1 * a2[c]
                s = u if s is None else s + u
        d2.append(s)
    d1, d2 = _tuple_or_none(d1), _tuple_or_none(d2)
    if A.jet is None:
        return Jet(fv, d1, d2)

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if gv is not None:
            _acc_val(A.jet, gv * F1)
        for c in range(n):
            if g1[c] is not None and a1[c] is not None:
                _acc_val(A.jet, g1[c] * (F2 * a1[c]))
            if g2[c] is not None:
                if a1[c] is not None:
                    _acc_val(A.jet, g2[c] * (F3 * (a1[c] * a1[c])))
                if a2[c] is not None:
                    _acc_val(A.jet, g2[c] * (F2 * a2[c]))
            if a1[c] is not None:
                if g1[c] is not None:
                    _acc_d1(A.jet, c, g1[c] * F1)
                if g2[c] is not None:
                    _acc_d1(A.jet, c, 2.0 * (g2[c] * (F2 * a1[c])))
            if a2[c] is not None and g2[c] is not None:
                _acc_d2(A.jet, c, g2[c] * F1)

    return Jet(fv, d1, d2, (A.jet,), vjp)


def _sin_table(v, n1, n2, n3):
    fv = np.sin(v)
    F1 = np.cos(v) if n1 else None
    return fv, F1, (-fv if n2 else None), (None if not n3 else -F1)


def sin(x):
    if not isinstance(x, Jet):
        return np.sin(_f64(x))
    return _unary(x, _sin_table, "sin")


def _cos_table(v, n1, n2, n3):
    fv = np.cos(v)
    F1 = -np.sin(v) if n1 else None
    return fv, F1, (-fv if n2 else None), (None if not n3 else -F1)


def cos(x):
    if not isinstance(x, Jet):
        return np.cos(_f64(x))
    return _unary(x, _cos_table, "cos")


def _exp_table(v, n1, n2, n3):
    fv = np.exp(v)
    return fv, fv, fv, fv


def exp(x):
    if not isinstance(x, Jet):
        return np.exp(_f64(x))
    return _unary(x, _exp_table, "exp")


def _tanh_table(v, n1, n2, n3):
    t = np.tanh(v)
    F1 = F2 = F3 = None
    if n1:
        F1 = 1.0 - t * t
        if n2:
            F2 = -2.0 * (t * F1)
            if n3:
                F3 = -2.0 * (F1 * (1.0 - 3.0 * (t * t)))
    return t, F1, F2, F3


def tanh(x):
    if not isinstance(x, Jet):
        return np.tanh(_f64(x))
    return _unary(x, _tanh_table, "tanh")


def _logistic_table(v, n1, n2, n3):
    s = expit(v)
    F1 = F2 = F3 = None
    if n1:
        F1 = s * (1.0 - s)
        if n2:
            F2 = F1 * (1.0 - 2.0 * s)
            if n3:
                F3 = F1 * (1.0 - 6.0 * s + 6.0 * (s * s))
    return s, F1, F2, F3


def logistic(x):
    """Standard sigmoid 1 / (1 + exp(-x))."""
    if not isinstance(x, Jet):
        return expit(_f64(x))
    return _unary(x, _logistic_table, "logistic")


def _silu_table(v, n1, n2, n3):
    s = expit(v)
    fv = v * s
    F1 = F2 = F3 = None
    if n1:
        sp = s * (1.0 - s)
        F1 = s + v * sp
        if n2:
            spp = sp * (1.0 - 2.0 * s)
            F2 = 2.0 * sp + v * spp
            if n3:
                F3 = 3.0 * spp + v * (sp * (1.0 - 6.0 * s + 6.0 * (s * s)))
    return fv, F1, F2, F3


def silu(x):
    """Sigmoid-weighted identity x * logistic(x)."""
    if not isinstance(x, Jet):
        v = _f64(x)
        return v * expit(v)
    return _unary(x, _silu_table, "silu")


def _reciprocal_table(v, n1, n2, n3):
    r = 1.0 / v
    F1 = F2 = F3 = None
    if n1:
        r2 = r * r
        F1 = -r2
        if n2:
            F2 = 2.0 * (r2 * r)
            if n3:
                F3 = -6.0 * (r2 * r2)
    return r, F1, F2, F3


def reciprocal(x):
    if not isinstance(x, Jet):
        v = _f64(x)
        if np.any(v == 0.0):
            raise ZeroDivisionError("reciprocal of zero")
        return 1.0 / v
    if np.any(_f64(x.val) == 0.0):
        raise ZeroDivisionError("jet division by zero")
    return _unary(x, _reciprocal_table, "reciprocal")


def _pow(x, p):
    p = float(p)
    if not isinstance(x, Jet):
        return _f64(x) ** p
    if not p.is_integer() and np.any(_f64(x.val) < 0.0):
        raise ValueError("fractional power of a negative base")
    if p < 0 and np.any(_f64(x.val) == 0.0):
        raise ZeroDivisionError("negative power of zero")

    def table(v, n1, n2, n3):
        fv = v**p
        F1 = p * v ** (p - 1.0) if n1 else None
        F2 = p * (p - 1.0) * v ** (p - 2.0) if n2 else None
        F3 = p * (p - 1.0) * (p - 2.0) * v ** (p - 3.0) if n3 else None
        return fv, F1, F2, F3

    return _unary(x, table, "pow")


def square(x):
    if not isinstance(x, Jet):
        x = _f64(x)
        return x * x
    return _mul(x, x)


# -- structural operations ----------------------------------------------------


def matmul(a, b):
    """2-D matrix product with full jet propagation on either operand."""
    if not (isinstance(a, Jet) or isinstance(b, Jet)):
        return _f64(a) @ _f64(b)
    A, B = _View(a), _View(b)
    n = _ncoords(A, B)
    a1, b1 = _entries(A.d1, n), _entries(B.d1, n)
    a2, b2 = _entries(A.d2, n), _entries(B.d2, n)
    av, bv = A.val, B.val
    if av.ndim != 2 or bv.ndim != 2:
        raise ValueError("matmul expects 2-D operands")

    d1, d2 = [], []
    for c in range(n):
        t = None
        if a1[c] is not None:
            t = a1[c] @ bv
        if b1[c] is not None:
            u = av @ b1[c]
            t = u if t is None else t + u
        d1.append(t)
        s = None
        if _d2_active(c):
            if a2[c] is not None:
                s = a2[c] @ bv
            if a1[c] is not None and b1[c] is not None:
                u = 2.0 * (a1[c] @ b1[c])
                s = u if s is None else s + u
            if b2[c] is not None:
                u = av @ b2[c]
                s = u if s is None else s + u
        d2.append(s)
    d1, d2 = _tuple_or_none(d1), _tuple_or_none(d2)
    parents = tuple(v.jet for v in (A, B) if v.jet is not None)
    if not parents:
        return Jet(av @ bv, d1, d2)

    def _rowcast(x, g):
        # align a broadcast-stored left operand with the adjoint's rows
        x = np.asarray(x)
        return np.broadcast_to(x, (np.shape(g)[0], x.shape[1]))

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if A.jet is not None:
            if gv is not None:
                _acc_val(A.jet, gv @ bv.T)
            for c in range(n):
                if g1[c] is not None and b1[c] is not None:
                    _acc_val(A.jet, g1[c] @ b1[c].T)
                if g2[c] is not None and b2[c] is not None:
                    _acc_val(A.jet, g2[c] @ b2[c].T)
                if a1[c] is not None:
                    if g1[c] is not None:
                        _acc_d1(A.jet, c, g1[c] @ bv.T)
                    if g2[c] is not None and b1[c] is not None:
                        _acc_d1(A.jet, c, 2.0 * (g2[c] @ b1[c].T))
                if a2[c] is not None and g2[c] is not None:
                    _acc_d2(A.jet, c, g2[c] @ bv.T)
        if B.jet is not None:
            if gv is not None:
                _acc_val(B.jet, av.T @ gv)
            for c in range(n):
                if g1[c] is not None and a1[c] is not None:
                    _acc_val(B.jet, _rowcast(a1[c], g1[c]).T @ g1[c])
                if g2[c] is not None and a2[c] is not None:
                    _acc_val(B.jet, _rowcast(a2[c], g2[c]).T @ g2[c])
                if b1[c] is not None:
                    if g1[c] is not None:
                        _acc_d1(B.jet, c, av.T @ g1[c])
                    if g2[c] is not None and a1[c] is not None:
                        _acc_d1(B.jet, c, 2.0 * (_rowcast(a1[c], g2[c]).T @ g2[c]))
                if b2[c] is not None and g2[c] is not None:
                    _acc_d2(B.jet, c, av.T @ g2[c])

    return Jet(av @ bv, d1, d2, parents, vjp)


def reshape(a, shape):
    if not isinstance(a, Jet):
        return _f64(a).reshape(shape)
    n = _ncoords(_View(a))
    a1, a2 = _entries(a.d1, n), _entries(a.d2, n)
    vshape = np.shape(a.val)

    def rs(comp):
        if comp is None:
            return None
        return np.broadcast_to(_f64(comp), vshape).reshape(shape)

    d1 = _tuple_or_none(rs(x) for x in a1)
    d2 = _tuple_or_none(rs(x) for x in a2)

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if gv is not None:
            _acc_val(a, np.asarray(gv).reshape(vshape))
        for c in range(n):
            if g1[c] is not None and a1[c] is not None:
                _acc_d1(a, c, np.asarray(g1[c]).reshape(vshape))
            if g2[c] is not None and a2[c] is not None:
                _acc_d2(a, c, np.asarray(g2[c]).reshape(vshape))

    return Jet(a.val.reshape(shape), d1, d2, (a,), vjp)


def column(a, idx):
    """Select index ``idx`` along the last axis of a jet."""
    if not isinstance(a, Jet):
        return _f64(a)[..., idx]
    n = _ncoords(_View(a))
    a1, a2 = _entries(a.d1, n), _entries(a.d2, n)

    def col(comp):
        if comp is None:
            return None
        comp = _f64(comp)
        # scalar payloads broadcast over every column unchanged
        return comp if comp.ndim == 0 else comp[..., idx]

    d1 = _tuple_or_none(col(x) for x in a1)
    d2 = _tuple_or_none(col(x) for x in a2)

    def scatter(jet_comp, g):
        if np.ndim(jet_comp) == 0:
            return g
        z = np.zeros(np.shape(jet_comp))
        z[..., idx] = _unbroadcast(g, z[..., idx].shape)
        return z

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if gv is not None:
            _acc_val(a, scatter(a.val, gv))
        for c in range(n):
            if g1[c] is not None and a1[c] is not None:
                _acc_d1(a, c, scatter(a1[c], g1[c]))
            if g2[c] is not None and a2[c] is not None:
                _acc_d2(a, c, scatter(a2[c], g2[c]))

    return Jet(a.val[..., idx], d1, d2, (a,), vjp)


def _reduce(a, mean):
    A = _View(a)
    n = _ncoords(A)
    a1, a2 = _entries(A.d1, n), _entries(A.d2, n)
    vshape = np.shape(A.val)
    size = float(np.prod(vshape)) if vshape else 1.0
    scale = 1.0 / size if mean else 1.0

    def red(comp):
        if comp is None:
            return None
        full = np.broadcast_to(_f64(comp), vshape)
        return full.mean() if mean else full.sum()

    val = A.val.mean() if mean else A.val.sum()
    d1 = _tuple_or_none(red(x) for x in a1)
    d2 = _tuple_or_none(red(x) for x in a2)
    if A.jet is None:
        return Jet(val, d1, d2)

    def spread(g):
        return np.broadcast_to(np.asarray(g) * scale, vshape)

    def vjp(out):
        gv, g1, g2 = _grad_parts(out, n)
        if gv is not None:
            _acc_val(A.jet, spread(gv))
        for c in range(n):
            if g1[c] is not None and a1[c] is not None:
                _acc_d1(A.jet, c, spread(g1[c]))
            if g2[c] is not None and a2[c] is not None:
                _acc_d2(A.jet, c, spread(g2[c]))

    return Jet(val, d1, d2, (A.jet,), vjp)


def jet_sum(a):
    if not isinstance(a, Jet):
        return _f64(a).sum()
    return _reduce(a, mean=False)


def jet_mean(a):
    if not isinstance(a, Jet):
        return _f64(a).mean()
    return _reduce(a, mean=True)


# -- derivative extraction ----------------------------------------------------


def first_derivative(u, coord):
    """The carried first partial of ``u`` as a plain value jet.

    Gradients of anything built from the result flow back into the d1
    payload of ``u``, so losses over PDE residuals differentiate correctly
    with respect to parameters.
    """
    if u.d1 is None or u.d1[coord] is None:
        raise ValueError(f"jet carries no first derivative for coordinate {coord}")
    comp = u.d1[coord]
    val = np.broadcast_to(_f64(comp), np.shape(u.val))

    def vjp(out):
        if out.gval is not None:
            _acc_d1(u, coord, out.gval)

    return Jet(val, parents=(u,), vjp=vjp)


def second_derivative(u, coord):
    """The carried diagonal second partial of ``u`` as a plain value jet."""
    if u.d2 is None or u.d2[coord] is None:
        raise ValueError(f"jet carries no second derivative for coordinate {coord}")
    comp = u.d2[coord]
    val = np.broadcast_to(_f64(comp), np.shape(u.val))

    def vjp(out):
        if out.gval is not None:
            _acc_d2(u, coord, out.gval)

    return Jet(val, parents=(u,), vjp=vjp)


# -- reverse sweep ------------------------------------------------------------


def _topo_order(root):
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def backward(loss, seed=1.0):
    """Accumulate d(loss)/d(leaf) into ``gval`` of every leaf jet.

    ``loss`` must be scalar-shaped.  Gradient buffers on the graph are
    fresh per expression (jets are rebuilt each step), so no zeroing pass
    is needed.
    """
    if np.shape(loss.val) != ():
        raise ValueError("backward expects a scalar jet")
    loss.gval = _f64(seed)
    for node in reversed(_topo_order(loss)):
        if node._vjp is not None:
            node._vjp(node)
