"""Reverse-mode automatic differentiation on dense float64 arrays.

A Tape records operations in execution order; backward() replays the
records in exact reverse order, so gradients are bitwise reproducible
for a given graph and inputs. Operations executed while no tape is
active still compute forward values, which is how inference and
finite-difference probes run without recording overhead.

Scope is deliberately small: matrix products, last-axis concatenation,
a handful of pointwise functions, row gather/scatter for edge lists,
and scalar reductions. Everything is float64; no broadcasting beyond
the explicit bias add.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

_TAPES: list["Tape"] = []


class Value:
    """Array node in a computation graph.

    ``data`` is a float64 ndarray with a fixed shape; ``grad`` is
    lazily allocated with the same shape the first time a backward
    pass reaches the node.
    """

    __slots__ = ("data", "grad")

    def __init__(self, data) -> None:
        self.data = np.asarray(data, dtype=np.float64)
        self.grad: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def __repr__(self) -> str:
        return f"Value(shape={self.data.shape})"


class Tape:
    """Ordered operation record; use as a context manager to activate.

    Backward traverses the records in exact reverse recording order,
    accumulating parent gradients one rule at a time, which makes
    gradients deterministic down to the bit.
    """

    def __init__(self) -> None:
        self._records: list[tuple[Value, Callable[[np.ndarray], None]]] = []

    def __enter__(self) -> "Tape":
        _TAPES.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        popped = _TAPES.pop()
        if popped is not self:
            raise RuntimeError("tape stack corrupted")
        return False

    def __len__(self) -> int:
        return len(self._records)

    def backward(self, loss: Value) -> None:
        """Populate grads of every node that feeds the scalar ``loss``.

        Gradients of recorded intermediates are reset at the start of
        each call; leaf gradients (parameters, constants) accumulate
        across repeated calls.
        """
        if loss.data.shape != ():
            raise ValueError(f"loss must be a scalar, got shape {loss.data.shape}")
        for out, _ in self._records:
            out.grad = None
        loss.ensure_grad()
        loss.grad += 1.0
        for out, rule in reversed(self._records):
            if out.grad is not None:
                rule(out.grad)


def _active_tape() -> Tape | None:
    return _TAPES[-1] if _TAPES else None


def _record(out: Value, rule: Callable[[np.ndarray], None]) -> Value:
    tape = _active_tape()
    if tape is not None:
        tape._records.append((out, rule))
    return out


def zero_grad(params: Sequence[Value]) -> None:
    for p in params:
        p.grad = None


def all_finite(x) -> bool:
    arr = x.data if isinstance(x, Value) else np.asarray(x)
    return bool(np.isfinite(arr).all())


# ── ops ──────────────────────────────────────────────────────────────


def matmul(a: Value, b: Value) -> Value:
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    if a.data.shape[1] != b.data.shape[0]:
        raise ValueError(
            f"matmul shape mismatch: {a.data.shape} x {b.data.shape}"
        )
    out = Value(a.data @ b.data)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()
        a.grad += g @ b.data.T
        b.ensure_grad()
        b.grad += a.data.T @ g

    return _record(out, rule)


def concat(parts: Sequence[Value]) -> Value:
    """Concatenate along the last axis; all other axes must agree."""
    if not parts:
        raise ValueError("concat needs at least one operand")
    lead = parts[0].data.shape[:-1]
    for p in parts[1:]:
        if p.data.shape[:-1] != lead:
            raise ValueError(
                f"concat leading-dimension mismatch: {p.data.shape} vs {parts[0].data.shape}"
            )
    out = Value(np.concatenate([p.data for p in parts], axis=-1))
    widths = [p.data.shape[-1] for p in parts]
    bounds = np.concatenate([[0], np.cumsum(widths)])
    kept = list(parts)

    def rule(g: np.ndarray) -> None:
        for p, lo, hi in zip(kept, bounds[:-1], bounds[1:]):
            p.ensure_grad()
            p.grad += g[..., lo:hi]

    return _record(out, rule)


def _stable_sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sigmoid(x: Value) -> Value:
    s = _stable_sigmoid(x.data)
    out = Value(s)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g * (s * (1.0 - s))

    return _record(out, rule)


def tanh(x: Value) -> Value:
    t = np.tanh(x.data)
    out = Value(t)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g * (1.0 - t * t)

    return _record(out, rule)


def relu(x: Value) -> Value:
    # subgradient at 0 is 0
    out = Value(np.maximum(x.data, 0.0))
    mask = x.data > 0

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g * mask

    return _record(out, rule)


def _check_same_shape(a: Value, b: Value, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ValueError(f"{op} shape mismatch: {a.data.shape} vs {b.data.shape}")


def add(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "add")
    out = Value(a.data + b.data)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()
        a.grad += g
        b.ensure_grad()
        b.grad += g

    return _record(out, rule)


def sub(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "sub")
    out = Value(a.data - b.data)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()
        a.grad += g
        b.ensure_grad()
        b.grad -= g

    return _record(out, rule)


def hadamard(a: Value, b: Value) -> Value:
    _check_same_shape(a, b, "hadamard")
    out = Value(a.data * b.data)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()
        a.grad += g * b.data
        b.ensure_grad()
        b.grad += g * a.data

    return _record(out, rule)


def scale(x: Value, c: float) -> Value:
    c = float(c)
    out = Value(x.data * c)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g * c

    return _record(out, rule)


def add_bias(x: Value, b: Value) -> Value:
    """Add a width-f bias row to every row of an (n, f) matrix."""
    if x.data.ndim != 2 or b.data.ndim != 1 or x.data.shape[1] != b.data.shape[0]:
        raise ValueError(
            f"add_bias shape mismatch: {x.data.shape} with bias {b.data.shape}"
        )
    out = Value(x.data + b.data)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g
        b.ensure_grad()
        b.grad += g.sum(axis=0)

    return _record(out, rule)


def sum_all(x: Value) -> Value:
    out = Value(x.data.sum())

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()
        x.grad += g

    return _record(out, rule)


def _segment_sum(values: np.ndarray, idx: np.ndarray, n: int) -> np.ndarray:
    """Row-wise sum of ``values`` into ``n`` buckets given by ``idx``.

    Uses one flat bincount, which accumulates strictly in input (edge)
    order, so results are deterministic.
    """
    rows, width = values.shape
    if rows == 0:
        return np.zeros((n, width), dtype=np.float64)
    flat = (idx[:, None] * width + np.arange(width)).ravel()
    return np.bincount(flat, weights=values.ravel(), minlength=n * width).reshape(
        n, width
    )


def gather_nodes(m: Value, index) -> Value:
    """Row-gather: out[k] = m[index[k]]. Backward scatter-adds into m."""
    idx = np.asarray(index, dtype=np.intp)
    if m.data.ndim != 2:
        raise ValueError("gather_nodes expects a 2-D matrix")
    if idx.size and (idx.min() < 0 or idx.max() >= m.data.shape[0]):
        raise IndexError(
            f"gather index out of range for {m.data.shape[0]} rows"
        )
    out = Value(m.data[idx])

    def rule(g: np.ndarray) -> None:
        m.ensure_grad()
        m.grad += _segment_sum(g, idx, m.data.shape[0])

    return _record(out, rule)


def scatter_add(e: Value, dst, n: int) -> Value:
    """out[v] = sum of e rows whose dst is v, accumulated in edge order."""
    idx = np.asarray(dst, dtype=np.intp)
    if e.data.ndim != 2:
        raise ValueError("scatter_add expects a 2-D matrix")
    if idx.shape != (e.data.shape[0],):
        raise ValueError("dst index length must match the row count")
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"scatter index out of range for {n} rows")
    out = Value(_segment_sum(e.data, idx, n))

    def rule(g: np.ndarray) -> None:
        e.ensure_grad()
        e.grad += g[idx]

    return _record(out, rule)


# ── verification ─────────────────────────────────────────────────────


def finite_diff_check(
    f: Callable[[Sequence[Value]], Value],
    params: Sequence[Value],
    eps: float = 1e-5,
) -> float:
    """Compare reverse-mode gradients of ``f`` against central differences.

    ``f`` must be deterministic and return a scalar Value built from the
    given parameters. Probes run without a tape. The relative error for
    each element uses denominator max(|g|, |g_fd|, 1e-8); the maximum
    over all elements of all parameters is returned. Points at relu
    kinks are the caller's responsibility to avoid.
    """
    params = list(params)
    with Tape() as tape:
        loss = f(params)
    if loss.data.shape != ():
        raise ValueError("f must return a scalar")
    zero_grad(params)
    tape.backward(loss)
    analytic = [
        np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params
    ]
    worst = 0.0
    for p, g in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = g.reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + eps
            f_plus = float(f(params).data)
            flat[k] = saved - eps
            f_minus = float(f(params).data)
            flat[k] = saved
            fd = (f_plus - f_minus) / (2.0 * eps)
            denom = max(abs(gflat[k]), abs(fd), 1e-8)
            worst = max(worst, abs(gflat[k] - fd) / denom)
    return worst
