"""Plain-text file formats for tensors, samples, decompositions and models.

Tensor::

    tensor v1
    shape 2 2 2
    <values, lexicographic, whitespace separated>

Samples::

    samples v1 dim <n>
    <one sample per line>

Decomposition::

    otd v1
    signature 1|2,3
    rank <r>
    weights <r values>
    <r * k tensor blocks, summand-major>

Model::

    model v1
    dim <n>
    rank <r>
    weights <r values>
    <r lines, one mean each>

Floats are written with 17 significant digits, which round-trips IEEE
doubles exactly.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np

from .flatten import Signature
from .moments import MixtureModel
from .otd import Decomposition
from .tensor import Tensor


class FormatError(ValueError):
    pass


def fmt_float(x: float) -> str:
    return "%.17g" % float(x)


def _fmt_row(values) -> str:
    return " ".join(fmt_float(v) for v in values)


def _lines(source):
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    return [ln for ln in (raw.strip() for raw in text.splitlines()) if ln and not ln.startswith("#")]


class _Reader:
    def __init__(self, lines):
        self.lines = lines
        self.pos = 0

    def next(self, what):
        if self.pos >= len(self.lines):
            raise FormatError(f"unexpected end of input while reading {what}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    def keyword(self, key, what=None):
        line = self.next(what or key)
        parts = line.split()
        if not parts or parts[0] != key:
            raise FormatError(f"expected '{key} ...', got {line!r}")
        return parts[1:]

    def floats(self, count, what):
        out = []
        while len(out) < count:
            out.extend(_parse_floats(self.next(what).split()))
        if len(out) != count:
            raise FormatError(f"expected {count} values for {what}, got {len(out)}")
        return out

    def done(self):
        return self.pos >= len(self.lines)


def _parse_floats(tokens):
    try:
        vals = [float(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    if not all(np.isfinite(vals)):
        raise FormatError("non-finite value in input")
    return vals


def _parse_ints(tokens, what):
    try:
        vals = [int(t) for t in tokens]
    except ValueError as exc:
        raise FormatError(f"bad {what}: {' '.join(tokens)!r}") from exc
    return vals


# tensors

def _write_tensor_block(T: Tensor, out):
    out.write("tensor v1\n")
    out.write("shape " + " ".join(str(n) for n in T.shape) + "\n")
    rows = T.values.reshape(-1, T.shape[-1])
    for row in rows:
        out.write(_fmt_row(row) + "\n")


def _read_tensor_block(rd: _Reader) -> Tensor:
    header = rd.next("tensor header")
    if header.split() != ["tensor", "v1"]:
        raise FormatError(f"expected 'tensor v1', got {header!r}")
    shape = _parse_ints(rd.keyword("shape"), "shape")
    if not shape or any(n < 1 for n in shape):
        raise FormatError(f"invalid shape {shape}")
    return Tensor.from_values(shape, rd.floats(int(np.prod(shape)), "tensor values"))


def dumps_tensor(T: Tensor) -> str:
    buf = io.StringIO()
    _write_tensor_block(T, buf)
    return buf.getvalue()


def write_tensor(T: Tensor, path):
    Path(path).write_text(dumps_tensor(T))


def read_tensor(source) -> Tensor:
    rd = _Reader(_lines(source))
    T = _read_tensor_block(rd)
    if not rd.done():
        raise FormatError("trailing content after tensor")
    return T


# samples

def dumps_samples(S) -> str:
    S = np.atleast_2d(np.asarray(S, dtype=np.float64))
    buf = io.StringIO()
    buf.write(f"samples v1 dim {S.shape[1]}\n")
    for row in S:
        buf.write(_fmt_row(row) + "\n")
    return buf.getvalue()


def write_samples(S, path):
    Path(path).write_text(dumps_samples(S))


def read_samples(source) -> np.ndarray:
    rd = _Reader(_lines(source))
    head = rd.next("samples header").split()
    if len(head) != 4 or head[:3] != ["samples", "v1", "dim"]:
        raise FormatError(f"expected 'samples v1 dim <n>', got {' '.join(head)!r}")
    n = _parse_ints(head[3:], "dimension")[0]
    rows = []
    while not rd.done():
        vals = _parse_floats(rd.next("sample").split())
        if len(vals) != n:
            raise FormatError(f"sample {len(rows) + 1} has {len(vals)} values, expected {n}")
        rows.append(vals)
    if not rows:
        raise FormatError("no samples")
    return np.array(rows)


# decompositions

def dumps_decomposition(D: Decomposition) -> str:
    buf = io.StringIO()
    buf.write("otd v1\n")
    buf.write(f"signature {D.signature.format()}\n")
    buf.write(f"rank {D.rank}\n")
    buf.write(("weights " + _fmt_row(D.weights)).rstrip() + "\n")
    for row in D.factors:
        for f in row:
            _write_tensor_block(f, buf)
    return buf.getvalue()


def write_decomposition(D: Decomposition, path):
    Path(path).write_text(dumps_decomposition(D))


def read_decomposition(source) -> Decomposition:
    rd = _Reader(_lines(source))
    if rd.next("header").split() != ["otd", "v1"]:
        raise FormatError("expected 'otd v1' header")
    sig_tokens = rd.keyword("signature")
    if len(sig_tokens) != 1:
        raise FormatError("signature must be a single token like 1|2,3")
    try:
        sig = Signature.parse(sig_tokens[0])
    except ValueError as exc:
        raise FormatError(str(exc)) from exc
    rank = _parse_ints(rd.keyword("rank"), "rank")
    if len(rank) != 1 or rank[0] < 0:
        raise FormatError("rank must be one nonnegative integer")
    r = rank[0]
    weights = _parse_floats(rd.keyword("weights"))
    if len(weights) != r:
        raise FormatError(f"{len(weights)} weights for rank {r}")
    factors = [[_read_tensor_block(rd) for _ in range(sig.k)] for _ in range(r)]
    if not rd.done():
        raise FormatError("trailing content after decomposition")
    return Decomposition(sig, weights, factors)


# models

def dumps_model(M: MixtureModel) -> str:
    buf = io.StringIO()
    buf.write("model v1\n")
    buf.write(f"dim {M.n}\n")
    buf.write(f"rank {M.r}\n")
    buf.write("weights " + _fmt_row(M.weights) + "\n")
    for mu in M.means:
        buf.write(_fmt_row(mu) + "\n")
    return buf.getvalue()


def write_model(M: MixtureModel, path):
    Path(path).write_text(dumps_model(M))


def read_model(source) -> MixtureModel:
    rd = _Reader(_lines(source))
    if rd.next("header").split() != ["model", "v1"]:
        raise FormatError("expected 'model v1' header")
    n = _parse_ints(rd.keyword("dim"), "dim")[0]
    r = _parse_ints(rd.keyword("rank"), "rank")[0]
    weights = _parse_floats(rd.keyword("weights"))
    if len(weights) != r:
        raise FormatError(f"{len(weights)} weights for rank {r}")
    means = [rd.floats(n, f"mean {i + 1}") for i in range(r)]
    if not rd.done():
        raise FormatError("trailing content after model")
    return MixtureModel(weights, np.array(means).reshape(r, n))
