"""The ``lac-1`` problem format: JSON text with complex numbers as ``[re, im]`` pairs.

A document holds named sections ``algebras``, ``modules``, ``correspondences``,
``candidates``, ``expectations`` and ``actions``, plus an ordered list of
``requests``.  :func:`dumps` writes a canonical layout, so a canonical text
survives ``dumps(parse(text)) == text``.
"""
import json
from dataclasses import dataclass, field

import numpy as np

from .adjunction import InnerProductCandidate
from .algebra import MultiMatrixAlgebra
from .errors import LocalAdjError, ParseError, UnresolvedReference
from .expectation import ProjectiveTwistedAction, block_expectation, group_average
from .forge import FiniteCover, cover_expectation
from .module import HilbertModule
from .tensor import Correspondence, compact_picture

VERSION = "lac-1"
SECTIONS = ("algebras", "modules", "correspondences", "candidates", "expectations", "actions")
COMMANDS = ("validate", "certify", "index", "expectation", "report")


@dataclass
class ProblemDocument:
    """Parsed document; ``raw`` keeps the JSON-level data for canonical output."""

    raw: dict
    algebras: dict = field(default_factory=dict)
    modules: dict = field(default_factory=dict)
    correspondences: dict = field(default_factory=dict)
    candidates: dict = field(default_factory=dict)
    expectations: dict = field(default_factory=dict)
    actions: dict = field(default_factory=dict)
    requests: list = field(default_factory=list)


# -- tensors ------------------------------------------------------------------------

def encode_tensor(x):
    """Nested lists with each complex entry as ``[re, im]``."""
    x = np.asarray(x, dtype=np.complex128)
    return np.stack([x.real, x.imag], axis=-1).tolist()


def decode_tensor(v, path, shape=None):
    try:
        arr = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise ParseError("tensor is ragged or non-numeric", path) from None
    if arr.ndim == 0 or arr.shape[-1] != 2:
        raise ParseError("complex entries must be [re, im] pairs", path)
    out = arr[..., 0] + 1j * arr[..., 1]
    if shape is not None and out.shape != tuple(shape):
        raise ParseError(f"tensor has shape {list(out.shape)}, expected {list(shape)}", path)
    return out


# -- canonical text -------------------------------------------------------------------

def _depth(v):
    d = 0
    while isinstance(v, list) and v:
        v = v[0]
        d += 1
    return d


def _emit(v, indent, out):
    pad = " " * indent
    if isinstance(v, dict):
        if not v:
            out.append("{}")
            return
        out.append("{\n")
        items = list(v.items())
        for i, (k, val) in enumerate(items):
            out.append(pad + "  " + json.dumps(k) + ": ")
            _emit(val, indent + 2, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(v, list) and v and (isinstance(v[0], (dict, list)) and _depth(v) > 2 or isinstance(v[0], dict)):
        out.append("[\n")
        for i, val in enumerate(v):
            out.append(pad + "  ")
            _emit(val, indent + 2, out)
            out.append(",\n" if i + 1 < len(v) else "\n")
        out.append(pad + "]")
    else:
        out.append(json.dumps(v, separators=(", ", ": "), allow_nan=False))


def canonical_text(data):
    """Deterministic layout: one line per matrix row of ``[re, im]`` pairs."""
    out = []
    _emit(data, 0, out)
    out.append("\n")
    return "".join(out)


def dumps(doc):
    return canonical_text(doc.raw if isinstance(doc, ProblemDocument) else doc)


# -- parsing --------------------------------------------------------------------------

def _get(d, key, path, kind=None):
    if not isinstance(d, dict) or key not in d:
        raise ParseError(f"missing field '{key}'", path)
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ParseError(f"field '{key}' has the wrong type", f"{path}.{key}")
    return v


def _ref(table, name, path, what):
    if not isinstance(name, str) or name not in table:
        raise UnresolvedReference(f"unknown {what} {name!r}", path)
    return table[name]


def _invariant(path, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except LocalAdjError as exc:
        raise ParseError(f"{type(exc).__name__}: {exc}", path) from exc
    except ValueError as exc:
        raise ParseError(str(exc), path) from exc


def _int_list(v, path):
    if not isinstance(v, list) or not all(isinstance(x, int) and not isinstance(x, bool) for x in v):
        raise ParseError("expected a list of integers", path)
    return v


def parse(text, validate=True, tol=None):
    """Parse and validate a document; raises :class:`ParseError` with a field path."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    if not isinstance(raw, dict):
        raise ParseError("document must be an object", "$")
    if raw.get("version") != VERSION:
        raise ParseError(f"unrecognized version tag {raw.get('version')!r}", "$.version")
    for key in raw:
        if key not in ("version",) + SECTIONS + ("requests",):
            raise ParseError(f"unknown section '{key}'", f"$.{key}")
    doc = ProblemDocument(raw)
    kw = {} if tol is None else {"tol": tol}
    for s in SECTIONS:
        if not isinstance(raw.get(s, {}), dict):
            raise ParseError("section must be an object", f"$.{s}")

    for name, d in raw.get("algebras", {}).items():
        p = f"$.algebras.{name}"
        blocks = _int_list(_get(d, "blocks", p), p + ".blocks")
        doc.algebras[name] = _invariant(p, MultiMatrixAlgebra, blocks)

    for name, d in raw.get("modules", {}).items():
        p = f"$.modules.{name}"
        A = _ref(doc.algebras, _get(d, "algebra", p), p + ".algebra", "algebra")
        dim = _get(d, "dim", p, int)
        R = decode_tensor(_get(d, "action", p), p + ".action", (A.dim, dim, dim))
        G = decode_tensor(_get(d, "inner", p), p + ".inner", (dim, dim, A.dim))
        doc.modules[name] = _invariant(p, HilbertModule, A, R, G, validate=validate, **kw)

    for name, d in raw.get("correspondences", {}).items():
        p = f"$.correspondences.{name}"
        A = _ref(doc.algebras, _get(d, "source", p), p + ".source", "algebra")
        X = _ref(doc.modules, _get(d, "module", p), p + ".module", "module")
        L = decode_tensor(_get(d, "left", p), p + ".left", (A.dim, X.dim, X.dim))
        doc.correspondences[name] = _invariant(p, Correspondence, A, X, L, validate=validate, **kw)

    for name, d in raw.get("candidates", {}).items():
        p = f"$.candidates.{name}"
        F = _ref(doc.correspondences, _get(d, "correspondence", p), p + ".correspondence", "correspondence")
        H = decode_tensor(_get(d, "pairing", p), p + ".pairing", (F.dim, F.dim, F.source.dim))
        doc.candidates[name] = _invariant(p, InnerProductCandidate, F, H, validate=validate, **kw)

    for name, d in raw.get("actions", {}).items():
        p = f"$.actions.{name}"
        X = _ref(doc.modules, _get(d, "module", p), p + ".module", "module")
        table = np.asarray(_get(d, "table", p, list), dtype=int)
        n = table.shape[0] if table.ndim == 2 else -1
        if table.shape != (n, n):
            raise ParseError("group table must be square", p + ".table")
        U = decode_tensor(_get(d, "carriers", p), p + ".carriers", (n, X.dim, X.dim))
        base = decode_tensor(d["base"], p + ".base", (n, X.algebra.dim, X.algebra.dim)) if "base" in d else None
        tw = decode_tensor(d["twist"], p + ".twist", (n, n, X.algebra.dim)) if "twist" in d else None
        doc.actions[name] = _invariant(p, ProjectiveTwistedAction, X, table, U, base, tw, validate=validate, **kw)

    for name, d in raw.get("expectations", {}).items():
        doc.expectations[name] = _parse_expectation(doc, d, f"$.expectations.{name}")

    reqs = raw.get("requests", [])
    if not isinstance(reqs, list):
        raise ParseError("requests must be a list", "$.requests")
    for i, r in enumerate(reqs):
        p = f"$.requests[{i}]"
        cmd = _get(r, "command", p, str)
        if cmd not in COMMANDS:
            raise ParseError(f"unknown command {cmd!r}", p + ".command")
        target = r.get("target")
        if target is not None and not any(target in getattr(doc, s) for s in SECTIONS):
            raise UnresolvedReference(f"unknown target {target!r}", p + ".target")
        doc.requests.append(dict(r))
    return doc


def _parse_expectation(doc, d, p):
    kind = _get(d, "kind", p, str)
    if kind == "cover":
        c = _get(d, "cover", p, dict)
        cover = _invariant(p + ".cover", FiniteCover, _get(c, "total", p + ".cover", int),
                           _get(c, "base", p + ".cover", int), _int_list(_get(c, "map", p + ".cover"), p + ".cover.map"),
                           [float(w) for w in _get(c, "weights", p + ".cover", list)])
        phi, F = _invariant(p, cover_expectation, cover)
        return {"kind": kind, "expectation": phi, "module": F.module, "cover": cover}
    if kind == "block":
        X = _ref(doc.modules, _get(d, "module", p), p + ".module", "module")
        P = compact_picture(X)
        groups = [_int_list(g, f"{p}.groups[{i}]") for i, g in enumerate(_get(d, "groups", p, list))]
        sizes = _int_list(_get(d, "sizes", p), p + ".sizes")
        if len(sizes) != len(groups):
            raise ParseError("one size per group is required", p + ".sizes")
        omegas = {int(k): decode_tensor(v, f"{p}.omegas.{k}") for k, v in d.get("omegas", {}).items()}
        mus = {int(k): float(v) for k, v in d.get("mus", {}).items()}
        phi = _invariant(p, block_expectation, P.algebra, groups, sizes, omegas, mus, picture=P)
        return {"kind": kind, "expectation": phi, "module": X}
    if kind == "group-average":
        act = _ref(doc.actions, _get(d, "action", p), p + ".action", "action")
        avg = _invariant(p, group_average, act)
        return {"kind": kind, "expectation": avg.expectation, "module": act.module, "action": act, "average": avg}
    raise ParseError(f"unknown expectation kind {kind!r}", p + ".kind")


def load(path, validate=True, tol=None):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return parse(text, validate=validate, tol=tol)
    except ParseError as exc:
        raise ParseError(exc.message, f"{path}: {exc.path}") from None


# -- building documents ---------------------------------------------------------------

class DocumentBuilder:
    """Collects named objects and emits a canonical ``lac-1`` document."""

    def __init__(self):
        self.raw = {"version": VERSION}
        self._ids = {}
        self._keep = []  # ids stay unique while the objects are alive

    def _section(self, s):
        return self.raw.setdefault(s, {})

    def _name(self, obj, s, name):
        key = (s, id(obj))
        if key in self._ids:
            return self._ids[key]
        sec = self._section(s)
        if name in sec:
            i = 2
            while f"{name}_{i}" in sec:
                i += 1
            name = f"{name}_{i}"
        self._ids[key] = name
        self._keep.append(obj)
        return name

    def algebra(self, A, name=None):
        for k, v in self._section("algebras").items():
            if v["blocks"] == list(A.block_sizes):
                return k
        name = name or "alg_" + "_".join(map(str, A.block_sizes))
        self._section("algebras")[name] = {"blocks": [int(b) for b in A.block_sizes]}
        return name

    def module(self, X, name="module"):
        if ("modules", id(X)) in self._ids:
            return self._ids[("modules", id(X))]
        a = self.algebra(X.algebra)
        n = self._name(X, "modules", name)
        self._section("modules")[n] = {"algebra": a, "dim": int(X.dim), "action": encode_tensor(X.action),
                                       "inner": encode_tensor(X.inner)}
        return n

    def correspondence(self, F, name="F"):
        key = ("correspondences", id(F))
        if key in self._ids:
            return self._ids[key]
        a = self.algebra(F.source)
        m = self.module(F.module, name + "_module")
        n = self._name(F, "correspondences", name)
        self._section("correspondences")[n] = {"source": a, "module": m, "left": encode_tensor(F.left)}
        return n

    def candidate(self, cand, name="cand"):
        f = self.correspondence(cand.F)
        n = self._name(cand, "candidates", name)
        self._section("candidates")[n] = {"correspondence": f, "pairing": encode_tensor(cand.pairing)}
        return n

    def action(self, act, name="action"):
        m = self.module(act.module, name + "_module")
        n = self._name(act, "actions", name)
        d = {"module": m, "table": act.table.astype(int).tolist(), "carriers": encode_tensor(act.carriers),
             "base": encode_tensor(act.base)}
        if act.twist is not None:
            d["twist"] = encode_tensor(act.twist)
        self._section("actions")[n] = d
        return n

    def cover_expectation(self, cover, name="expectation"):
        n = self._name(cover, "expectations", name)
        self._section("expectations")[n] = {"kind": "cover", "cover": {
            "total": cover.total, "base": cover.base, "map": [int(x) for x in cover.map],
            "weights": [float(w) for w in cover.weights]}}
        return n

    def group_expectation(self, act, name="average"):
        a = self.action(act, name + "_action")
        n = self._name(act, "expectations", name)
        self._section("expectations")[n] = {"kind": "group-average", "action": a}
        return n

    def request(self, command, target=None, **opts):
        r = {"command": command}
        if target is not None:
            r["target"] = target
        r.update(opts)
        self.raw.setdefault("requests", []).append(r)

    def text(self):
        return canonical_text(self._ordered())

    def _ordered(self):
        out = {"version": VERSION}
        for s in SECTIONS:
            if s in self.raw:
                out[s] = self.raw[s]
        if "requests" in self.raw:
            out["requests"] = self.raw["requests"]
        return out
