"""Instance file formats: a line-oriented text format and a JSON mirror.

Text format, one item per line, '#' starts a comment:
    n <count>
    e <u> <v>
    i <v> <a> <b>    # edges {v,a} and {v,b} are incompatible at v
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from .graphs import Graph, GraphError, IncompatSystem


class ParseError(GraphError):
    """Raised for malformed instance files."""


@dataclass(frozen=True)
class Instance:
    graph: Graph
    system: IncompatSystem


def parse_instance_text(text: str) -> Instance:
    n: int | None = None
    edges: list[tuple[int, int]] = []
    triples: list[tuple[int, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        try:
            tag, args = fields[0], [int(x) for x in fields[1:]]
        except ValueError as exc:
            raise ParseError(f"line {lineno}: non-integer field in {raw!r}") from exc
        if tag == "n" and len(args) == 1:
            if n is not None:
                raise ParseError(f"line {lineno}: duplicate 'n' line")
            n = args[0]
        elif tag == "e" and len(args) == 2:
            edges.append((args[0], args[1]))
        elif tag == "i" and len(args) == 3:
            triples.append((args[0], args[1], args[2]))
        else:
            raise ParseError(f"line {lineno}: unrecognized line {raw!r}")
    if n is None:
        raise ParseError("missing 'n' line")
    try:
        g = Graph(n, [tuple(sorted(e)) for e in edges])
        system = IncompatSystem(g, triples)
    except GraphError as exc:
        raise ParseError(str(exc)) from exc
    return Instance(g, system)


def emit_instance_text(inst: Instance) -> str:
    lines = [f"n {inst.graph.n}"]
    lines.extend(f"e {u} {v}" for u, v in inst.graph.edges())
    lines.extend(f"i {v} {a} {b}" for v, a, b in inst.system.triples())
    return "\n".join(lines) + "\n"


def parse_instance_json(text: str) -> Instance:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict) or "n" not in obj:
        raise ParseError("JSON instance must be an object with an 'n' field")
    try:
        n = int(obj["n"])
        edges = [tuple(sorted((int(u), int(v)))) for u, v in obj.get("edges", [])]
        triples = [(int(v), int(a), int(b)) for v, a, b in obj.get("incompat", [])]
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed JSON instance: {exc}") from exc
    try:
        g = Graph(n, edges)
        system = IncompatSystem(g, triples)
    except GraphError as exc:
        raise ParseError(str(exc)) from exc
    return Instance(g, system)


def emit_instance_json(inst: Instance) -> str:
    obj = {
        "n": inst.graph.n,
        "edges": [[u, v] for u, v in inst.graph.edges()],
        "incompat": [[v, a, b] for v, a, b in inst.system.triples()],
    }
    return json.dumps(obj, sort_keys=True) + "\n"


def parse_instance(text: str) -> Instance:
    """Sniff the format: JSON if the first non-blank character is '{'."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return parse_instance_json(text)
    return parse_instance_text(text)


def load_instance(path: str) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path: str, fmt: str = "text") -> None:
    text = emit_instance_json(inst) if fmt == "json" else emit_instance_text(inst)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def content_sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
