"""Instance and solution files, plus a best-effort book-data importer.

The canonical instance format is a small JSON document with 1-based layer
indices and character ids::

    {
      "schema": 1,
      "layers": 3,
      "characters": [{"id": 1, "name": "Ann"}, {"id": 2, "name": "Ben"}],
      "interactions": [{"time": 1, "chars": [1, 2]}],
      "activity": [{"char": 1, "start": 1, "end": 3}]
    }

``activity`` is optional; missing intervals default to each character's
first-to-last interaction.  Solution files store the per-layer permutations
(1-based ids, top to bottom) together with the deterministic result fields
of a solve report; wall-clock timings are written only on request so that
emitted artifacts are byte-stable for fixed inputs.
"""

from __future__ import annotations

import json
import re
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Mapping

from .core import (
    Drawing,
    DrawingError,
    InstanceError,
    StorylineError,
    StorylineInstance,
    total_crossings,
    validate,
)

SCHEMA = 1


class ParseError(StorylineError):
    """Bad file contents; carries a position for syntax-level failures."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


def _load_json(path: str | Path) -> Any:
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc


def _expect(condition: bool, message: str) -> None:
    if not condition:
        raise ParseError(message)


def parse_instance(path: str | Path, drop_empty_layers: bool = False) -> StorylineInstance:
    """Read an instance file; raises ParseError with the violated invariant."""
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "top level must be an object")
    _expect(doc.get("schema", SCHEMA) == SCHEMA, f"unsupported schema {doc.get('schema')!r}")
    layers = doc.get("layers")
    _expect(isinstance(layers, int) and layers >= 1, "'layers' must be a positive integer")
    chars = doc.get("characters")
    _expect(isinstance(chars, list) and chars, "'characters' must be a non-empty array")
    id_map: dict[int, int] = {}
    names: list[str] = []
    for entry in chars:
        _expect(isinstance(entry, dict) and isinstance(entry.get("id"), int), "character entries need an integer 'id'")
        cid = entry["id"]
        _expect(cid not in id_map, f"duplicate character id {cid}")
        id_map[cid] = len(names)
        names.append(str(entry.get("name", f"c{cid}")))

    interactions = []
    for n, entry in enumerate(doc.get("interactions", [])):
        _expect(isinstance(entry, dict), f"interaction {n} must be an object")
        time = entry.get("time")
        _expect(isinstance(time, int) and 1 <= time <= layers, f"interaction {n} time {time!r} outside 1..{layers}")
        members = entry.get("chars")
        _expect(isinstance(members, list) and members, f"interaction {n} needs a non-empty 'chars' array")
        for cid in members:
            _expect(cid in id_map, f"interaction {n} references unknown character id {cid!r}")
        interactions.append((time - 1, frozenset(id_map[cid] for cid in members)))

    activity = None
    if "activity" in doc:
        spans: dict[int, tuple[int, int]] = {}
        for n, entry in enumerate(doc["activity"]):
            _expect(isinstance(entry, dict), f"activity {n} must be an object")
            cid, s, e = entry.get("char"), entry.get("start"), entry.get("end")
            _expect(cid in id_map, f"activity {n} references unknown character id {cid!r}")
            _expect(
                isinstance(s, int) and isinstance(e, int) and 1 <= s <= e <= layers,
                f"activity {n} interval [{s}, {e}] is not within 1..{layers}",
            )
            spans[id_map[cid]] = (s - 1, e - 1)
        _expect(len(spans) == len(names), "'activity' must cover every character exactly once")
        activity = tuple(spans[k] for k in range(len(names)))

    try:
        inst = StorylineInstance.build(
            n_layers=layers,
            interactions=interactions,
            activity=activity,
            n_chars=len(names),
            char_names=names,
        )
    except InstanceError as exc:
        raise ParseError(str(exc)) from exc
    return inst.drop_empty_layers() if drop_empty_layers else inst


def instance_to_dict(inst: StorylineInstance) -> dict:
    """Canonical JSON form with dense 1-based ids in internal order."""
    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "layers": inst.n_layers,
        "characters": [{"id": c + 1, "name": inst.name_of(c)} for c in range(inst.n_chars)],
        "interactions": [
            {"time": inter.time + 1, "chars": [c + 1 for c in inter.sorted_chars()]}
            for inter in inst.interactions
        ],
        "activity": [
            {"char": c + 1, "start": s + 1, "end": e + 1}
            for c, (s, e) in enumerate(inst.activity)
        ],
    }
    return doc


def write_instance(path: str | Path, inst: StorylineInstance) -> None:
    Path(path).write_text(
        json.dumps(instance_to_dict(inst), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


_REPORT_FIELDS = ("status", "best_crossings", "bound", "separation_rounds", "lop_added")


def write_solution(
    path: str | Path,
    inst: StorylineInstance,
    d: Drawing,
    report: Any = None,
    include_timings: bool = False,
) -> None:
    """Write permutations plus the deterministic report fields.

    ``report`` may be a solve report or any mapping; timing fields are
    volatile and only included when asked for.
    """
    bad = validate(inst, d)
    if bad:
        raise ParseError(f"refusing to write an invalid drawing: {bad[0].message}")
    doc: dict[str, Any] = {
        "schema": SCHEMA,
        "crossings": total_crossings(inst, d).total,
        "permutations": [[c + 1 for c in perm] for perm in d.perms],
    }
    data: Mapping[str, Any] = {}
    if is_dataclass(report):
        data = asdict(report)
    elif isinstance(report, Mapping):
        data = report
    for key in _REPORT_FIELDS:
        if key in data:
            doc[key] = data[key]
    if include_timings and "wall_time" in data:
        doc["wall_time"] = data["wall_time"]
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_solution(
    path: str | Path, inst: StorylineInstance | None = None
) -> tuple[Drawing, dict]:
    """Read a solution file; with an instance, check feasibility and the count.

    A drawing that does not fit the instance raises DrawingError; a file
    whose recorded crossing count disagrees with the recount raises
    ParseError.
    """
    doc = _load_json(path)
    _expect(isinstance(doc, dict), "top level must be an object")
    _expect(doc.get("schema", SCHEMA) == SCHEMA, f"unsupported schema {doc.get('schema')!r}")
    perms = doc.get("permutations")
    _expect(isinstance(perms, list), "'permutations' must be an array of arrays")
    drawing = Drawing(tuple(tuple(int(c) - 1 for c in perm) for perm in perms))
    report = {k: v for k, v in doc.items() if k not in ("schema", "permutations")}
    if inst is not None:
        bad = validate(inst, drawing)
        if bad:
            raise DrawingError(bad)
        recount = total_crossings(inst, drawing).total
        if "crossings" in doc and doc["crossings"] != recount:
            raise ParseError(
                f"solution file records {doc['crossings']} crossings but the drawing has {recount}"
            )
    return drawing, report


# -- book-data importer -----------------------------------------------------------

_SCENE_RE = re.compile(r"^(&?)\s*[0-9]+(?:\.[0-9]+)*\s*:(.*)$")
_CHARDEF_RE = re.compile(r"^([A-Za-z][A-Za-z0-9]?)\s+(\S.*)$")


def convert_book(path: str | Path, drop_empty_layers: bool = False) -> StorylineInstance:
    """Import a plain-text book file of chapter records into an instance.

    Best-effort mapping: every chapter record line (``<label>:<groups>``)
    becomes one layer; ``&``-continuations extend the previous layer; each
    semicolon-separated group becomes one interaction; characters repeated
    at a layer stay with their first group.  Characters are active from
    their first to their last interaction.
    """
    names: dict[str, str] = {}
    scenes: list[list[list[str]]] = []
    for raw in Path(path).read_text(encoding="utf-8", errors="replace").splitlines():
        line = raw.rstrip()
        if not line or line.startswith("*"):
            continue
        m = _SCENE_RE.match(line)
        if m:
            groups = [
                [code.strip() for code in group.split(",") if code.strip()]
                for group in m.group(2).split(";")
                if group.strip()
            ]
            if m.group(1) == "&" and scenes:
                scenes[-1].extend(groups)
            else:
                scenes.append(groups)
            continue
        m = _CHARDEF_RE.match(line)
        if m:
            names.setdefault(m.group(1), m.group(2).strip())
    scenes = [groups for groups in scenes if groups]
    if not scenes:
        raise ParseError("no chapter records found")

    codes = sorted({code for groups in scenes for group in groups for code in group})
    unknown = [code for code in codes if code not in names]
    for code in unknown:
        names[code] = code
    ids = {code: k for k, code in enumerate(codes)}

    interactions = []
    for layer, groups in enumerate(scenes):
        used: set[int] = set()
        for group in groups:
            members = [ids[code] for code in group if ids[code] not in used]
            if not members:
                continue
            used.update(members)
            interactions.append((layer, frozenset(members)))

    inst = StorylineInstance.build(
        n_layers=len(scenes),
        interactions=interactions,
        n_chars=len(codes),
        char_names=[names[code] for code in codes],
    )
    return inst.drop_empty_layers() if drop_empty_layers else inst
