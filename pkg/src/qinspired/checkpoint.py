"""Line-oriented text checkpoints.

Grammar::

    checkpoint := "qinspired-checkpoint <version>" NL section* "end" NL
    section    := "[meta]" NL kv* | "[config]" NL kv* | "[metrics]" NL kv*
                | "[array <name>]" NL "shape" (" " int)* NL value-line*
    kv         := key " = " json-value NL
    value-line := float (" " float)* NL        # up to 8 per line, %.17g

Floats use 17 significant digits so a load reproduces every bit, and a
save of the loaded object yields identical bytes. Sections are written in a
fixed order (meta, config, metrics, arrays sorted by name).
"""
from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict

import numpy as np

from .errors import FormatError, ParseError

VERSION = 1
MAGIC = "qinspired-checkpoint"
PER_LINE = 8


@dataclass
class Checkpoint:
    model_type: str
    epoch: int
    config: Dict[str, Any]
    arrays: Dict[str, np.ndarray]
    metrics: Dict[str, Any] = field(default_factory=dict)
    meta: Dict[str, Any] = field(default_factory=dict)


def _fmt(v: float) -> str:
    return "%.17g" % v


def dumps(ckpt: Checkpoint) -> str:
    lines = [f"{MAGIC} {VERSION}", "[meta]"]
    meta = dict(ckpt.meta, model_type=ckpt.model_type, epoch=ckpt.epoch)
    for key in sorted(meta):
        lines.append(f"{key} = {json.dumps(meta[key], sort_keys=True)}")
    for title, mapping in (("config", ckpt.config), ("metrics", ckpt.metrics)):
        lines.append(f"[{title}]")
        for key in sorted(mapping):
            lines.append(f"{key} = {json.dumps(mapping[key], sort_keys=True)}")
    for name in sorted(ckpt.arrays):
        arr = np.asarray(ckpt.arrays[name], dtype=np.float64)
        lines.append(f"[array {name}]")
        lines.append(" ".join(["shape"] + [str(d) for d in arr.shape]))
        flat = arr.reshape(-1)
        for start in range(0, flat.size, PER_LINE):
            lines.append(" ".join(_fmt(v) for v in flat[start : start + PER_LINE]))
    lines.append("end")
    return "\n".join(lines) + "\n"


def save_checkpoint(path, ckpt: Checkpoint) -> None:
    """Write atomically: a temp file in the same directory is renamed over ``path``."""
    path = Path(path)
    text = dumps(ckpt)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _parse_kv(section: str, line: str):
    key, sep, value = line.partition(" = ")
    if not sep:
        raise ParseError(section, f"expected 'key = value', got {line!r}")
    try:
        return key, json.loads(value)
    except json.JSONDecodeError as exc:
        raise ParseError(section, f"bad value for {key}: {exc}") from None


def loads(text: str) -> Checkpoint:
    lines = text.split("\n")
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != MAGIC:
        raise FormatError("not a qinspired checkpoint")
    if head[1] != str(VERSION):
        raise FormatError(f"unsupported checkpoint version {head[1]!r} (expected {VERSION})")
    maps: Dict[str, Dict[str, Any]] = {"meta": {}, "config": {}, "metrics": {}}
    arrays: Dict[str, np.ndarray] = {}
    i, ended = 1, False
    while i < len(lines):
        line = lines[i]
        if line == "end":
            ended = True
            break
        if not (line.startswith("[") and line.endswith("]")):
            raise ParseError("file", f"line {i + 1}: expected a section header, got {line!r}")
        title = line[1:-1]
        i += 1
        if title in maps:
            while i < len(lines) and not lines[i].startswith("[") and lines[i] != "end":
                key, value = _parse_kv(title, lines[i])
                maps[title][key] = value
                i += 1
        elif title.startswith("array "):
            name = title[len("array ") :]
            shape_line = lines[i].split() if i < len(lines) else []
            if not shape_line or shape_line[0] != "shape":
                raise ParseError(title, "missing shape line")
            try:
                shape = tuple(int(d) for d in shape_line[1:])
            except ValueError:
                raise ParseError(title, f"bad shape {lines[i]!r}") from None
            i += 1
            values = []
            while i < len(lines) and not lines[i].startswith("[") and lines[i] != "end":
                try:
                    values.extend(float(tok) for tok in lines[i].split())
                except ValueError:
                    raise ParseError(title, f"bad number on line {i + 1}") from None
                i += 1
            size = int(np.prod(shape)) if shape else 1
            if len(values) != size:
                raise ParseError(title, f"expected {size} values, found {len(values)}")
            arrays[name] = np.array(values, dtype=np.float64).reshape(shape)
        else:
            raise ParseError(title, "unknown section")
    if not ended:
        raise ParseError("file", "missing 'end' marker (truncated file?)")
    meta = maps["meta"]
    try:
        model_type, epoch = meta.pop("model_type"), meta.pop("epoch")
    except KeyError as exc:
        raise ParseError("meta", f"missing {exc.args[0]}") from None
    return Checkpoint(model_type, epoch, maps["config"], arrays, maps["metrics"], meta)


def load_checkpoint(path) -> Checkpoint:
    return loads(Path(path).read_text())
