"""Run outputs shared by both engines: color sets and diagnostic traces."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .instances import Graph, Instance


@dataclass(frozen=True)
class ColorSets:
    """Final assignment ``S(v)`` for every vertex (by vertex index)."""

    q: int
    alpha: float
    sets: tuple[tuple[int, ...], ...]
    header: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n(self) -> int:
        return len(self.sets)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([len(s) for s in self.sets], dtype=np.int64)

    @property
    def alpha_achieved(self) -> float:
        if not self.sets:
            return 0.0
        return float(self.sizes.min()) / self.q

    def violations(self, inst: Instance) -> list[int]:
        """Indices of edges whose vertices share a common color."""
        members = [set(s) for s in self.sets]
        bad = []
        for idx, e in enumerate(inst.edges):
            common = set(members[e[0]])
            for v in e[1:]:
                common &= members[v]
                if not common:
                    break
            if common:
                bad.append(idx)
        return bad

    def is_valid(self, inst: Instance) -> bool:
        return not self.violations(inst)

    def to_json(self) -> dict:
        out = {"q": self.q, "alpha": self.alpha, "alpha_achieved": self.alpha_achieved}
        out.update(self.header)
        out["sets"] = [list(s) for s in self.sets]
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, obj: dict) -> "ColorSets":
        header = {k: v for k, v in obj.items() if k not in ("q", "alpha", "alpha_achieved", "sets")}
        sets = tuple(tuple(sorted(int(c) for c in s)) for s in obj["sets"])
        return cls(int(obj["q"]), float(obj["alpha"]), sets, header)

    @classmethod
    def load(cls, path: str | Path) -> "ColorSets":
        return cls.from_json(json.loads(Path(path).read_text()))


def sets_from_selection(sel_by_vertex: np.ndarray) -> tuple[tuple[int, ...], ...]:
    return tuple(tuple(np.flatnonzero(row).tolist()) for row in sel_by_vertex)


@dataclass
class RunTrace:
    """Per-iteration diagnostics for a watch-set of vertices.

    ``P``, ``Q``, ``bad_hi`` and ``bad_lo`` have shape (iterations + 1, |watch|);
    row 0 is the initial state. For graphs ``bad_hi`` holds the bad-set size
    and ``bad_lo`` is zero.
    """

    watch: tuple[int, ...]
    P: np.ndarray
    Q: np.ndarray
    bad_hi: np.ndarray
    bad_lo: np.ndarray
    final_sizes: np.ndarray

    @classmethod
    def from_raw(cls, watch, raw: np.ndarray, final_sizes) -> "RunTrace":
        return cls(tuple(int(v) for v in watch), raw[:, :, 0].copy(), raw[:, :, 1].copy(),
                   raw[:, :, 2].astype(np.int64), raw[:, :, 3].astype(np.int64),
                   np.asarray(final_sizes, dtype=np.int64))

    @property
    def iterations(self) -> int:
        return self.P.shape[0] - 1

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "vertex", "P", "Q", "bad_hi", "bad_lo"])
        for it in range(self.P.shape[0]):
            for col, v in enumerate(self.watch):
                w.writerow([it, v, repr(float(self.P[it, col])), repr(float(self.Q[it, col])),
                            int(self.bad_hi[it, col]), int(self.bad_lo[it, col])])
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())

    @classmethod
    def read_csv(cls, path: str | Path) -> "RunTrace":
        rows = list(csv.DictReader(Path(path).read_text().splitlines()))
        watch = tuple(dict.fromkeys(int(r["vertex"]) for r in rows))
        its = max((int(r["iteration"]) for r in rows), default=-1) + 1
        col = {v: j for j, v in enumerate(watch)}
        raw = np.zeros((its, len(watch), 4))
        for r in rows:
            raw[int(r["iteration"]), col[int(r["vertex"])]] = [
                float(r["P"]), float(r["Q"]), int(r["bad_hi"]), int(r["bad_lo"])]
        return cls.from_raw(watch, raw, np.zeros(0, dtype=np.int64))


def is_graph(inst: Instance) -> bool:
    return isinstance(inst, Graph)
