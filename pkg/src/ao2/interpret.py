"""Human-readable views of a pool and of single logged decisions."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Iterator

import numpy as np

from .option_graph import NodeKind, OptionPool

PRUNED = "pruned"


def _sig(x: float, digits: int) -> str:
    return format(float(x), f".{digits}g")


@dataclass
class NodeStats:
    visits: int = 0
    created_step: int | None = None


@dataclass
class PoolView:
    """Display-rounded nodes and edges plus per-node usage counts."""

    nodes: list[dict]
    edges: list[dict]
    stats: dict[int, NodeStats] = field(default_factory=dict)


def pool_view(pool: OptionPool, trace_rows: Iterable[dict] = ()) -> PoolView:
    stats: dict[int, NodeStats] = {}
    visits = Counter()
    for row in trace_rows:
        for nid in row["path"].split(">")[:-1]:
            visits[int(nid)] += 1
        if row.get("created"):
            stats.setdefault(int(row["created"]), NodeStats()).created_step = int(row["step"])
    for nid, n in visits.items():
        stats.setdefault(nid, NodeStats()).visits = n
    nodes, edges = [], []
    for nid in sorted(pool.nodes):
        node = pool.nodes[nid]
        nodes.append({
            "id": nid,
            "kind": node.kind.value,
            "value": None if node.is_leaf else [_sig(x, 4) for x in node.value],
        })
        edges.extend({"from": nid, "to": c, "weight": _sig(w, 3)} for c, w in node.children.items())
    return PoolView(nodes, edges, stats)


def _dot_label(lines: list[str]) -> str:
    return "\\n".join(s.replace("\\", "\\\\").replace('"', '\\"') for s in lines)


def export_dot(pool: OptionPool, annotations: dict[int, NodeStats] | None = None) -> str:
    """Graphviz DOT text: one node per option, one labelled edge per weight."""
    annotations = annotations or {}
    out = ["digraph pool {", "  rankdir=LR;", '  node [fontname="monospace"];']
    for nid in sorted(pool.nodes):
        node = pool.nodes[nid]
        if node.kind is NodeKind.ACTION_LEAF:
            lines = [f"#{nid} action {nid}"]
            shape = "box"
        else:
            lines = [f"#{nid} interior", "[" + ", ".join(_sig(x, 4) for x in node.value) + "]"]
            shape = "ellipse"
        st = annotations.get(nid)
        if st is not None:
            lines.append(f"visits={st.visits}" + ("" if st.created_step is None else f" born@{st.created_step}"))
        out.append(f'  n{nid} [shape={shape}, label="{_dot_label(lines)}"];')
    for nid in sorted(pool.nodes):
        for child, w in pool.nodes[nid].children.items():
            out.append(f'  n{nid} -> n{child} [label="{_sig(w, 3)}"];')
    out.append("}")
    return "\n".join(out) + "\n"


def read_trace(path) -> Iterator[dict]:
    with open(path, newline="") as fh:
        yield from csv.DictReader(fh)


def find_step(path, step: int) -> dict:
    for row in read_trace(path):
        if int(row["step"]) == step:
            return row
    raise KeyError(f"step {step} not in trace {path}")


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.split(";")] if s else []


@dataclass
class Explanation:
    step: int
    episode: int
    observation: list[float]
    attention: list[float]
    path: list[int]
    matched: int
    matched_value: list[float] | None
    terms: list[float] | None  # per-dimension w_i * |u_i - v_i|
    distance: float | None
    candidate_weights: dict[int, float] | None
    chosen: int
    exploratory: bool
    margin: float | None  # chosen weight minus best alternative, in the snapshot
    snapshot_choice: int | None
    markers: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["candidate_weights"] is not None:
            d["candidate_weights"] = {str(k): v for k, v in d["candidate_weights"].items()}
        return d

    def render(self) -> str:
        lines = [
            f"step {self.step} (episode {self.episode})",
            f"  observation   {_vec(self.observation)}",
            f"  matched node  #{self.matched}" + (f"  {_vec(self.matched_value)}" if self.matched_value else "  <pruned>"),
        ]
        if self.terms is not None:
            lines.append(f"  w*|u-v| terms {_vec(self.terms)}  sum={_sig(self.distance, 6)}")
        lines.append("  path          " + " > ".join(f"#{n}" for n in self.path))
        if self.candidate_weights is not None:
            cw = "  ".join(f"a{a}={_sig(w, 6)}" for a, w in self.candidate_weights.items())
            lines.append(f"  action edges  {cw}")
        tag = "exploratory action" if self.exploratory else "greedy"
        lines.append(f"  chosen        a{self.chosen} ({tag})" +
                     ("" if self.margin is None else f", margin {_sig(self.margin, 6)}"))
        for m in self.markers:
            lines.append(f"  note          {m}")
        return "\n".join(lines)


def _vec(xs) -> str:
    return "[" + ", ".join(f"{_sig(x, 4):>9}" for x in xs) + "]"


def explain_step(row: dict, pool: OptionPool) -> Explanation:
    """Reconstruct why a logged decision was taken, against a pool snapshot.

    Node and edge references missing from the snapshot are reported as
    markers instead of raising.
    """
    u = np.array(_floats(row["observation"]))
    w = np.array(_floats(row["attention"])) if row.get("attention") else np.ones_like(u)
    path = [int(x) for x in row["path"].split(">")]
    matched = path[-2]
    chosen = int(row["action"])
    markers = []
    node = pool.nodes.get(matched)
    value = terms = dist = cand = margin = snap = None
    if node is None or node.is_leaf:
        markers.append(f"{PRUNED} node #{matched}")
    else:
        value = [float(x) for x in node.value]
        t = np.abs(u - node.value) * w
        terms = [float(x) for x in t]
        dist = float(t.sum())
        cand = {a: float(node.children[a]) for a in pool.action_children(matched)}
        if chosen not in cand:
            markers.append(f"{PRUNED} edge #{matched}->a{chosen}")
        if cand:
            snap = max(sorted(cand), key=lambda a: cand[a])
            if chosen in cand:
                others = [v for a, v in cand.items() if a != chosen]
                margin = cand[chosen] - max(others) if others else 0.0
        if snap is not None and snap != chosen and not int(row["exploratory"]):
            markers.append(f"weights have moved since this step; the snapshot now prefers a{snap}")
    for a, b in zip(path, path[1:-1]):
        if a not in pool.nodes:
            markers.append(f"{PRUNED} node #{a}")
        elif b not in pool.nodes[a].children:
            markers.append(f"{PRUNED} edge #{a}->#{b}")
    return Explanation(
        step=int(row["step"]), episode=int(row["episode"]), observation=[float(x) for x in u],
        attention=[float(x) for x in w], path=path, matched=matched, matched_value=value, terms=terms,
        distance=dist, candidate_weights=cand, chosen=chosen, exploratory=bool(int(row["exploratory"])),
        margin=margin, snapshot_choice=snap, markers=markers,
    )
