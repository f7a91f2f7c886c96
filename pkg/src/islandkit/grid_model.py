"""
Grid model
----------

Physical network topology, measured operating point and bus angle waveforms,
plus the file readers/writers for each of them.

Units are fixed throughout the package: MW, Mvar, radians, seconds and
per-unit voltage. Buses are indexed in file order and every matrix in the
package uses that order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    MissingRecordError,
    NonUniformGridError,
    ParseError,
    RaggedSeriesError,
    ValidationError,
)

FLOW_COLUMNS = ("branch_id", "from", "to", "P_from_MW", "Q_from_Mvar", "P_to_MW", "Q_to_Mvar")
BUS_COLUMNS = ("bus", "V_pu", "phi_rad", "PG_MW", "QG_Mvar", "PL_MW", "QL_Mvar")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Bus:
    index: int
    label: str


@dataclass(frozen=True)
class Branch:
    id: str
    from_bus: Bus
    to_bus: Bus

    @property
    def endpoints(self) -> tuple[int, int]:
        return self.from_bus.index, self.to_bus.index


@dataclass(frozen=True)
class GridTopology:
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]
    _label_index: dict = field(default_factory=dict, repr=False, compare=False)
    _pair_index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        labels = {}
        for k, bus in enumerate(self.buses):
            if bus.index != k:
                raise ValidationError(f"bus indices must be contiguous, got {bus.index} at position {k}")
            if bus.label in labels:
                raise ValidationError(f"duplicate bus label {bus.label!r}", label=bus.label)
            labels[bus.label] = k
        pairs: dict[tuple[int, int], list[int]] = {}
        ids = set()
        for pos, br in enumerate(self.branches):
            for end in (br.from_bus, br.to_bus):
                if labels.get(end.label) != end.index:
                    raise ValidationError(
                        f"branch {br.id!r} references unlisted bus {end.label!r}", branch=br.id
                    )
            if br.from_bus.index == br.to_bus.index:
                raise ValidationError(f"branch {br.id!r} is a self-loop", branch=br.id)
            if br.id in ids:
                raise ValidationError(f"duplicate branch id {br.id!r}", branch=br.id)
            ids.add(br.id)
            key = tuple(sorted(br.endpoints))
            pairs.setdefault(key, []).append(pos)
        self._label_index.update(labels)
        self._pair_index.update(pairs)

    @property
    def n_buses(self) -> int:
        return len(self.buses)

    @property
    def labels(self) -> list[str]:
        return [b.label for b in self.buses]

    def index_of(self, label: str) -> int:
        try:
            return self._label_index[label]
        except KeyError:
            raise ValidationError(f"unknown bus {label!r}", label=label) from None

    def branch_by_id(self, branch_id: str) -> tuple[int, Branch]:
        for pos, br in enumerate(self.branches):
            if br.id == branch_id:
                return pos, br
        raise ValidationError(f"unknown branch {branch_id!r}", branch=branch_id)

    def branches_between(self, i: int, j: int) -> list[tuple[Branch, bool]]:
        """Branches joining buses ``i`` and ``j`` in either direction.

        Each entry is ``(branch, reversed)`` where ``reversed`` is True when
        the branch is stored as ``j -> i``.
        """
        out = []
        for pos in self._pair_index.get((min(i, j), max(i, j)), []):
            br = self.branches[pos]
            out.append((br, br.from_bus.index != i))
        return out

    def adjacency(self) -> list[list[int]]:
        adj: list[set[int]] = [set() for _ in self.buses]
        for br in self.branches:
            i, j = br.endpoints
            adj[i].add(j)
            adj[j].add(i)
        return [sorted(a) for a in adj]

    def bus_pairs(self) -> list[tuple[int, int]]:
        """Unique unordered bus pairs joined by at least one branch, sorted."""
        return sorted(self._pair_index)

    def components(self, members=None) -> list[list[int]]:
        """Connected components of the subgraph induced by ``members`` (all buses by default)."""
        adj = self.adjacency()
        allowed = set(range(self.n_buses)) if members is None else set(members)
        seen: set[int] = set()
        comps = []
        for start in sorted(allowed):
            if start in seen:
                continue
            comp = []
            queue = deque([start])
            seen.add(start)
            while queue:
                u = queue.popleft()
                comp.append(u)
                for v in adj[u]:
                    if v in allowed and v not in seen:
                        seen.add(v)
                        queue.append(v)
            comps.append(sorted(comp))
        return comps

    def is_connected(self) -> bool:
        return len(self.components()) <= 1

    def to_dict(self) -> dict:
        return {
            "buses": [{"label": b.label} for b in self.buses],
            "branches": [
                {"from": br.from_bus.label, "to": br.to_bus.label, "id": br.id} for br in self.branches
            ],
        }


def build_topology(labels, branches) -> GridTopology:
    """Build a topology from bus labels and ``(from_label, to_label, id)`` triples."""
    buses = tuple(Bus(k, str(lab)) for k, lab in enumerate(labels))
    lookup = {}
    for b in buses:
        if b.label in lookup:
            raise ValidationError(f"duplicate bus label {b.label!r}", label=b.label)
        lookup[b.label] = b
    out = []
    seen = set()
    for frm, to, bid in branches:
        frm, to, bid = str(frm), str(to), str(bid)
        for end in (frm, to):
            if end not in lookup:
                raise ValidationError(f"branch {bid!r} references unlisted bus {end!r}", branch=bid)
        key = (frozenset((frm, to)), bid)
        if key in seen:
            raise ValidationError(f"duplicate branch {frm}-{to} id {bid!r}", branch=bid)
        seen.add(key)
        out.append(Branch(bid, lookup[frm], lookup[to]))
    return GridTopology(buses, tuple(out))


def parse_topology(doc: dict) -> GridTopology:
    try:
        labels = [b["label"] for b in doc["buses"]]
        branches = [(br["from"], br["to"], br["id"]) for br in doc["branches"]]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed topology document: missing {exc}") from exc
    return build_topology(labels, branches)


def load_topology(path) -> GridTopology:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"{path}: not valid JSON ({exc})") from exc
    return parse_topology(doc)


def save_topology(topo: GridTopology, path) -> None:
    Path(path).write_text(json.dumps(topo.to_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Power flow snapshot
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerFlowSnapshot:
    """Measured operating point keyed to a topology.

    Branch arrays follow topology branch order and are oriented as the
    topology stores each branch (``p_from`` is the flow leaving ``from_bus``).
    No symmetrization is applied: lossy lines keep ``p_from != -p_to``.
    """

    p_from: np.ndarray
    p_to: np.ndarray
    q_from: np.ndarray
    q_to: np.ndarray
    v: np.ndarray
    phi: np.ndarray
    pg: np.ndarray
    qg: np.ndarray
    pl: np.ndarray
    ql: np.ndarray
    g: np.ndarray | None = None
    b: np.ndarray | None = None

    def __post_init__(self):
        for name in ("p_from", "p_to", "q_from", "q_to", "v", "phi", "pg", "qg", "pl", "ql"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("g", "b"):
            if getattr(self, name) is not None:
                object.__setattr__(self, name, _frozen(getattr(self, name)))
        if np.any(~(self.v > 0)):
            bad = int(np.flatnonzero(~(self.v > 0))[0])
            raise ValidationError(f"voltage magnitude at bus index {bad} must be > 0", bus=bad)
        n_br = len(self.p_from)
        if not (len(self.p_to) == len(self.q_from) == len(self.q_to) == n_br):
            raise ValidationError("branch flow arrays differ in length")
        n = len(self.v)
        for name in ("phi", "pg", "qg", "pl", "ql"):
            if len(getattr(self, name)) != n:
                raise ValidationError(f"bus array {name} has wrong length")
        if (self.g is None) != (self.b is None):
            raise ValidationError("admittance requires both G and B")
        if self.g is not None and (self.g.shape != (n, n) or self.b.shape != (n, n)):
            raise ValidationError("admittance matrices must be N_B x N_B")

    @property
    def has_admittance(self) -> bool:
        return self.g is not None

    def flows(self, topo: GridTopology, i: int, j: int) -> list[tuple[float, float, float, float]]:
        """Directed flows ``(P_ij, P_ji, Q_ij, Q_ji)`` for every branch joining i and j."""
        out = []
        for br, rev in topo.branches_between(i, j):
            pos = topo.branches.index(br)
            pf, pt, qf, qt = self.p_from[pos], self.p_to[pos], self.q_from[pos], self.q_to[pos]
            out.append((pt, pf, qt, qf) if rev else (pf, pt, qf, qt))
        return out


def _parse_float(text: str, what: str) -> float:
    if text is None or text.strip() == "":
        raise MissingRecordError(f"missing value for {what}")
    try:
        return float(text)
    except ValueError as exc:
        raise ParseError(f"cannot parse {text!r} as a number for {what}") from exc


def _read_csv(path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError(f"{path}: empty CSV")
    header = [h.strip() for h in reader.fieldnames]
    reader.fieldnames = header
    rows = list(reader)
    return header, rows


def default_bus_table_path(flow_path) -> Path:
    flow_path = Path(flow_path)
    return flow_path.with_name(flow_path.stem + "_buses" + flow_path.suffix)


def load_flow_snapshot(path, topo: GridTopology, bus_path=None) -> PowerFlowSnapshot:
    """Read a branch flow CSV and its bus table CSV.

    The bus table defaults to ``<stem>_buses.csv`` next to the flow file.
    """
    header, rows = _read_csv(path)
    missing = [c for c in FLOW_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"{path}: flow CSV lacks columns {missing}")

    n_br = len(topo.branches)
    vals = np.full((4, n_br), np.nan)
    seen = set()
    for row in rows:
        bid = (row.get("branch_id") or "").strip()
        pos, br = topo.branch_by_id(bid)
        if bid in seen:
            raise ValidationError(f"duplicate flow record for branch {bid!r}", branch=bid)
        seen.add(bid)
        frm, to = (row.get("from") or "").strip(), (row.get("to") or "").strip()
        if (frm, to) == (br.from_bus.label, br.to_bus.label):
            reverse = False
        elif (frm, to) == (br.to_bus.label, br.from_bus.label):
            reverse = True
        else:
            raise ValidationError(f"flow record for {bid!r} names buses {frm}-{to}", branch=bid)
        pf = _parse_float(row.get("P_from_MW"), f"P_from_MW of {bid}")
        qf = _parse_float(row.get("Q_from_Mvar"), f"Q_from_Mvar of {bid}")
        pt = _parse_float(row.get("P_to_MW"), f"P_to_MW of {bid}")
        qt = _parse_float(row.get("Q_to_Mvar"), f"Q_to_Mvar of {bid}")
        if reverse:
            pf, pt, qf, qt = pt, pf, qt, qf
        vals[:, pos] = (pf, pt, qf, qt)
    absent = [br.id for br in topo.branches if br.id not in seen]
    if absent:
        raise MissingRecordError(f"no flow record for branches {absent}", branches=absent)

    bus_path = default_bus_table_path(path) if bus_path is None else Path(bus_path)
    bus = _load_bus_table(bus_path, topo)
    return PowerFlowSnapshot(vals[0], vals[1], vals[2], vals[3], **bus)


def _load_bus_table(path, topo: GridTopology) -> dict:
    header, rows = _read_csv(path)
    missing = [c for c in BUS_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"{path}: bus table lacks columns {missing}")
    n = topo.n_buses
    g_cols = [f"G_{lab}" for lab in topo.labels]
    b_cols = [f"B_{lab}" for lab in topo.labels]
    has_y = any(c.startswith("G_") or c.startswith("B_") for c in header)
    if has_y and not all(c in header for c in g_cols + b_cols):
        raise ParseError(f"{path}: admittance columns must cover every bus as G_<bus> and B_<bus>")

    cols = np.full((6, n), np.nan)
    g = np.zeros((n, n)) if has_y else None
    b = np.zeros((n, n)) if has_y else None
    seen = set()
    for row in rows:
        label = (row.get("bus") or "").strip()
        i = topo.index_of(label)
        if i in seen:
            raise ValidationError(f"duplicate bus record {label!r}", label=label)
        seen.add(i)
        for r, name in enumerate(BUS_COLUMNS[1:]):
            cols[r, i] = _parse_float(row.get(name), f"{name} of {label}")
        if cols[0, i] <= 0:
            raise ValidationError(f"voltage magnitude at {label} is {cols[0, i]}, must be > 0", label=label)
        if has_y:
            for j in range(n):
                g[i, j] = _parse_float(row.get(g_cols[j]), f"{g_cols[j]} of {label}")
                b[i, j] = _parse_float(row.get(b_cols[j]), f"{b_cols[j]} of {label}")
    absent = [topo.labels[i] for i in range(n) if i not in seen]
    if absent:
        raise MissingRecordError(f"no bus record for {absent}", buses=absent)
    return dict(v=cols[0], phi=cols[1], pg=cols[2], qg=cols[3], pl=cols[4], ql=cols[5], g=g, b=b)


def save_flow_snapshot(snap: PowerFlowSnapshot, topo: GridTopology, path, bus_path=None) -> None:
    """Write the two CSV files; ``repr`` floats keep the round trip lossless."""
    path = Path(path)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FLOW_COLUMNS)
    for pos, br in enumerate(topo.branches):
        w.writerow([
            br.id, br.from_bus.label, br.to_bus.label,
            repr(float(snap.p_from[pos])), repr(float(snap.q_from[pos])),
            repr(float(snap.p_to[pos])), repr(float(snap.q_to[pos])),
        ])
    path.write_text(buf.getvalue(), encoding="utf-8")

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = list(BUS_COLUMNS)
    if snap.has_admittance:
        head += [f"G_{lab}" for lab in topo.labels] + [f"B_{lab}" for lab in topo.labels]
    w.writerow(head)
    for i, lab in enumerate(topo.labels):
        row = [lab] + [repr(float(a[i])) for a in (snap.v, snap.phi, snap.pg, snap.qg, snap.pl, snap.ql)]
        if snap.has_admittance:
            row += [repr(float(x)) for x in snap.g[i]] + [repr(float(x)) for x in snap.b[i]]
        w.writerow(row)
    bus_path = default_bus_table_path(path) if bus_path is None else Path(bus_path)
    bus_path.write_text(buf.getvalue(), encoding="utf-8")


@dataclass
class SnapshotDiagnostics:
    loss_flags: list[str]
    total_pg: float
    total_pl: float
    total_qg: float
    total_ql: float
    connected: bool
    n_components: int

    @property
    def system_dp(self) -> float:
        return self.total_pg - self.total_pl

    def to_dict(self) -> dict:
        return {
            "loss_flags": list(self.loss_flags),
            "total_PG_MW": self.total_pg,
            "total_PL_MW": self.total_pl,
            "total_QG_Mvar": self.total_qg,
            "total_QL_Mvar": self.total_ql,
            "connected": self.connected,
            "n_components": self.n_components,
        }


def validate_snapshot(
    snap: PowerFlowSnapshot, topo: GridTopology, rel_tol: float = 0.1, abs_tol: float = 1e-6
) -> SnapshotDiagnostics:
    """Line-loss sanity and system totals. Never raises.

    A branch is flagged when ``|P_ij + P_ji| > rel_tol * max(|P_ij|, |P_ji|) + abs_tol``;
    real lines lose a few percent at most, so same-sign flows always trip it.
    """
    flags = []
    for pos, br in enumerate(topo.branches):
        pf, pt = snap.p_from[pos], snap.p_to[pos]
        if abs(pf + pt) > rel_tol * max(abs(pf), abs(pt)) + abs_tol:
            flags.append(br.id)
    comps = topo.components()
    return SnapshotDiagnostics(
        loss_flags=flags,
        total_pg=math.fsum(snap.pg),
        total_pl=math.fsum(snap.pl),
        total_qg=math.fsum(snap.qg),
        total_ql=math.fsum(snap.ql),
        connected=len(comps) <= 1,
        n_components=len(comps),
    )


# ---------------------------------------------------------------------------
# Waveforms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WaveformSet:
    """Per-bus phase angle series on a uniform time grid.

    ``theta`` has shape ``(n_buses, n_samples)``.
    """

    labels: tuple[str, ...]
    dt: float
    theta: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        theta = _frozen(np.atleast_2d(self.theta))
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "labels", tuple(self.labels))
        if theta.shape[0] != len(self.labels):
            raise ValidationError("one angle series per label required")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("duplicate waveform labels")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValidationError(f"sample interval must be > 0, got {self.dt}")
        if theta.shape[1] < 3:
            raise ValidationError(f"at least 3 samples required, got {theta.shape[1]}")

    @property
    def n_samples(self) -> int:
        return self.theta.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def reorder(self, labels) -> "WaveformSet":
        """Rows permuted to ``labels`` order (typically topology order)."""
        pos = {lab: k for k, lab in enumerate(self.labels)}
        missing = [lab for lab in labels if lab not in pos]
        if missing:
            raise MissingRecordError(f"no waveform for buses {missing}", buses=missing)
        idx = [pos[lab] for lab in labels]
        return WaveformSet(tuple(labels), self.dt, self.theta[idx], self.t0)


def load_waveforms(path, jitter_tol: float = 1e-9) -> WaveformSet:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    rows = [r for r in csv.reader(io.StringIO(text)) if r]
    if not rows:
        raise ParseError(f"{path}: empty waveform file")
    header = [h.strip() for h in rows[0]]
    if not header or header[0] != "t" or len(header) < 2:
        raise ParseError(f"{path}: header must be 't,<bus1>,<bus2>,...'")
    labels = header[1:]
    series: list[list[float]] = [[] for _ in header]
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) > len(header):
            raise ParseError(f"{path}:{lineno}: more cells than header columns")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                series[c].append(float(cell))
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: cannot parse {cell!r}") from exc
    lengths = {lab: len(s) for lab, s in zip(header, series)}
    if len(set(lengths.values())) != 1:
        raise RaggedSeriesError(f"{path}: series lengths differ: {lengths}", lengths=lengths)
    t = np.array(series[0])
    if len(t) < 3:
        raise ValidationError(f"{path}: at least 3 samples required, got {len(t)}")
    dt = (t[-1] - t[0]) / (len(t) - 1)
    if not dt > 0:
        raise NonUniformGridError(f"{path}: time axis must increase")
    jitter = float(np.max(np.abs(np.diff(t) - dt)) / dt)
    if jitter > jitter_tol:
        raise NonUniformGridError(
            f"{path}: nonuniform time grid (relative jitter {jitter:.3g} > {jitter_tol:g})", jitter=jitter
        )
    return WaveformSet(tuple(labels), float(dt), np.array(series[1:]), float(t[0]))


def save_waveforms(w: WaveformSet, path) -> None:
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["t", *w.labels])
    for k, t in enumerate(w.times):
        out.writerow([repr(float(t)), *(repr(float(x)) for x in w.theta[:, k])])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
