"""Tessellation of pipeline stages, the parameter schedule and mesh export."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, asdict
import json
import math
import os
from pathlib import Path
import warnings

import numpy as np

from .errors import DomainError, EverseError, ScheduleError, SmoothnessError
from .smoothness import normal_vector, precheck, smoothness_margin
from .surface import (
    StageParams, SurfaceParams, damp_jacobian, damp_map, family_point, family_tangents,
    inversion_jacobian, pipeline, pipeline_open, pipeline_tangents,
)

MANIFEST_SCHEMA = 1
DEFAULT_RESOLUTION = (128, 402)
DEFAULT_H = 3.0


@dataclass
class MeshFrame:
    vertices: np.ndarray
    normals: np.ndarray
    triangles: np.ndarray
    stage: StageParams = None
    label: str = ""
    mode: str = "closed"

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.normals = np.asarray(self.normals, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= len(self.vertices)):
            raise ValueError("triangle index out of range")
        if not np.all(np.isfinite(self.vertices)):
            raise ValueError("mesh has non-finite vertices")

    def edge_lengths(self):
        T = self.vertices[self.triangles]
        return np.linalg.norm(T - np.roll(T, 1, axis=1), axis=-1)

    def max_edge(self):
        return float(self.edge_lengths().max())

    def bbox_diagonal(self):
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def _grid_triangles(rows, cols, index):
    """Two triangles (a, d, b), (b, d, c) per quad; a = (i, j), b = (i, j+1), c = (i+1, j+1), d = (i+1, j)."""
    i, j = np.meshgrid(np.arange(rows - 1), np.arange(cols), indexing="ij")
    jn = (j + 1) % cols
    a, b = index[i, j], index[i, jn]
    c, d = index[i + 1, jn], index[i + 1, j]
    t1 = np.stack([a, d, b], axis=-1).reshape(-1, 3)
    t2 = np.stack([b, d, c], axis=-1).reshape(-1, 3)
    return np.stack([t1, t2], axis=1).reshape(-1, 3)


def _closed_normals(stage, th, ph):
    if stage.n % 2 == 1 and stage.epsilon > 0:
        # the smoothed pipeline differs from the plain chain; differentiate it directly
        e = 1e-6
        a = (pipeline(stage, th + e, ph) - pipeline(stage, th - e, ph)) / (2 * e)
        b = (pipeline(stage, th, ph + e) - pipeline(stage, th, ph - e)) / (2 * e)
    else:
        a, b = pipeline_tangents(stage, th, ph)
    return np.cross(a, b)


def open_tangents(stage, h, phi):
    r = family_point(stage.surface, h, phi)
    r_h, r_phi = family_tangents(stage.surface, h, phi)
    J = inversion_jacobian(damp_map(r, stage), stage) @ damp_jacobian(r, stage)
    return (np.einsum("...ij,...j->...i", J, r_h), np.einsum("...ij,...j->...i", J, r_phi))


def is_boy_half(stage):
    return stage.n % 2 == 1 and stage.t == 0


def tessellate(stage, rows=DEFAULT_RESOLUTION[0], cols=DEFAULT_RESOLUTION[1], mode="closed",
               H=DEFAULT_H, check=True, label=""):
    """Triangle mesh of one stage.

    mode "closed": (theta, phi) grid through the full pipeline, poles collapsed
    to single vertices, (rows - 2) * cols + 2 vertices.
    mode "open": (h, phi) grid, h in [-H, H], through damping and inversion.
    mode "raw": (h, phi) grid of the ruled surface itself.
    For odd n at t = 0 the open/raw grids cover h in [0, H] only, with the h = 0
    row welded to itself across phi -> phi + pi (the surface is doubly covered).
    """
    if rows < 3 or cols < 3:
        raise DomainError(f"need rows >= 3 and cols >= 3, got {rows} x {cols}")
    if mode not in ("closed", "open", "raw"):
        raise ValueError(f"unknown tessellation mode {mode!r}")
    if check:
        try:
            precheck(stage)
        except SmoothnessError:
            raise
    phi = -np.pi + 2 * np.pi * np.arange(cols) / cols
    if mode == "closed":
        theta = -np.pi / 2 + np.pi * np.arange(1, rows - 1) / (rows - 1)
        th, ph = np.meshgrid(theta, phi, indexing="ij")
        body = pipeline(stage, th, ph)
        nb = _unit(_closed_normals(stage, th, ph))
        south = pipeline(stage, -np.pi / 2, 0.0)
        north = pipeline(stage, np.pi / 2, 0.0)
        m = rows - 2
        V = np.concatenate([south[None], body.reshape(-1, 3), north[None]])
        idx = 1 + np.arange(m * cols).reshape(m, cols)
        tris = [_grid_triangles(m, cols, idx)] if m > 1 else []
        j = np.arange(cols)
        jn = (j + 1) % cols
        tris.insert(0, np.stack([np.zeros(cols, np.int64), idx[0, j], idx[0, jn]], axis=-1))
        N_id = len(V) - 1
        tris.append(np.stack([idx[-1, j], np.full(cols, N_id), idx[-1, jn]], axis=-1))
        F = np.concatenate(tris)
        ns = np.array([0.0, 0.0, np.sign(nb[0, :, 2].sum()) or 1.0])
        nn = np.array([0.0, 0.0, np.sign(nb[-1, :, 2].sum()) or 1.0])
        N = np.concatenate([ns[None], nb.reshape(-1, 3), nn[None]])
        return MeshFrame(V, N, F, stage, label, mode)

    half = is_boy_half(stage)
    if half and cols % 2:
        raise DomainError("the welded half-domain grid needs an even column count")
    h = np.linspace(0.0 if half else -H, H, rows)
    hh, ph = np.meshgrid(h, phi, indexing="ij")
    if mode == "raw":
        V = family_point(stage.surface, hh, ph)
        N = normal_vector(stage.surface, hh, ph)
    else:
        V = pipeline_open(stage, hh, ph)
        a, b = open_tangents(stage, hh, ph)
        N = np.cross(a, b)
    N = _unit(N)
    idx = np.arange(rows * cols).reshape(rows, cols)
    V = V.reshape(-1, 3)
    N = N.reshape(-1, 3)
    if half:
        k = cols // 2
        idx = idx.copy()
        idx[0, k:] = idx[0, :k]
        used = np.unique(idx)
        remap = np.full(rows * cols, -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        F = remap[_grid_triangles(rows, cols, idx)]
        return MeshFrame(V[used], N[used], F, stage, label, mode)
    return MeshFrame(V, N, _grid_triangles(rows, cols, idx), stage, label, mode)


def signed_volume(frame):
    T = frame.vertices[frame.triangles]
    return float(np.einsum("ij,ij->i", T[:, 0], np.cross(T[:, 1], T[:, 2])).sum() / 6.0)


def max_displacement(a, b):
    if a.vertices.shape != b.vertices.shape:
        raise ValueError("frames have different vertex counts")
    return float(np.max(np.linalg.norm(a.vertices - b.vertices, axis=-1)))


# ---------------------------------------------------------------- export

def export_mesh(frame, fmt="obj"):
    fmt = fmt.lower()
    if fmt == "obj":
        out = [f"# {frame.label}\n" if frame.label else ""]
        out += ["v %.17g %.17g %.17g\n" % tuple(v) for v in frame.vertices.tolist()]
        out += ["vn %.17g %.17g %.17g\n" % tuple(v) for v in frame.normals.tolist()]
        out += ["f %d//%d %d//%d %d//%d\n" % (a, a, b, b, c, c)
                for a, b, c in (frame.triangles + 1).tolist()]
        return "".join(out).encode("ascii")
    if fmt == "ply":
        nv, nf = len(frame.vertices), len(frame.triangles)
        header = ("ply\nformat binary_little_endian 1.0\n"
                  f"element vertex {nv}\n"
                  "property double x\nproperty double y\nproperty double z\n"
                  "property double nx\nproperty double ny\nproperty double nz\n"
                  f"element face {nf}\n"
                  "property list uchar uint vertex_indices\nend_header\n").encode("ascii")
        vert = np.concatenate([frame.vertices, frame.normals], axis=1).astype("<f8")
        faces = np.zeros(nf, dtype=[("n", "u1"), ("i", "<u4", (3,))])
        faces["n"] = 3
        faces["i"] = frame.triangles
        return header + vert.tobytes() + faces.tobytes()
    raise ValueError(f"unsupported format {fmt!r}")


def read_ply(data):
    """Read back what export_mesh writes: (vertices, normals, triangles)."""
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    if "format binary_little_endian 1.0" not in header:
        raise ValueError("only binary little-endian PLY is supported")
    nv = nf = None
    for line in header:
        if line.startswith("element vertex"):
            nv = int(line.split()[-1])
        elif line.startswith("element face"):
            nf = int(line.split()[-1])
    vert = np.frombuffer(data, dtype="<f8", count=6 * nv, offset=end).reshape(nv, 6)
    faces = np.frombuffer(data, dtype=[("n", "u1"), ("i", "<u4", (3,))], count=nf,
                          offset=end + 48 * nv)
    if np.any(faces["n"] != 3):
        raise ValueError("only triangles are supported")
    return vert[:, :3].copy(), vert[:, 3:].copy(), faces["i"].astype(np.int64)


def read_obj_vertices(text):
    return np.array([[float(v) for v in line.split()[1:4]]
                     for line in text.splitlines() if line.startswith("v ")])


# ---------------------------------------------------------------- schedule

ROW_FIELDS = ("t", "q", "xi", "eta", "alpha", "beta", "lam", "omega")


@dataclass(frozen=True)
class ScheduleRow:
    name: str
    t: float
    q: float
    xi: float
    eta: float
    alpha: float
    beta: float
    lam: float
    omega: float

    def values(self):
        return np.array([getattr(self, f) for f in ROW_FIELDS], dtype=float)

    def to_dict(self):
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class Leg:
    start: int
    end: int
    sign: float      # sign of t on this leg; 0 marks the t sweep
    name: str


@dataclass
class StageSchedule:
    """Rows of parameters connected by linear legs.

    Row 0 is the t sweep row; the remaining rows are visited at t = -|t| going
    up the table before the sweep and at t = +|t| coming back down after it.
    With the four default rows this gives 3 + 1 + 3 legs.
    """
    rows: list
    frames_per_leg: int = 60
    Q: float = 2.0 / 3.0
    n: int = 2
    direction: str = "forward"
    epsilon: float = 1e-4
    couple_p: bool = True

    @property
    def amplitude(self):
        return self.rows[0].t

    def sweep_range(self):
        T = self.amplitude
        return (-T, T) if self.direction == "forward" else (T, -T)

    def legs(self):
        m = len(self.rows)
        out = [Leg(k, k - 1, -1.0, f"{self.rows[k].name} -> {self.rows[k - 1].name}")
               for k in range(m - 1, 0, -1)]
        out.append(Leg(0, 0, 0.0, f"{self.rows[0].name}: t sweep"))
        out += [Leg(k, k + 1, 1.0, f"{self.rows[k].name} -> {self.rows[k + 1].name}")
                for k in range(m - 1)]
        return out

    @property
    def frame_count(self):
        return len(self.legs()) * self.frames_per_leg + 1

    def _forward_frame(self, k):
        legs = self.legs()
        F = self.frames_per_leg
        li = min(k // F, len(legs) - 1)
        u = (k - li * F) / F
        leg = legs[li]
        a, b = self.rows[leg.start].values(), self.rows[leg.end].values()
        v = dict(zip(ROW_FIELDS, a + (b - a) * u))
        if leg.sign == 0:
            T = self.amplitude
            v["t"] = -T + 2 * T * u
        else:
            v["t"] = leg.sign * v["t"]
        if u == 0:
            label = self.rows[leg.start].name if leg.sign else f"{self.rows[0].name} t={v['t']:.6g}"
        elif leg.sign == 0:
            label = f"{self.rows[0].name} t={v['t']:.6g}"
        else:
            label = f"{leg.name} ({u:.4f})"
        if k == self.frame_count - 1 and leg.sign:
            label = self.rows[leg.end].name
        return v, label, li

    def frame(self, k):
        """(StageParams, label, leg index) of frame k."""
        N = self.frame_count
        if not 0 <= k < N:
            raise IndexError(k)
        v, label, li = self._forward_frame(k if self.direction == "forward" else N - 1 - k)
        t, q = v["t"], v["q"]
        p = max(0.0, 1.0 - abs(q * t)) if self.couple_p else 1.0
        stage = StageParams(surface=SurfaceParams(n=self.n, t=t, p=p, q=q), xi=v["xi"],
                            eta=v["eta"], alpha=v["alpha"], beta=v["beta"], omega=v["omega"],
                            lam=float(np.clip(v["lam"], 0.0, 1.0)), epsilon=self.epsilon)
        return stage, label, li

    def stages(self):
        return [self.frame(k)[0] for k in range(self.frame_count)]

    def validate(self):
        for k in range(self.frame_count):
            try:
                stage = self.frame(k)[0]
            except (EverseError, ValueError) as e:
                raise ScheduleError(f"frame {k}: {e}", frame=k) from e
            m = smoothness_margin(stage.surface).value
            if m <= 0:
                raise ScheduleError(f"frame {k}: smoothness margin {m:.3g} <= 0", frame=k)
        return self

    def to_dict(self):
        return {"rows": [r.to_dict() for r in self.rows], "frames_per_leg": self.frames_per_leg,
                "Q": self.Q, "n": self.n, "direction": self.direction, "epsilon": self.epsilon}


def default_rows(Q=2.0 / 3.0, beta=1.0, omega=2.0, eta=1.0):
    T = 1.0 / Q
    base = dict(t=T, q=0.0, xi=1.0, eta=eta, alpha=1.0, beta=beta, lam=1.0, omega=omega)
    rows = [ScheduleRow("closed wormhole", **base)]
    base["q"] = Q
    rows.append(ScheduleRow("unfolded wormhole", **base))
    base.update(xi=0.0, eta=1.0, alpha=0.0)
    rows.append(ScheduleRow("inverted wormhole", **base))
    base["lam"] = 0.0
    rows.append(ScheduleRow("sphere", **base))
    return rows


def default_schedule(frames_per_leg=60, Q=2.0 / 3.0, n=2, direction="forward", epsilon=1e-4):
    return parse_schedule({"rows": [r.to_dict() for r in default_rows(Q)],
                           "frames_per_leg": frames_per_leg, "Q": Q, "n": n,
                           "direction": direction, "epsilon": epsilon})


def parse_schedule(document):
    """Validate a schedule document (dict, JSON text, path, or the string "default")."""
    if isinstance(document, str) and document == "default":
        return default_schedule()
    if isinstance(document, (str, Path)):
        text = str(document)
        if not text.lstrip().startswith("{"):
            text = Path(text).read_text()
        try:
            document = json.loads(text)
        except json.JSONDecodeError as e:
            raise ScheduleError(f"schedule is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise ScheduleError("schedule must be a JSON object")
    unknown = set(document) - {"rows", "frames_per_leg", "Q", "n", "direction", "epsilon"}
    if unknown:
        raise ScheduleError(f"unknown schedule keys: {sorted(unknown)}")
    raw_rows = document.get("rows")
    if not isinstance(raw_rows, list) or not raw_rows:
        raise ScheduleError("schedule needs a non-empty 'rows' list")
    Q = document.get("Q", 2.0 / 3.0)
    fpl = document.get("frames_per_leg", 60)
    if not isinstance(fpl, int) or isinstance(fpl, bool) or fpl < 1:
        raise ScheduleError("frames_per_leg must be a positive integer")
    n = document.get("n", 2)
    if not isinstance(n, int) or n < 2:
        raise ScheduleError("n must be an integer >= 2")
    direction = document.get("direction", "forward")
    if direction not in ("forward", "reverse"):
        raise ScheduleError("direction must be 'forward' or 'reverse'")
    rows = []
    for i, r in enumerate(raw_rows):
        if not isinstance(r, dict):
            raise ScheduleError(f"row {i} is not an object")
        r = dict(r)
        if "lambda" in r:
            r["lam"] = r.pop("lambda")
        r.setdefault("t", 1.0 / Q)
        missing = [f for f in ("name",) + ROW_FIELDS if f not in r]
        extra = set(r) - {"name", *ROW_FIELDS}
        if missing or extra:
            raise ScheduleError(f"row {i}: missing {missing}, unknown {sorted(extra)}")
        try:
            vals = {f: float(r[f]) for f in ROW_FIELDS}
        except (TypeError, ValueError) as e:
            raise ScheduleError(f"row {i}: non-numeric field") from e
        if not all(math.isfinite(v) for v in vals.values()):
            raise ScheduleError(f"row {i}: non-finite field")
        if vals["alpha"] == 0 and vals["xi"] == 0 and abs(vals["t"]) <= 1:
            raise ScheduleError(f"row {i} ({r['name']}): alpha = xi = 0 with |t| <= 1 is forbidden")
        if min(vals["q"], vals["xi"], vals["eta"], vals["alpha"], vals["beta"]) < 0:
            raise ScheduleError(f"row {i}: q, xi, eta, alpha, beta must be >= 0")
        if vals["omega"] <= 0 or not 0 <= vals["lam"] <= 1:
            raise ScheduleError(f"row {i}: need omega > 0 and lambda in [0, 1]")
        rows.append(ScheduleRow(name=str(r["name"]), **vals))
    if rows[0].t <= 0:
        raise ScheduleError("the sweep row needs |t| > 0")
    for i, r in enumerate(rows[1:], 1):
        if r.t != rows[0].t:
            raise ScheduleError(f"row {i}: legs after the sweep run at fixed |t| = {rows[0].t}, "
                                f"got {r.t}")
        if np.array_equal(r.values(), rows[i - 1].values()):
            raise ScheduleError(f"rows {i - 1} and {i} are identical; a leg must change something")
    names = [r.name for r in rows]
    if len(set(names)) != len(names):
        raise ScheduleError("row names must be unique")
    sched = StageSchedule(rows=rows, frames_per_leg=fpl, Q=float(Q), n=n, direction=direction,
                          epsilon=float(document.get("epsilon", 1e-4)))
    return sched.validate()


# ---------------------------------------------------------------- frame sequence

def thread_count(threads=None):
    if threads is None:
        threads = int(os.environ.get("EVERSE_THREADS", "1") or 1)
    return max(1, int(threads))


def frame_events(schedule, timeline):
    """Map frame index -> events whose time falls in [t_k, t_{k+1}) along the sweep."""
    out = {}
    ts = []
    for k in range(schedule.frame_count):
        stage, _, li = schedule.frame(k)
        ts.append((k, stage.t, schedule.legs()[li].sign == 0 if schedule.direction == "forward"
                   else schedule.legs()[len(schedule.legs()) - 1 - li].sign == 0))
    sweep = [(k, t) for k, t, s in ts if s]
    # include the closing frame of the sweep leg
    if sweep:
        last = sweep[-1][0] + 1
        if last < schedule.frame_count:
            sweep.append((last, schedule.frame(last)[0].t))
    for e in timeline:
        for (k, ta), (_, tb) in zip(sweep, sweep[1:]):
            lo, hi = min(ta, tb), max(ta, tb)
            if lo <= e.t < hi or (e.t == hi and (k, ta) == sweep[-2]):
                out.setdefault(k, []).append(e.to_dict())
                break
    return out


def frame_sequence(schedule, out_dir, fmt="obj", rows=DEFAULT_RESOLUTION[0],
                   cols=DEFAULT_RESOLUTION[1], threads=None, extra_d1_t=None):
    """Write one mesh per frame plus manifest.json; returns the list of written paths."""
    from .events import event_timeline

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ext = fmt.lower()
    N = schedule.frame_count
    width = max(5, len(str(N - 1)))

    def work(k):
        stage, label, li = schedule.frame(k)
        try:
            frame = tessellate(stage, rows, cols, label=label)
        except SmoothnessError as e:
            raise SmoothnessError(f"frame {k}: {e}", e.report) from e
        path = out / f"frame_{k:0{width}d}.{ext}"
        path.write_bytes(export_mesh(frame, ext))
        return path, stage, label, li

    n_threads = thread_count(threads)
    if n_threads == 1:
        results = [work(k) for k in range(N)]
    else:
        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            results = list(pool.map(work, range(N)))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        timeline = event_timeline(schedule, extra_d1_t=extra_d1_t)
    ev = frame_events(schedule, timeline)
    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "format": ext,
        "resolution": [rows, cols],
        "schedule": schedule.to_dict(),
        "frames": [{"index": k, "file": p.name, "label": label, "leg": li,
                    "stage": stage.as_dict(), "events": ev.get(k, [])}
                   for k, (p, stage, label, li) in enumerate(results)],
        "timeline": [e.to_dict() for e in timeline],
    }
    mpath = out / "manifest.json"
    mpath.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return [p for p, *_ in results] + [mpath]
