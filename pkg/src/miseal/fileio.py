"""Versioned plain-text codecs for grids, patterns, traces and reports.

Every format starts with a magic line naming the format and version.
Floats are written with 17 significant digits so that float64 values
survive a write/read cycle exactly; excluded raster cells are written
as the token ``X``.  Grids beyond 4 million cells switch to a binary
variant with the same text header, a little-endian unsigned 64-bit
length prefix and little-endian float64 payload.  Coordinates are
pixels throughout; ``pixel_size`` rides along in headers for later
physical conversion but never enters any computation.
"""

import io
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError
from .grids import OrientationGrid, RegionOfInterest, ScalarGrid
from .inference import MOVE_NAMES

BINARY_CELL_THRESHOLD = 4_000_000
UNKNOWN_LABEL = -1

_KINDS = ("orientation", "scalar", "mask")


def _fmt(x):
    return format(float(x), ".17g")


def _open_text(path, mode):
    return open(path, mode, encoding="ascii", newline="\n")


# ---------------------------------------------------------------------------
# FIELDGRID


def _grid_payload(obj, kind):
    if kind == "orientation":
        return obj.angles(), obj.roi
    if kind == "scalar":
        return obj.values, obj.roi
    if kind == "mask":
        return obj.mask.astype(float), obj
    raise ValueError(f"unknown grid kind {kind!r}")


def grid_kind(obj):
    """Format kind of a raster object."""
    if isinstance(obj, OrientationGrid):
        return "orientation"
    if isinstance(obj, ScalarGrid):
        return "scalar"
    if isinstance(obj, RegionOfInterest):
        return "mask"
    raise ValueError(f"not a raster object: {type(obj).__name__}")


def write_fieldgrid(path, obj, binary=None):
    """Write an orientation grid, scalar grid or mask to ``path``.

    ``binary=None`` selects the binary variant automatically for grids
    above 4 million cells.
    """
    kind = grid_kind(obj)
    values, roi = _grid_payload(obj, kind)
    height, width = roi.shape
    if binary is None:
        binary = width * height > BINARY_CELL_THRESHOLD
    header = (f"FIELDGRID v1{' binary' if binary else ''}\n"
              f"{width} {height} {_fmt(roi.pixel_size)}\n"
              f"{kind}\n")
    if binary:
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(struct.pack("<Q", width * height))
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
        return
    with _open_text(path, "w") as fh:
        fh.write(header)
        for row in values:
            fh.write(" ".join("X" if not np.isfinite(v) else _fmt(v)
                              for v in row))
            fh.write("\n")


def _parse_header(line2, line3):
    parts = line2.split()
    if len(parts) != 3:
        raise FormatError("grid header needs 'width height pixel_size'")
    try:
        width, height = int(parts[0]), int(parts[1])
        pixel_size = float(parts[2])
    except ValueError as exc:
        raise FormatError(f"bad grid header: {line2!r}") from exc
    kind = line3.strip()
    if kind not in _KINDS:
        raise FormatError(f"unknown grid kind {kind!r}")
    if width < 1 or height < 1 or pixel_size <= 0:
        raise FormatError("grid dimensions must be positive")
    return width, height, pixel_size, kind


def read_fieldgrid(path):
    """Read a FIELDGRID file back into the matching raster object.

    Returns an OrientationGrid, ScalarGrid or RegionOfInterest
    depending on the stored kind.  The origin is always (0, 0); files
    carry no origin field.
    """
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", "replace").strip()
        if magic not in ("FIELDGRID v1", "FIELDGRID v1 binary"):
            raise FormatError(f"not a FIELDGRID v1 file: {magic!r}")
        line2 = fh.readline().decode("ascii", "replace")
        line3 = fh.readline().decode("ascii", "replace")
        width, height, pixel_size, kind = _parse_header(line2, line3)
        if magic.endswith("binary"):
            prefix = fh.read(8)
            if len(prefix) != 8:
                raise FormatError("truncated binary grid: missing length")
            (count,) = struct.unpack("<Q", prefix)
            if count != width * height:
                raise FormatError(
                    f"length prefix {count} does not match {width}x{height}")
            payload = fh.read(8 * count)
            if len(payload) != 8 * count:
                raise FormatError("truncated binary grid payload")
            values = np.frombuffer(payload, dtype="<f8").astype(float)
        else:
            text = fh.read().decode("ascii", "replace")
            tokens = text.split()
            if len(tokens) != width * height:
                raise FormatError(
                    f"expected {width * height} cells, found {len(tokens)}")
            try:
                values = np.array([np.nan if t == "X" else float(t)
                                   for t in tokens])
            except ValueError as exc:
                raise FormatError(f"bad grid cell: {exc}") from None
    values = values.reshape(height, width)
    if kind == "mask":
        try:
            return RegionOfInterest(values == 1.0, pixel_size)
        except ValueError as exc:
            raise FormatError(str(exc)) from None
    finite = np.isfinite(values)
    if not finite.any():
        raise FormatError("grid has no usable cells")
    roi = RegionOfInterest(finite, pixel_size)
    if kind == "orientation":
        return OrientationGrid.from_angles(values, roi)
    return ScalarGrid(values, roi)


# ---------------------------------------------------------------------------
# POINTS


def write_points(path, points, labels=None):
    """Write a point list; optional labels in {1, 0, UNKNOWN_LABEL}."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    n = 0 if pts.size == 0 else len(pts)
    if labels is not None:
        labels = np.asarray(labels)
        if len(labels) != n:
            raise ValueError("labels must match the number of points")
    with _open_text(path, "w") as fh:
        fh.write("POINTS v1\n")
        fh.write(f"{n}\n")
        for i in range(n):
            line = f"{_fmt(pts[i, 0])} {_fmt(pts[i, 1])}"
            if labels is not None:
                tag = "?" if labels[i] == UNKNOWN_LABEL else str(int(labels[i]))
                line += f" {tag}"
            fh.write(line + "\n")


def read_points(path):
    """Read a POINTS file; returns ``(points, labels or None)``."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "POINTS v1":
            raise FormatError(f"not a POINTS v1 file: {magic!r}")
        try:
            n = int(fh.readline().strip())
        except ValueError as exc:
            raise FormatError("point count line is not an integer") from exc
        rows, labels = [], []
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) not in (2, 3):
                raise FormatError(f"point line {i} needs 2 or 3 fields")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise FormatError(f"point line {i}: {exc}") from None
            labels.append(parts[2] if len(parts) == 3 else None)
    if any(l is not None for l in labels):
        if any(l is None for l in labels):
            raise FormatError("labels must be given for all points or none")
        decode = {"0": 0, "1": 1, "?": UNKNOWN_LABEL}
        try:
            labels = np.array([decode[l] for l in labels], dtype=np.int8)
        except KeyError as exc:
            raise FormatError(f"unknown label token {exc.args[0]!r}") from None
    else:
        labels = None
    pts = np.array(rows, dtype=float).reshape(n, 2)
    return pts, labels


# ---------------------------------------------------------------------------
# TRACE / LABELS / WSAMPLES


@dataclass(frozen=True)
class TraceFile:
    """Parameter chain records as stored on disk."""

    t: np.ndarray
    lam: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    move: np.ndarray
    accepted: np.ndarray
    burn_in: int
    iterations: int
    thinning: int
    p_label: float


def write_trace(path, trace):
    """Write the thinned parameter chain of a posterior trace."""
    n = len(trace.t)
    with _open_text(path, "w") as fh:
        fh.write("TRACE v1\n")
        fh.write(f"{n} {trace.burn_in} {trace.iterations} {trace.thinning} "
                 f"{_fmt(trace.p_label)}\n")
        fh.write("t lambda beta gamma move accepted\n")
        for i in range(n):
            fh.write(f"{int(trace.t[i])} {_fmt(trace.lam[i])} "
                     f"{_fmt(trace.beta[i])} {_fmt(trace.gamma[i])} "
                     f"{MOVE_NAMES[int(trace.move[i])]} "
                     f"{int(trace.accepted[i])}\n")


def read_trace(path):
    """Read a TRACE file into a :class:`TraceFile`."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "TRACE v1":
            raise FormatError(f"not a TRACE v1 file: {magic!r}")
        meta = fh.readline().split()
        if len(meta) != 5:
            raise FormatError("trace meta line needs 5 fields")
        try:
            n, burn_in, iterations, thinning = (int(v) for v in meta[:4])
            p_label = float(meta[4])
        except ValueError as exc:
            raise FormatError(f"bad trace meta line: {exc}") from None
        header = fh.readline().split()
        if header != ["t", "lambda", "beta", "gamma", "move", "accepted"]:
            raise FormatError("unexpected trace column header")
        t = np.empty(n, dtype=np.int64)
        lam = np.empty(n)
        beta = np.empty(n)
        gamma = np.empty(n)
        move = np.empty(n, dtype=np.int64)
        accepted = np.empty(n, dtype=bool)
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != 6:
                raise FormatError(f"trace row {i} needs 6 fields")
            try:
                t[i] = int(parts[0])
                lam[i], beta[i], gamma[i] = (float(v) for v in parts[1:4])
            except ValueError as exc:
                raise FormatError(f"trace row {i}: {exc}") from None
            try:
                move[i] = MOVE_NAMES.index(parts[4])
            except ValueError:
                raise FormatError(f"unknown move name {parts[4]!r}") from None
            accepted[i] = parts[5] == "1"
    return TraceFile(t, lam, beta, gamma, move, accepted,
                     burn_in, iterations, thinning, p_label)


def write_labels(path, points, freq):
    """Write per-point label-1 frequencies next to their coordinates."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    freq = np.asarray(freq, dtype=float)
    n = 0 if pts.size == 0 else len(pts)
    if len(freq) != n:
        raise ValueError("frequencies must match the number of points")
    with _open_text(path, "w") as fh:
        fh.write("LABELS v1\n")
        fh.write(f"{n}\n")
        fh.write("i x y freq1\n")
        for i in range(n):
            fh.write(f"{i} {_fmt(pts[i, 0])} {_fmt(pts[i, 1])} "
                     f"{_fmt(freq[i])}\n")


def read_labels(path):
    """Read a LABELS file; returns ``(points, freq1)``."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "LABELS v1":
            raise FormatError(f"not a LABELS v1 file: {magic!r}")
        try:
            n = int(fh.readline().strip())
        except ValueError as exc:
            raise FormatError("label count line is not an integer") from None
        header = fh.readline().split()
        if header != ["i", "x", "y", "freq1"]:
            raise FormatError("unexpected labels column header")
        pts = np.empty((n, 2))
        freq = np.empty(n)
        for i in range(n):
            parts = fh.readline().split()
            try:
                ok = len(parts) == 4 and int(parts[0]) == i
                if ok:
                    pts[i] = (float(parts[1]), float(parts[2]))
                    freq[i] = float(parts[3])
            except ValueError:
                ok = False
            if not ok:
                raise FormatError(f"labels row {i} is malformed")
    return pts, freq


def write_label_samples(path, samples):
    """Write the joint thinned label vectors, one sample per row."""
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError("label samples must be a 2-d array")
    with _open_text(path, "w") as fh:
        fh.write("WSAMPLES v1\n")
        fh.write(f"{samples.shape[0]} {samples.shape[1]}\n")
        for row in samples.astype(int):
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_label_samples(path):
    """Read a WSAMPLES file into an (n_samples, k) int8 array."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "WSAMPLES v1":
            raise FormatError(f"not a WSAMPLES v1 file: {magic!r}")
        parts = fh.readline().split()
        if len(parts) != 2:
            raise FormatError("sample shape line needs 2 fields")
        try:
            n, k = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise FormatError(f"bad sample shape line: {exc}") from None
        out = np.empty((n, k), dtype=np.int8)
        for i in range(n):
            row = fh.readline().split()
            if len(row) != k:
                raise FormatError(f"sample row {i} needs {k} labels")
            try:
                out[i] = [int(v) for v in row]
            except ValueError as exc:
                raise FormatError(f"sample row {i}: {exc}") from None
    if not np.isin(out, (0, 1)).all():
        raise FormatError("label samples must be 0 or 1")
    return out


# ---------------------------------------------------------------------------
# Flat key=value blocks and configuration


def read_config(path):
    """Read a flat key=value file into a string-valued dict."""
    out = {}
    with _open_text(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise FormatError(
                    f"line {lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_config(path, mapping):
    """Write a flat key=value file."""
    with _open_text(path, "w") as fh:
        for key, value in mapping.items():
            fh.write(f"{key}={value}\n")


def format_key_value(magic, mapping):
    """Render a versioned flat key=value block as a string."""
    lines = [magic]
    for key, value in mapping.items():
        if isinstance(value, float):
            value = _fmt(value)
        lines.append(f"{key}={value}")
    return "\n".join(lines) + "\n"


def read_key_value(path):
    """Read a versioned key=value block; returns ``(magic, dict)``."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        body = fh.read()
    mapping = {}
    for line in body.splitlines():
        line = line.strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        mapping[key] = value
    return magic, mapping


def format_regression_result(res):
    """Flat key=value block for a regression fit."""
    return format_key_value("REGRESSION v1", {
        "n_patches": len(res.data),
        "beta0": res.beta0,
        "beta1": res.beta1,
        "se0": res.se0,
        "se1": res.se1,
        "ci0_low": res.ci0[0],
        "ci0_high": res.ci0[1],
        "ci1_low": res.ci1[0],
        "ci1_high": res.ci1[1],
        "p_intercept": res.p_intercept,
        "log_lik": res.log_lik,
    })


def format_histogram(centers, counts, bin_width):
    """Two-column ``bin_center count`` block with the bin width on top."""
    lines = ["HISTOGRAM v1", f"bin_width={_fmt(bin_width)}"]
    for c, k in zip(centers, counts):
        lines.append(f"{_fmt(c)} {int(k)}")
    return "\n".join(lines) + "\n"


def read_histogram(path):
    """Read a histogram block; returns ``(centers, counts, bin_width)``."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "HISTOGRAM v1":
            raise FormatError(f"not a HISTOGRAM v1 file: {magic!r}")
        width_line = fh.readline().strip()
        if not width_line.startswith("bin_width="):
            raise FormatError("histogram needs a bin_width line")
        try:
            bin_width = float(width_line.split("=", 1)[1])
        except ValueError as exc:
            raise FormatError(f"bad bin width: {exc}") from None
        centers, counts = [], []
        for line in fh:
            if not line.strip():
                continue
            parts = line.split()
            try:
                ok = len(parts) == 2
                if ok:
                    centers.append(float(parts[0]))
                    counts.append(int(parts[1]))
            except ValueError:
                ok = False
            if not ok:
                raise FormatError(f"bad histogram row: {line.strip()!r}")
    return np.array(centers), np.array(counts, dtype=np.int64), bin_width


# ---------------------------------------------------------------------------
# Study report


def format_study_report(report):
    """Structured text with one REPLICATE block per run."""
    out = io.StringIO()
    out.write("STUDY v1\n")
    out.write(f"replicates={len(report.replicates)}\n")
    out.write(f"master_seed={report.master_seed}\n")
    for name, value in zip(("lambda", "beta", "gamma"), report.prior_means):
        out.write(f"prior_mean_{name}={_fmt(value)}\n")
    for rep in report.replicates:
        out.write(f"REPLICATE {rep.index}\n")
        for name, i in (("lambda", 0), ("beta", 1), ("gamma", 2)):
            out.write(f"truth_{name}={_fmt(rep.truth[i])}\n")
            out.write(f"mean_{name}={_fmt(rep.posterior_mean[i])}\n")
            out.write(f"interval_{name}_low={_fmt(rep.interval[i][0])}\n")
            out.write(f"interval_{name}_high={_fmt(rep.interval[i][1])}\n")
            out.write(f"covered_{name}={int(rep.covered[i])}\n")
        out.write(f"n_necessary={rep.n_necessary}\n")
        out.write(f"n_random={rep.n_random}\n")
        out.write(f"beta_over={int(rep.beta_over)}\n")
        out.write(f"random_mislabelled={_fmt(rep.random_mislabelled)}\n")
        out.write(f"necessary_mislabelled={_fmt(rep.necessary_mislabelled)}\n")
        for move in MOVE_NAMES:
            out.write(f"acceptance_{move}={_fmt(rep.acceptance[move])}\n")
    return out.getvalue()


def read_study_report(path):
    """Read a study report back into its dataclasses."""
    from .analysis import StudyReplicate, StudyReport

    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if magic != "STUDY v1":
            raise FormatError(f"not a STUDY v1 file: {magic!r}")
        blocks = [{}]
        indices = [None]
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("REPLICATE "):
                blocks.append({})
                indices.append(int(line.split()[1]))
                continue
            if "=" not in line:
                raise FormatError(f"expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            blocks[-1][key] = value
    head = blocks[0]
    try:
        n = int(head["replicates"])
        master_seed = int(head["master_seed"])
        prior_means = tuple(float(head[f"prior_mean_{p}"])
                            for p in ("lambda", "beta", "gamma"))
    except KeyError as exc:
        raise FormatError(f"study header misses {exc.args[0]!r}") from None
    except ValueError as exc:
        raise FormatError(f"bad study header value: {exc}") from None
    if n != len(blocks) - 1:
        raise FormatError(
            f"header promises {n} replicates, found {len(blocks) - 1}")
    replicates = []
    for index, block in zip(indices[1:], blocks[1:]):
        try:
            params = ("lambda", "beta", "gamma")
            replicates.append(StudyReplicate(
                index=index,
                truth=tuple(float(block[f"truth_{p}"]) for p in params),
                n_necessary=int(block["n_necessary"]),
                n_random=int(block["n_random"]),
                posterior_mean=tuple(float(block[f"mean_{p}"])
                                     for p in params),
                interval=tuple((float(block[f"interval_{p}_low"]),
                                float(block[f"interval_{p}_high"]))
                               for p in params),
                covered=tuple(block[f"covered_{p}"] == "1" for p in params),
                beta_over=block["beta_over"] == "1",
                random_mislabelled=float(block["random_mislabelled"]),
                necessary_mislabelled=float(block["necessary_mislabelled"]),
                acceptance={m: float(block[f"acceptance_{m}"])
                            for m in MOVE_NAMES},
            ))
        except KeyError as exc:
            raise FormatError(
                f"replicate block misses {exc.args[0]!r}") from None
        except ValueError as exc:
            raise FormatError(f"bad replicate value: {exc}") from None
    return StudyReport(tuple(replicates), prior_means, master_seed)


# ---------------------------------------------------------------------------
# Generic numeric columns


def write_columns(path, label, columns):
    """Write named numeric columns as ``COLUMNS v1 <label>`` text.

    ``columns`` maps names to equal-length 1-d arrays; the column order
    of the mapping is preserved.
    """
    names = list(columns)
    arrays = [np.asarray(columns[k], dtype=float) for k in names]
    if not arrays:
        raise ValueError("need at least one column")
    n = len(arrays[0])
    if any(len(a) != n for a in arrays):
        raise ValueError("columns must have equal length")
    with _open_text(path, "w") as fh:
        fh.write(f"COLUMNS v1 {label}\n")
        fh.write(f"{n}\n")
        fh.write(" ".join(names) + "\n")
        for i in range(n):
            fh.write(" ".join(_fmt(a[i]) for a in arrays) + "\n")


def read_columns(path):
    """Read a COLUMNS file; returns ``(label, dict name -> array)``."""
    with _open_text(path, "r") as fh:
        magic = fh.readline().strip()
        if not magic.startswith("COLUMNS v1 "):
            raise FormatError(f"not a COLUMNS v1 file: {magic!r}")
        label = magic[len("COLUMNS v1 "):]
        try:
            n = int(fh.readline().strip())
        except ValueError:
            raise FormatError("column length line is not an integer") \
                from None
        names = fh.readline().split()
        if not names:
            raise FormatError("missing column names")
        data = np.empty((n, len(names)))
        for i in range(n):
            parts = fh.readline().split()
            if len(parts) != len(names):
                raise FormatError(f"column row {i} needs {len(names)} fields")
            try:
                data[i] = [float(v) for v in parts]
            except ValueError as exc:
                raise FormatError(f"column row {i}: {exc}") from None
    return label, {name: data[:, j].copy() for j, name in enumerate(names)}
