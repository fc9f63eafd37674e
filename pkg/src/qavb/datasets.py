"""Synthetic mixture benchmarks and their on-disk format.

Generation draws component means uniformly from a box, uses spherical
covariances, and samples labels from either equal or Dirichlet-distributed
weights. The draw order is part of the reproducibility contract: means
first (C*D uniforms), then weights if Dirichlet-distributed, then the N
labels, then the N*D standard normal deviates for the points, all from a
single PCG64 stream seeded with ``seed``.

Files use the QAVBDATA v1 layout: a version line, a comma-separated header
block (dim, components, npoints, seed, rng, has_params), an optional
generative-parameter block (weights, then one mean and one covariance record
per component), a ``points`` sentinel line, and one record per point holding
the 1-based truth label (0 when unknown) followed by the coordinates.
Floats are written with 17 significant digits so reload is bit-exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DatasetFormatError, ValidationError

FORMAT_LINE = "QAVBDATA v1"
RNG_NAME = "pcg64"
WEIGHT_MODES = ("equal", "dirichlet")


@dataclass(frozen=True)
class GenerativeSpec:
    """Parameters of the synthetic benchmark family: ``components`` spherical
    Gaussians with variance ``var``, means uniform in
    [-box_halfwidth, box_halfwidth]^dim, and ``n_points`` samples."""

    dim: int
    components: int
    n_points: int
    weight_mode: str = "equal"
    box_halfwidth: float = 10.0
    var: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValidationError(f"dim must be >= 1, got {self.dim}")
        if self.components < 1:
            raise ValidationError(f"components must be >= 1, got {self.components}")
        if self.n_points < 1:
            raise ValidationError(f"n_points must be >= 1, got {self.n_points}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValidationError(
                f"weight_mode must be one of {WEIGHT_MODES}, got {self.weight_mode!r}"
            )
        if not self.box_halfwidth > 0.0:
            raise ValidationError("box_halfwidth must be positive")
        if not self.var > 0.0:
            raise ValidationError("var must be positive")
        if self.seed < 0:
            raise ValidationError(f"seed must be nonnegative, got {self.seed}")


@dataclass
class Dataset:
    """Points plus (optionally) the truth labels and generative parameters.

    ``labels`` are 1-based component indices. ``seed`` and ``rng_name``
    record how the data was drawn so files are self-describing.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    weights: np.ndarray | None = None
    means: np.ndarray | None = None
    covariances: np.ndarray | None = None
    n_components: int = 0
    seed: int = 0
    rng_name: str = RNG_NAME

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[0] < 1:
            raise ValidationError(f"points must be (N, D), got {self.points.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.points.shape[0],):
                raise ValidationError("labels must align with points")
            c = self.n_components
            if np.any(self.labels < 1) or (c and np.any(self.labels > c)):
                raise ValidationError(f"labels must lie in [1, {c}]")
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=np.float64)
            self.means = np.asarray(self.means, dtype=np.float64)
            self.covariances = np.asarray(self.covariances, dtype=np.float64)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def has_params(self) -> bool:
        return self.weights is not None


def generate(spec: GenerativeSpec) -> Dataset:
    """Draw a dataset from the generative family; see the module docstring
    for the draw-order contract."""
    rng = np.random.default_rng(spec.seed)
    c, d, n = spec.components, spec.dim, spec.n_points
    means = rng.uniform(-spec.box_halfwidth, spec.box_halfwidth, size=(c, d))
    if spec.weight_mode == "dirichlet":
        weights = rng.dirichlet(np.ones(c))
    else:
        weights = np.full(c, 1.0 / c)
    labels = rng.choice(c, size=n, p=weights) + 1
    points = means[labels - 1] + np.sqrt(spec.var) * rng.standard_normal((n, d))
    covariances = np.tile(spec.var * np.eye(d), (c, 1, 1))
    return Dataset(
        points=points,
        labels=labels,
        weights=weights,
        means=means,
        covariances=covariances,
        n_components=c,
        seed=spec.seed,
    )


def default_benchmark_spec(seed: int = 0) -> GenerativeSpec:
    """The registered benchmark family: 10 unit-variance spherical Gaussians
    in a 2-D box of half-width 10, 200 points, equal weights."""
    return GenerativeSpec(dim=2, components=10, n_points=200, seed=seed)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write QAVBDATA v1; see the module docstring for the layout."""
    lines = [FORMAT_LINE]
    lines.append(f"dim,{dataset.dim}")
    lines.append(f"components,{dataset.n_components}")
    lines.append(f"npoints,{dataset.n}")
    lines.append(f"seed,{dataset.seed}")
    lines.append(f"rng,{dataset.rng_name}")
    lines.append(f"has_params,{1 if dataset.has_params else 0}")
    if dataset.has_params:
        lines.append("weights," + ",".join(_fmt(w) for w in dataset.weights))
        for k in range(dataset.n_components):
            lines.append(
                f"mean,{k + 1}," + ",".join(_fmt(x) for x in dataset.means[k])
            )
        for k in range(dataset.n_components):
            flat = dataset.covariances[k].reshape(-1)
            lines.append(f"cov,{k + 1}," + ",".join(_fmt(x) for x in flat))
    lines.append("points")
    labels = dataset.labels
    for i in range(dataset.n):
        label = int(labels[i]) if labels is not None else 0
        lines.append(f"{label}," + ",".join(_fmt(x) for x in dataset.points[i]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


class _Reader:
    """Line cursor with section-aware error messages."""

    def __init__(self, path: Path):
        self.path = path
        self.lines = path.read_text(encoding="ascii").splitlines()
        self.pos = 0

    def next_line(self, section: str) -> str:
        while self.pos < len(self.lines) and not self.lines[self.pos].strip():
            self.pos += 1
        if self.pos >= len(self.lines):
            raise DatasetFormatError(
                f"{self.path}: file ends before the {section} section is complete"
            )
        line = self.lines[self.pos].strip()
        self.pos += 1
        return line

    def fail(self, message: str) -> DatasetFormatError:
        return DatasetFormatError(f"{self.path}:{self.pos}: {message}")


def _parse_keyed(reader: _Reader, key: str, section: str) -> list[str]:
    line = reader.next_line(section)
    parts = line.split(",")
    if parts[0] != key:
        raise reader.fail(f"expected a '{key}' record in the {section} section, got {line!r}")
    return parts[1:]


def _parse_int(reader: _Reader, fields: list[str], name: str) -> int:
    if len(fields) != 1:
        raise reader.fail(f"{name} takes exactly one value")
    try:
        return int(fields[0])
    except ValueError as exc:
        raise reader.fail(f"{name} must be an integer, got {fields[0]!r}") from exc


def _parse_floats(reader: _Reader, fields: list[str], count: int, name: str) -> np.ndarray:
    if len(fields) != count:
        raise reader.fail(f"{name} needs {count} values, got {len(fields)}")
    try:
        return np.array([float(f) for f in fields])
    except ValueError as exc:
        raise reader.fail(f"{name} holds a non-numeric field") from exc


def load_dataset(path: str | Path) -> Dataset:
    """Parse a QAVBDATA v1 file; raises :class:`DatasetFormatError` with
    line/section diagnostics on malformed input."""
    path = Path(path)
    if not path.exists():
        raise DatasetFormatError(f"{path}: no such file")
    reader = _Reader(path)
    version = reader.next_line("version")
    if version != FORMAT_LINE:
        raise reader.fail(f"unsupported format line {version!r}; expected {FORMAT_LINE!r}")
    dim = _parse_int(reader, _parse_keyed(reader, "dim", "header"), "dim")
    comps = _parse_int(reader, _parse_keyed(reader, "components", "header"), "components")
    n = _parse_int(reader, _parse_keyed(reader, "npoints", "header"), "npoints")
    seed = _parse_int(reader, _parse_keyed(reader, "seed", "header"), "seed")
    rng_fields = _parse_keyed(reader, "rng", "header")
    if len(rng_fields) != 1:
        raise reader.fail("rng takes exactly one value")
    rng_name = rng_fields[0]
    has_params = _parse_int(reader, _parse_keyed(reader, "has_params", "header"), "has_params")
    if dim < 1 or comps < 0 or n < 1:
        raise reader.fail(f"invalid header dimensions dim={dim} components={comps} npoints={n}")
    if has_params not in (0, 1):
        raise reader.fail(f"has_params must be 0 or 1, got {has_params}")

    weights = means = covariances = None
    if has_params:
        weights = _parse_floats(
            reader, _parse_keyed(reader, "weights", "parameters"), comps, "weights"
        )
        means = np.empty((comps, dim))
        for k in range(comps):
            fields = _parse_keyed(reader, "mean", "parameters")
            if _parse_int(reader, fields[:1], "mean index") != k + 1:
                raise reader.fail(f"mean records out of order at component {k + 1}")
            means[k] = _parse_floats(reader, fields[1:], dim, "mean")
        covariances = np.empty((comps, dim, dim))
        for k in range(comps):
            fields = _parse_keyed(reader, "cov", "parameters")
            if _parse_int(reader, fields[:1], "cov index") != k + 1:
                raise reader.fail(f"cov records out of order at component {k + 1}")
            covariances[k] = _parse_floats(
                reader, fields[1:], dim * dim, "cov"
            ).reshape(dim, dim)

    sentinel = reader.next_line("points")
    if sentinel != "points":
        raise reader.fail(f"expected the 'points' sentinel line, got {sentinel!r}")
    points = np.empty((n, dim))
    labels = np.empty(n, dtype=np.int64)
    for i in range(n):
        parts = reader.next_line("points").split(",")
        if len(parts) != dim + 1:
            raise reader.fail(f"point record needs {dim + 1} fields, got {len(parts)}")
        try:
            labels[i] = int(parts[0])
        except ValueError as exc:
            raise reader.fail(f"label must be an integer, got {parts[0]!r}") from exc
        points[i] = _parse_floats(reader, parts[1:], dim, "point")
    if np.any(labels < 0) or np.any(labels > comps):
        raise DatasetFormatError(
            f"{path}: labels must lie in [1, {comps}] (or all be 0 for unlabeled data)"
        )
    if np.any(labels == 0):
        if np.any(labels != 0):
            raise DatasetFormatError(f"{path}: mixed labeled and unlabeled points")
        label_arr = None
    else:
        label_arr = labels
    return Dataset(
        points=points,
        labels=label_arr,
        weights=weights,
        means=means,
        covariances=covariances,
        n_components=comps,
        seed=seed,
        rng_name=rng_name,
    )
