"""Sample container, CSV ingestion and seeded synthetic data generation.

A :class:`Sample` is an immutable set of d-dimensional points and is the
universal input of every estimator in the package.  Synthetic data come
from :class:`MixtureSpec` Gaussian mixtures; a few named presets
(``gauss``, ``mw3``, ``trimodal-sep8``) cover the standard benchmark
shapes, including the strongly skewed eight-component mixture of
Marron & Wand (1992, density #3).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError

__all__ = [
    "Sample",
    "MixtureSpec",
    "SeedSpec",
    "load_csv",
    "sample_mixture",
    "order_statistics",
    "preset",
    "PRESET_NAMES",
]


@dataclass(frozen=True)
class Sample:
    """Immutable point set in R^d.

    Parameters
    ----------
    points : ndarray, shape (n, d)
        Finite coordinates; every row is one observation.
    source_tag : str
        Free-text provenance note.
    """

    points: np.ndarray
    source_tag: str = ""

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise DataFormatError("sample must be a nonempty (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise DataFormatError("sample contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def column(self, j: int = 0) -> np.ndarray:
        return self.points[:, j]


@dataclass(frozen=True)
class SeedSpec:
    """Seed plus substream id; identical pairs reproduce draws bit-for-bit."""

    seed: int = 0
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(
            entropy=int(self.seed) & (2**64 - 1),
            spawn_key=(int(self.stream_id) & (2**64 - 1),),
        )
        return np.random.Generator(np.random.PCG64(ss))

    def substream(self, offset: int) -> "SeedSpec":
        return SeedSpec(self.seed, self.stream_id + offset)


@dataclass(frozen=True)
class MixtureSpec:
    """Gaussian mixture: strictly positive weights summing to one, one mean
    vector and one symmetric positive-definite covariance per component."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        mu = np.asarray(self.means, dtype=float)
        if mu.ndim == 1:
            mu = mu[:, None]
        cov = np.asarray(self.covariances, dtype=float)
        if cov.ndim == 1:
            cov = cov[:, None, None]
        elif cov.ndim == 2 and mu.shape[1] == 1:
            cov = cov[:, :, None]
        L = w.shape[0]
        d = mu.shape[1]
        if mu.shape[0] != L or cov.shape != (L, d, d):
            raise ValueError("weights, means and covariances disagree on shape")
        if np.any(w <= 0.0):
            raise ValueError("mixture weights must be strictly positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must sum to 1 within 1e-12")
        for ell in range(L):
            s = cov[ell]
            if not np.allclose(s, s.T, rtol=1e-12, atol=1e-12):
                raise ValueError(f"covariance {ell} is not symmetric")
            if np.linalg.eigvalsh(s).min() <= 0.0:
                raise ValueError(f"covariance {ell} is not positive definite")
        for arr in (w, mu, cov):
            arr.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", mu)
        object.__setattr__(self, "covariances", cov)

    @property
    def component_count(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    def mean(self) -> np.ndarray:
        """Overall mixture mean."""
        return self.weights @ self.means

    def covariance(self) -> np.ndarray:
        """Overall mixture covariance (law of total covariance)."""
        m = self.mean()
        out = np.zeros((self.dim, self.dim))
        for w, mu, cov in zip(self.weights, self.means, self.covariances):
            dmu = mu - m
            out += w * (cov + np.outer(dmu, dmu))
        return out


def load_csv(path, columns=None) -> Sample:
    """Read a comma-separated file into a :class:`Sample`.

    The dialect is fixed: comma separator, ``.`` decimal point, one
    optional header row (detected when any cell of the first row fails to
    parse as a number).  ``columns`` selects columns by 0-based index or,
    when a header is present, by name; ``None`` keeps all columns.

    Raises
    ------
    DataFormatError
        Missing file, empty selection, unknown column, or a non-finite /
        non-numeric cell (reported with 1-based row and 0-based column).
    """
    try:
        with open(path, "r", newline="") as fh:
            rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    except OSError as exc:
        raise DataFormatError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataFormatError(f"{path}: file holds no data rows")

    def _parse(cell):
        try:
            v = float(cell)
        except ValueError:
            return None
        return v if np.isfinite(v) else None

    header = None
    first_numeric = all(_parse(c) is not None for c in rows[0])
    data_start = 0
    if not first_numeric:
        header = [c.strip() for c in rows[0]]
        data_start = 1
    width = len(rows[data_start]) if len(rows) > data_start else len(rows[0])

    if columns is None:
        idx = list(range(width))
    else:
        if isinstance(columns, (int, str)):
            columns = [columns]
        idx = []
        for c in columns:
            if isinstance(c, str) and not c.lstrip("-").isdigit():
                if header is None or c not in header:
                    raise DataFormatError(f"unknown column name {c!r}")
                idx.append(header.index(c))
            else:
                idx.append(int(c))
        if not idx:
            raise DataFormatError("empty column selection")
    for c in idx:
        if not 0 <= c < width:
            raise DataFormatError(f"column {c} out of range (file has {width})")

    out = np.empty((len(rows) - data_start, len(idx)))
    for r, row in enumerate(rows[data_start:], start=data_start + 1):
        for j, c in enumerate(idx):
            if c >= len(row):
                raise DataFormatError(f"missing value at row {r}, column {c}")
            v = _parse(row[c])
            if v is None:
                raise DataFormatError(f"non-numeric value at row {r}, column {c}")
            out[r - data_start - 1, j] = v
    if out.shape[0] < 1:
        raise DataFormatError(f"{path}: no data rows after header")
    return Sample(out, source_tag=str(path))


def sample_mixture(spec: MixtureSpec, n: int, seed: SeedSpec):
    """Draw ``n`` i.i.d. mixture points.

    Returns ``(sample, labels)`` where ``labels[i]`` is the generating
    component index, kept for clustering benchmarks.  Output is a pure
    function of ``(spec, n, seed)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = seed.generator()
    labels = rng.choice(spec.component_count, size=n, p=spec.weights)
    pts = np.empty((n, spec.dim))
    chol = [np.linalg.cholesky(c) for c in spec.covariances]
    z = rng.standard_normal((n, spec.dim))
    for ell in range(spec.component_count):
        mask = labels == ell
        if mask.any():
            pts[mask] = spec.means[ell] + z[mask] @ chol[ell].T
    tag = spec.name or f"mixture-L{spec.component_count}"
    return Sample(pts, source_tag=f"{tag}:n={n}:seed={seed.seed}/{seed.stream_id}"), labels


def order_statistics(s: Sample) -> np.ndarray:
    """Sorted copy of a univariate sample (stable for ties)."""
    if s.dim != 1:
        raise ValueError("order statistics require a 1-d sample")
    return np.sort(s.column(0), kind="stable")


def _mw3_spec() -> MixtureSpec:
    # Marron & Wand (1992) density #3 "strongly skewed":
    # sum_{l=0..7} (1/8) N(3((2/3)^l - 1), (2/3)^(2l)).
    ell = np.arange(8)
    sd = (2.0 / 3.0) ** ell
    return MixtureSpec(
        weights=np.full(8, 1.0 / 8.0),
        means=3.0 * ((2.0 / 3.0) ** ell - 1.0),
        covariances=sd**2,
        name="mw3",
    )


def _trimodal_sep8_spec() -> MixtureSpec:
    # Equilateral triangle of unit-covariance components, side length 8.
    means = np.array([[0.0, 0.0], [8.0, 0.0], [4.0, 4.0 * np.sqrt(3.0)]])
    covs = np.repeat(np.eye(2)[None, :, :], 3, axis=0)
    return MixtureSpec(np.full(3, 1.0 / 3.0), means, covs, name="trimodal-sep8")


_PRESETS = {
    "gauss": lambda: MixtureSpec([1.0], [0.0], [1.0], name="gauss"),
    "mw3": _mw3_spec,
    "trimodal-sep8": _trimodal_sep8_spec,
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> MixtureSpec:
    """Look up a named mixture preset."""
    try:
        return _PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESET_NAMES}") from None
