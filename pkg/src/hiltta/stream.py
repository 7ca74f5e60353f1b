"""Synthetic labeled source data and a continual test stream whose domain
changes over time.

Classes are isotropic Gaussians around means placed at equal pairwise
distance (a regular simplex embedded by a seeded orthonormal frame). Each
domain d >= 1 of the stream distorts inputs with an affine map plus noise:
x -> R (s * x) + b + eps. Domain 0 is always the identity, so every stream
starts in-distribution. Corruption magnitudes scale with
`corruption_strength`; at strength 0 every domain reduces exactly to the
source distribution.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import KEY_SOURCE, KEY_STREAM, Batch, LabeledExample, format_float, make_rng

# Corruption magnitudes at strength 1.0. The rotation budget is what makes
# corrupted domains genuinely hard: batch-statistics normalization absorbs
# per-unit location/scale drift but cannot undo a rotation of input space.
ROT_ANGLE = 0.80        # radians per Givens plane
ROT_ROUNDS = 2          # full passes of disjoint plane rotations
LOG_SCALE_MAG = math.log(2.2)   # |log scale| per dimension, clipped to [ln .25, ln 4]
SHIFT_FRAC = 0.40       # shift norm as a fraction of class_separation
NOISE_SIGMA = 0.60      # additive Gaussian noise sigma

_KEY_DOMAIN = 101
_KEY_MEANS = 102
_KEY_BATCH = 103


@dataclass(frozen=True)
class StreamSpec:
    num_classes: int = 5
    input_dim: int = 16
    class_separation: float = 6.0
    num_domains: int = 8
    batches_per_domain: int = 15
    batch_size: int = 200
    corruption_strength: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        if self.input_dim < 2:
            raise ValueError("input_dim must be >= 2")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.num_domains < 1:
            raise ValueError("num_domains must be >= 1")
        if self.class_separation <= 0:
            raise ValueError("class_separation must be positive")
        if self.corruption_strength < 0:
            raise ValueError("corruption_strength must be >= 0")

    @property
    def num_batches(self) -> int:
        return self.num_domains * self.batches_per_domain


@dataclass(frozen=True)
class DomainCorruption:
    rotation: np.ndarray   # (D, D) orthogonal
    scale: np.ndarray      # (D,) positive, in [0.25, 4]
    shift: np.ndarray      # (D,)
    noise_sigma: float

    def apply(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = (x * self.scale) @ self.rotation.T + self.shift
        if self.noise_sigma > 0:
            out = out + self.noise_sigma * rng.standard_normal(out.shape)
        return out


def class_means(spec: StreamSpec) -> np.ndarray:
    """Class means at pairwise distance class_separation, seeded by the spec.

    A regular simplex of C points needs C-1 dimensions; below that we fall
    back to random unit directions (pairwise distances then only
    approximate the requested separation) and warn.
    """
    c, d = spec.num_classes, spec.input_dim
    rng = make_rng(spec.seed, KEY_SOURCE, _KEY_MEANS)
    radius = spec.class_separation / math.sqrt(2.0)
    if d < c - 1:
        warnings.warn(
            f"input_dim={d} cannot hold a regular {c}-class simplex; "
            "falling back to random unit directions"
        )
        dirs = rng.standard_normal((c, d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        return radius * dirs
    # Centered unit vectors in R^C span a (C-1)-dim simplex with pairwise
    # distance sqrt(2); express them in an orthonormal basis of that span.
    centered = np.eye(c) - 1.0 / c
    u, s, _ = np.linalg.svd(centered)
    coords = (u[:, : c - 1]) * s[: c - 1]  # (C, C-1)
    frame, _ = np.linalg.qr(rng.standard_normal((d, c - 1)))
    return radius * coords @ frame.T


def gen_source_dataset(
    spec: StreamSpec, n_per_class: int, rng: np.random.Generator | None = None
) -> list[LabeledExample]:
    """Exactly balanced source draws: class c is N(mu_c, I)."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if rng is None:
        rng = make_rng(spec.seed, KEY_SOURCE)
    means = class_means(spec)
    examples = []
    next_id = 0
    for c in range(spec.num_classes):
        xs = means[c] + rng.standard_normal((n_per_class, spec.input_dim))
        for row in xs:
            examples.append(LabeledExample(sample_id=next_id, x=row, y=c))
            next_id += 1
    return examples


def _givens_rotation(dim: int, strength: float, rng: np.random.Generator) -> np.ndarray:
    """Product of Givens rotations covering every dimension.

    Each round shuffles the dimensions into disjoint pairs and rotates each
    pair by ROT_ANGLE * strength with a random sign, so every corrupted
    domain mixes all input directions by a comparable amount (no
    near-identity draws). Exactly the identity at strength 0.
    """
    r = np.eye(dim)
    for _ in range(ROT_ROUNDS):
        order = rng.permutation(dim)
        for k in range(dim // 2):
            i, j = order[2 * k], order[2 * k + 1]
            theta = ROT_ANGLE * strength * rng.choice((-1.0, 1.0))
            c, s = math.cos(theta), math.sin(theta)
            gi, gj = r[i].copy(), r[j].copy()
            r[i] = c * gi - s * gj
            r[j] = s * gi + c * gj
    return r


def domain_corruption(spec: StreamSpec, domain: int) -> DomainCorruption:
    """Corruption parameters for one domain, a pure function of (spec, domain)."""
    d = spec.input_dim
    strength = spec.corruption_strength
    if domain == 0 or strength == 0.0:
        return DomainCorruption(
            rotation=np.eye(d), scale=np.ones(d), shift=np.zeros(d), noise_sigma=0.0
        )
    rng = make_rng(spec.seed, KEY_STREAM, _KEY_DOMAIN, domain)
    rotation = _givens_rotation(d, strength, rng)
    log_scale = LOG_SCALE_MAG * strength * rng.choice((-1.0, 1.0), size=d)
    log_scale = np.clip(log_scale, math.log(0.25), math.log(4.0))
    scale = np.exp(log_scale)
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    shift = SHIFT_FRAC * strength * spec.class_separation * direction
    return DomainCorruption(
        rotation=rotation, scale=scale, shift=shift, noise_sigma=NOISE_SIGMA * strength
    )


def gen_batch(spec: StreamSpec, t: int, means: np.ndarray, corruption: DomainCorruption) -> Batch:
    """Batch t (0-based); labels are uniform multinomial draws."""
    rng = make_rng(spec.seed, KEY_STREAM, _KEY_BATCH, t)
    n = spec.batch_size
    labels = rng.integers(0, spec.num_classes, size=n)
    x = means[labels] + rng.standard_normal((n, spec.input_dim))
    x = corruption.apply(x, rng)
    domain = t // spec.batches_per_domain
    ids = np.arange(t * n, (t + 1) * n, dtype=np.int64)
    return Batch(index=t, domain_index=domain, ids=ids, x=x, true_labels=labels.astype(np.int64))


def gen_continual_stream(spec: StreamSpec, rng: np.random.Generator | None = None) -> list[Batch]:
    """All num_domains * batches_per_domain batches, in stream order.

    Batches and corruptions are generated from per-batch / per-domain child
    seeds of spec.seed, so the stream is a pure function of the spec; the
    optional rng argument is accepted for interface symmetry but unused.
    """
    del rng
    means = class_means(spec)
    corruptions = [domain_corruption(spec, d) for d in range(spec.num_domains)]
    return [
        gen_batch(spec, t, means, corruptions[t // spec.batches_per_domain])
        for t in range(spec.num_batches)
    ]


# ---------------------------------------------------------------------------
# Dataset file format: '#hiltta-dataset v1 D=<d> C=<c>' header, then one
# 'domain_index,label,f1,...,fD' line per sample. Floats are written as the
# shortest decimal that round-trips float64, so read(write(x)) == x exactly.
# ---------------------------------------------------------------------------

DATASET_MAGIC = "#hiltta-dataset v1"


@dataclass(frozen=True)
class DatasetRow:
    domain_index: int
    label: int
    x: np.ndarray


def source_to_rows(examples: list[LabeledExample]) -> list[DatasetRow]:
    return [DatasetRow(0, ex.y, ex.x) for ex in examples]


def stream_to_rows(batches: list[Batch]) -> list[DatasetRow]:
    rows = []
    for b in batches:
        for i in range(len(b)):
            rows.append(DatasetRow(b.domain_index, int(b.true_labels[i]), b.x[i]))
    return rows


def write_dataset(path, rows: list[DatasetRow], input_dim: int, num_classes: int) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{DATASET_MAGIC} D={input_dim} C={num_classes}\n")
        for row in rows:
            vals = ",".join(format_float(v) for v in row.x)
            fh.write(f"{row.domain_index},{row.label},{vals}\n")


def read_dataset(path) -> tuple[list[DatasetRow], int, int]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(DATASET_MAGIC):
            raise ValueError(f"{path}: missing '{DATASET_MAGIC}' header")
        meta = dict(part.split("=") for part in header[len(DATASET_MAGIC):].split())
        input_dim, num_classes = int(meta["D"]), int(meta["C"])
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2 + input_dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {2 + input_dim} fields, found {len(parts)}"
                )
            try:
                domain = int(parts[0])
                label = int(parts[1])
                x = np.array([float(v) for v in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            rows.append(DatasetRow(domain, label, x))
    return rows, input_dim, num_classes


def rows_to_arrays(rows: list[DatasetRow]) -> tuple[np.ndarray, np.ndarray]:
    x = np.stack([r.x for r in rows]).astype(np.float64)
    y = np.array([r.label for r in rows], dtype=np.int64)
    return x, y


def rows_to_batches(rows: list[DatasetRow], batch_size: int) -> list[Batch]:
    """Regroup a stream file into batches of `batch_size`, in file order."""
    if len(rows) % batch_size != 0:
        raise ValueError(f"{len(rows)} rows do not divide into batches of {batch_size}")
    batches = []
    for t in range(len(rows) // batch_size):
        chunk = rows[t * batch_size : (t + 1) * batch_size]
        domains = {r.domain_index for r in chunk}
        if len(domains) != 1:
            raise ValueError(f"batch {t} straddles domains {sorted(domains)}")
        batches.append(
            Batch(
                index=t,
                domain_index=chunk[0].domain_index,
                ids=np.arange(t * batch_size, (t + 1) * batch_size, dtype=np.int64),
                x=np.stack([r.x for r in chunk]),
                true_labels=np.array([r.label for r in chunk], dtype=np.int64),
            )
        )
    return batches
