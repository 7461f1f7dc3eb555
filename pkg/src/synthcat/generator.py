"""Dataset generation: allocation, profile assembly, and sampling.

The generative procedure is: fix the number of clusters C and per-cluster
subject counts, allocate subjects to clusters in contiguous blocks, then
draw every (subject, variable) cell independently from the cluster's
categorical profile through the normal-threshold transform in
``sampling``.  Profiles come either from an explicit ProfileMatrix or from
a PatternMatrix whose H/L/A labels are bound to concrete probability
vectors.

Columns are independent streams, so generation can fan out across threads
with bit-identical output for any thread count.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import sampling
from .calibration import CalibrationResult, calibrate_group
from .model import (
    ClusterSpec,
    GroupStructure,
    ProbabilityVector,
    ProfileMatrix,
    RunConfig,
    SpecError,
    VariableDomain,
    resolve_clusters,
    validate_spec,
)
from .patterns import HIGH, LOW, NOISE, PatternMatrix, grouped_pattern


@dataclass(frozen=True)
class GeneratorSpec:
    """Everything generate() needs: clusters, profiles, and the seed."""

    clusters: ClusterSpec
    profile: ProfileMatrix
    seed: int


def allocate_subjects(clusters: ClusterSpec) -> np.ndarray:
    """1-based cluster label per subject, in cluster-contiguous blocks."""
    return np.repeat(np.arange(1, clusters.cluster_count + 1), clusters.counts)


def _per_column(vectors, count: int, what: str) -> list[ProbabilityVector]:
    """Broadcast a single ProbabilityVector, or check a per-column list."""
    if isinstance(vectors, ProbabilityVector):
        return [vectors] * count
    vectors = list(vectors)
    if len(vectors) != count:
        raise SpecError(f"bind_pattern: {len(vectors)} {what} vectors for {count} columns")
    return vectors


def bind_pattern(
    pattern: PatternMatrix,
    variables: tuple[VariableDomain, ...],
    high,
    low,
    noise=(),
) -> ProfileMatrix:
    """Replace H/L/A labels with probability vectors, column by column.

    ``high`` and ``low`` are per-contributing-column lists (or a single
    vector, used for every column).  ``noise`` serves the pattern's own
    all-'A' columns first, in order; any vectors left over become extra
    trailing noise columns.  A noise vector repeats across all cluster
    rows, which is what makes the column carry no signal.
    """
    columns = [pattern.column(p) for p in range(pattern.variable_count)]
    noise_positions = []
    contributing_positions = []
    for p, labels in enumerate(columns):
        if all(label == NOISE for label in labels):
            noise_positions.append(p)
        elif any(label == NOISE for label in labels):
            raise SpecError(f"bind_pattern: column {p + 1} mixes noise and signal labels")
        else:
            contributing_positions.append(p)

    noise = list(noise)
    if len(noise) < len(noise_positions):
        raise SpecError(
            f"bind_pattern: pattern has {len(noise_positions)} noise columns "
            f"but only {len(noise)} noise vectors were given"
        )
    trailing = noise[len(noise_positions):]
    total = pattern.variable_count + len(trailing)
    if len(variables) != total:
        raise SpecError(f"bind_pattern: {len(variables)} domains for {total} columns")
    highs = _per_column(high, len(contributing_positions), "high")
    lows = _per_column(low, len(contributing_positions), "low")

    by_position: dict[int, tuple] = {}
    for slot, p in enumerate(contributing_positions):
        by_position[p] = ("signal", slot)
    for slot, p in enumerate(noise_positions):
        by_position[p] = ("noise", slot)

    rows = []
    for row in pattern.symbols:
        cells = []
        for p, label in enumerate(row):
            role, slot = by_position[p]
            if role == "noise":
                cells.append(noise[slot])
            elif label == HIGH:
                cells.append(highs[slot])
            elif label == LOW:
                cells.append(lows[slot])
            else:
                raise SpecError(f"bind_pattern: unknown label {label!r}")
        cells.extend(trailing)
        rows.append(tuple(cells))
    return ProfileMatrix(variables, tuple(rows))


def _generate_column(
    spec: GeneratorSpec, assignments: np.ndarray, p: int
) -> np.ndarray:
    domain = spec.profile.variables[p]
    levels = np.asarray(domain.levels)
    uniforms = sampling.column_uniforms(spec.seed, p, len(assignments))
    scores = sampling.inverse_normal_cdf_array(uniforms)
    out = np.empty(len(assignments), dtype=np.int64)
    for c in range(spec.profile.cluster_count):
        mask = assignments == c + 1
        if not mask.any():
            continue
        edges = sampling.band_edges(spec.profile.cell(c, p).as_array())
        out[mask] = levels[sampling.band_indices(edges, scores[mask])]
    return out


def generate(spec: GeneratorSpec, threads: int = 1, shuffle: bool = False):
    """Draw the full dataset; output is independent of ``threads``.

    With ``shuffle`` the subjects are reordered by a dedicated seeded
    stream, so the data no longer reveals the allocation through row order;
    the returned assignments are reordered in lockstep.
    """
    from .model import Dataset

    report = validate_spec(spec.profile, spec.clusters)
    if not report.ok:
        raise SpecError("; ".join(report.violations))
    for message in report.warnings:
        warnings.warn(message)

    assignments = allocate_subjects(spec.clusters)
    n = len(assignments)
    p_count = spec.profile.variable_count
    values = np.empty((n, p_count), dtype=np.int64)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            columns = pool.map(lambda p: _generate_column(spec, assignments, p), range(p_count))
            for p, column in enumerate(columns):
                values[:, p] = column
    else:
        for p in range(p_count):
            values[:, p] = _generate_column(spec, assignments, p)

    if shuffle:
        order = sampling.shuffle_order(spec.seed, n)
        values = values[order]
        assignments = assignments[order]

    values.setflags(write=False)
    assignments.setflags(write=False)
    return Dataset(
        values=values,
        assignments=assignments,
        profile=spec.profile,
        clusters=spec.clusters,
        seed=spec.seed,
        shuffled=shuffle,
    )


@dataclass(frozen=True)
class BuiltSpec:
    """A GeneratorSpec plus the group metadata that produced it."""

    spec: GeneratorSpec
    groups: GroupStructure | None = None
    calibration: CalibrationResult | None = None


def build_spec(config: RunConfig) -> BuiltSpec:
    """Assemble a generatable spec from a parsed config.

    Explicit-profile configs translate directly.  Grouped configs run the
    calibration (or take literal H/L vectors), lay columns out group by
    group with noise last, and derive the cluster count from the group
    count.
    """
    if config.profile is not None:
        assert config.variables is not None  # load_config enforces this
        rows = tuple(
            tuple(ProbabilityVector(cell) for cell in row) for row in config.profile
        )
        profile = ProfileMatrix(config.variables, rows)
        clusters = resolve_clusters(config.clusters)
        return BuiltSpec(GeneratorSpec(clusters, profile, config.seed))

    assert config.groups is not None
    structure = GroupStructure(
        sizes=config.groups.sizes,
        targets=config.groups.targets,
        noise_count=len(config.noise),
    )
    pattern, cluster_count = grouped_pattern(structure)
    clusters = resolve_clusters(config.clusters, derived_count=cluster_count)
    calibration = calibrate_group(
        structure,
        config.groups.family,
        high_prob=config.groups.high_prob,
        high=config.groups.high,
        low=config.groups.low,
    )

    by_group = {solved.group: solved for solved in calibration.groups}
    highs = []
    lows = []
    for group_id in structure.column_groups():
        highs.append(by_group[group_id].high)
        lows.append(by_group[group_id].low)
    noise_vectors = [ProbabilityVector(cfg.probs) for cfg in config.noise]

    if config.variables is not None:
        variables = config.variables
    else:
        variables = tuple(
            VariableDomain(f"x{p}", calibration.levels, "interval")
            for p in range(1, structure.variable_count + 1)
        ) + tuple(VariableDomain(cfg.name, cfg.levels, "interval") for cfg in config.noise)
    profile = bind_pattern(pattern, variables, highs, lows, noise_vectors)
    spec = GeneratorSpec(clusters, profile, config.seed)
    return BuiltSpec(spec, structure, calibration)
