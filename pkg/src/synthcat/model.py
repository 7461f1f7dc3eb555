"""Domain types shared across the package, plus spec validation and config IO.

The data model mirrors the generative story: subjects fall into C clusters
with weights ``psi_c``, and within a cluster every variable is drawn
independently from a per-(cluster, variable) categorical distribution.  A
complete specification is therefore a ClusterSpec (weights and subject
counts) plus a ProfileMatrix (the C x P grid of probability vectors).  Group
structure and dependence targets enter through GroupStructure, consumed by
the patterns and calibration modules.

Validation is report-style: types are plain immutable holders and expose a
``violations()`` method instead of raising in ``__init__``, so a caller can
collect every problem in a spec at once.  ``validate_spec`` aggregates the
reports; the generator refuses to run unless the report is clean.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

KINDS = ("nominal", "ordinal", "interval")
TARGET_KINDS = ("covariance", "correlation")
FAMILIES = ("binary", "snp", "explicit")

# Probability vectors and cluster weights must sum to 1 within this slack.
SUM_TOLERANCE = 1e-9


class SpecError(ValueError):
    """A specification cannot be generated as declared."""


class KindError(SpecError):
    """An operation was applied to a variable kind that does not support it."""


class InfeasibleTargetError(ValueError):
    """A dependence target cannot be met by any admissible profile."""


@dataclass(frozen=True)
class VariableDomain:
    """A categorical variable: ordered numeric level codes and a kind.

    Level codes are used verbatim by the moment formulas, so 0-based and
    1-based codings give different means on purpose.  ``kind`` gates which
    computations are meaningful: interval variables support moments, ordinal
    ones support rank concordance, nominal ones only chi-square style
    measures.
    """

    name: str
    levels: tuple[int, ...]
    kind: str = "interval"

    @property
    def size(self) -> int:
        return len(self.levels)

    def violations(self) -> list[str]:
        out = []
        if len(self.levels) < 2:
            out.append(f"variable {self.name!r}: needs at least 2 levels")
        if any(a >= b for a, b in zip(self.levels, self.levels[1:])):
            out.append(f"variable {self.name!r}: level codes must be strictly increasing")
        if self.kind not in KINDS:
            out.append(f"variable {self.name!r}: unknown kind {self.kind!r}")
        return out


@dataclass(frozen=True)
class ProbabilityVector:
    """A categorical distribution over the owning variable's levels."""

    probs: tuple[float, ...]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def violations(self, context: str = "probability vector") -> list[str]:
        out = []
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            out.append(f"{context}: entries must lie in [0, 1]")
        total = sum(self.probs)
        if abs(total - 1.0) > SUM_TOLERANCE:
            out.append(f"{context}: probability sum != 1 (got {total!r})")
        return out


def largest_remainder(weights: tuple[float, ...], total: int) -> tuple[int, ...]:
    """Round ``weights * total`` to integers that sum to ``total`` exactly.

    Floors every quota first, then hands the remaining units to the largest
    fractional parts (ties broken by lower index, so the result is
    deterministic).
    """
    quotas = [w * total for w in weights]
    counts = [int(np.floor(q)) for q in quotas]
    short = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda c: (counts[c] - quotas[c], c))
    for c in order[:short]:
        counts[c] += 1
    return tuple(counts)


@dataclass(frozen=True)
class ClusterSpec:
    """Cluster weights psi_c and per-cluster subject counts n_c."""

    weights: tuple[float, ...]
    counts: tuple[int, ...]

    @classmethod
    def uniform(cls, clusters: int, subjects: int) -> "ClusterSpec":
        return cls.from_weights((1.0 / clusters,) * clusters, subjects)

    @classmethod
    def from_weights(cls, weights: tuple[float, ...], subjects: int) -> "ClusterSpec":
        return cls(tuple(weights), largest_remainder(tuple(weights), subjects))

    @classmethod
    def from_counts(cls, counts: tuple[int, ...]) -> "ClusterSpec":
        total = sum(counts)
        if total <= 0:
            raise SpecError("cluster counts must sum to a positive subject total")
        return cls(tuple(c / total for c in counts), tuple(counts))

    @property
    def cluster_count(self) -> int:
        return len(self.weights)

    @property
    def subjects(self) -> int:
        return sum(self.counts)

    def weight_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)

    def violations(self) -> list[str]:
        out = []
        if len(self.weights) == 0:
            out.append("clusters: at least one cluster required")
            return out
        if len(self.counts) != len(self.weights):
            out.append("clusters: weights and counts disagree in length")
        if any(w < 0.0 for w in self.weights):
            out.append("clusters: weights must be non-negative")
        total = sum(self.weights)
        if abs(total - 1.0) > SUM_TOLERANCE:
            out.append(f"clusters: weight sum != 1 (got {total!r})")
        if any(c < 0 for c in self.counts):
            out.append("clusters: counts must be non-negative")
        return out


@dataclass(frozen=True)
class DependenceTarget:
    """A within-group target, either a covariance or a correlation."""

    kind: str
    value: float

    def violations(self, context: str = "target") -> list[str]:
        out = []
        if self.kind not in TARGET_KINDS:
            out.append(f"{context}: unknown target kind {self.kind!r}")
            return out
        if self.kind == "correlation" and not 0.0 < self.value < 1.0:
            out.append(f"{context}: correlation target must lie in (0, 1), got {self.value!r}")
        if self.kind == "covariance" and self.value <= 0.0:
            out.append(f"{context}: covariance target must be positive, got {self.value!r}")
        return out


@dataclass(frozen=True)
class GroupStructure:
    """Ordered homogenous groups of variables, with optional targets.

    ``sizes[v]`` is the number of variables in group v; contributing columns
    are laid out group by group, followed by ``noise_count`` columns that
    carry no clustering signal.
    """

    sizes: tuple[int, ...]
    targets: tuple[DependenceTarget, ...] | None = None
    noise_count: int = 0

    @property
    def group_count(self) -> int:
        return len(self.sizes)

    @property
    def variable_count(self) -> int:
        return sum(self.sizes)

    def column_groups(self) -> tuple[int, ...]:
        """1-based group id per contributing column, in declaration order."""
        out: list[int] = []
        for v, size in enumerate(self.sizes, start=1):
            out.extend([v] * size)
        return tuple(out)

    def violations(self) -> list[str]:
        out = []
        k = len(self.sizes)
        if k == 0:
            out.append("groups: at least one group required")
            return out
        if k & (k - 1):
            out.append(f"groups: group count must be a power of 2, got {k}")
        if any(size < 1 for size in self.sizes):
            out.append("groups: every group needs at least one variable")
        if self.noise_count < 0:
            out.append("groups: noise count must be non-negative")
        if self.targets is not None:
            if len(self.targets) != k:
                out.append("groups: one target per group required when targets are given")
            for v, target in enumerate(self.targets, start=1):
                out.extend(target.violations(f"group {v}"))
        return out


@dataclass(frozen=True)
class ProfileMatrix:
    """The full per-(cluster, variable) table of probability vectors.

    ``rows[c][p]`` is the distribution of variable p inside cluster c (both
    0-indexed).  Noise variables appear as columns whose vector is identical
    in every row.
    """

    variables: tuple[VariableDomain, ...]
    rows: tuple[tuple[ProbabilityVector, ...], ...]

    @property
    def cluster_count(self) -> int:
        return len(self.rows)

    @property
    def variable_count(self) -> int:
        return len(self.variables)

    def cell(self, cluster: int, variable: int) -> ProbabilityVector:
        return self.rows[cluster][variable]

    def violations(self) -> list[str]:
        out = []
        for domain in self.variables:
            out.extend(domain.violations())
        if not self.rows:
            out.append("profile: at least one cluster row required")
        for c, row in enumerate(self.rows, start=1):
            if len(row) != self.variable_count:
                out.append(f"profile: cluster {c} row has {len(row)} cells, expected {self.variable_count}")
                continue
            for p, (cell, domain) in enumerate(zip(row, self.variables), start=1):
                if len(cell.probs) != domain.size:
                    out.append(
                        f"profile: cell (cluster {c}, variable {p}) has {len(cell.probs)} "
                        f"entries for {domain.size} levels"
                    )
                else:
                    out.extend(cell.violations(f"profile cell (cluster {c}, variable {p})"))
        return out


def minimum_identifiable_variables(cluster_count: int, min_levels: int) -> int:
    """Smallest variable count satisfying P >= 2*ceil(log_M(C)) + 1.

    The ceiling is computed with integer arithmetic so exact powers do not
    fall prey to floating point log.
    """
    ceil_log = 0
    power = 1
    while power < cluster_count:
        power *= min_levels
        ceil_log += 1
    return 2 * ceil_log + 1


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]
    warnings: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_spec(
    profile: ProfileMatrix,
    clusters: ClusterSpec,
    groups: GroupStructure | None = None,
) -> ValidationReport:
    """Collect every hard error and warning for a would-be generator spec.

    Hard errors block generation.  The only warning is the identifiability
    guideline P >= 2*ceil(log_M(C)) + 1, which flags specs whose clustering
    may not be recoverable, not specs that cannot be sampled.
    """
    violations = list(profile.violations())
    violations.extend(clusters.violations())
    if profile.rows and clusters.cluster_count != profile.cluster_count:
        violations.append(
            f"spec: profile has {profile.cluster_count} cluster rows but "
            f"clusters declare {clusters.cluster_count}"
        )
    if groups is not None:
        violations.extend(groups.violations())
        expected = groups.variable_count + groups.noise_count
        if expected != profile.variable_count:
            violations.append(
                f"spec: groups cover {expected} columns but profile has {profile.variable_count}"
            )

    warnings = []
    if profile.variables and not any("level" in v for v in violations):
        min_levels = min(domain.size for domain in profile.variables)
        need = minimum_identifiable_variables(clusters.cluster_count, min_levels)
        if profile.variable_count < need:
            warnings.append(
                f"identifiability: P={profile.variable_count} < {need} for "
                f"C={clusters.cluster_count}, M={min_levels}"
            )
    return ValidationReport(tuple(violations), tuple(warnings))


@dataclass(frozen=True, eq=False)
class Dataset:
    """Generated values plus the true allocation and the generating spec.

    ``values`` is n x (P + noise) of level codes; ``assignments`` holds the
    1-based true cluster of each subject.  Both arrays are read-only.
    """

    values: np.ndarray
    assignments: np.ndarray
    profile: ProfileMatrix
    clusters: ClusterSpec
    seed: int
    shuffled: bool = False

    @property
    def subjects(self) -> int:
        return self.values.shape[0]

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(domain.name for domain in self.profile.variables)

    def violations(self) -> list[str]:
        out = []
        n, width = self.values.shape
        if width != self.profile.variable_count:
            out.append("dataset: column count does not match profile")
        if self.assignments.shape != (n,):
            out.append("dataset: allocation length does not match subject count")
            return out
        for p, domain in enumerate(self.profile.variables):
            if not np.isin(self.values[:, p], domain.levels).all():
                out.append(f"dataset: column {domain.name!r} contains illegal level codes")
        c_count = self.clusters.cluster_count
        if not ((self.assignments >= 1) & (self.assignments <= c_count)).all():
            out.append("dataset: allocation outside 1..C")
        tallies = np.bincount(self.assignments, minlength=c_count + 1)[1:]
        if tuple(int(t) for t in tallies) != self.clusters.counts:
            out.append("dataset: per-cluster tallies do not match declared counts")
        return out


# ---------------------------------------------------------------------------
# Config files
# ---------------------------------------------------------------------------
#
# JSON schema, top level keys:
#   seed      required integer
#   clusters  {"C"?: int, "n"?: int, "weights"?: [...], "counts"?: [...]}
#   variables [{"name": str, "levels": [...], "kind"?: str}]   (optional with groups)
#   profile   C x P x M nested lists of probabilities            } exactly one of
#   groups    {"k", "sizes", "family", "targets"?, "pH"?, "H"?, "L"?}  } these two
#   noise     [{"name": str, "levels": [...], "probs": [...]}]
#
# Targets are single-key objects, {"covariance": 0.45} or {"correlation": 0.4}.


@dataclass(frozen=True)
class ClustersConfig:
    count: int | None = None
    subjects: int | None = None
    weights: tuple[float, ...] | None = None
    counts: tuple[int, ...] | None = None


@dataclass(frozen=True)
class GroupsConfig:
    sizes: tuple[int, ...]
    family: str
    targets: tuple[DependenceTarget, ...] | None = None
    high_prob: float | None = None
    high: tuple[float, ...] | None = None
    low: tuple[float, ...] | None = None


@dataclass(frozen=True)
class NoiseConfig:
    name: str
    levels: tuple[int, ...]
    probs: tuple[float, ...]


@dataclass(frozen=True)
class RunConfig:
    seed: int
    clusters: ClustersConfig
    variables: tuple[VariableDomain, ...] | None = None
    profile: tuple[tuple[tuple[float, ...], ...], ...] | None = None
    groups: GroupsConfig | None = None
    noise: tuple[NoiseConfig, ...] = field(default=())


def _parse_target(obj: object, context: str) -> DependenceTarget:
    if not isinstance(obj, dict) or len(obj) != 1:
        raise SpecError(f"{context}: targets must be single-key objects like {{'correlation': 0.4}}")
    kind, value = next(iter(obj.items()))
    if kind not in TARGET_KINDS:
        raise SpecError(f"{context}: unknown target kind {kind!r}")
    return DependenceTarget(kind, float(value))


def _require_keys(obj: dict, allowed: set[str], context: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise SpecError(f"{context}: unknown keys {sorted(unknown)}")


def load_config(source: str | Path | dict) -> RunConfig:
    """Parse a config dict or JSON file into a RunConfig.

    Structural problems (unknown keys, missing seed, both or neither of
    profile/groups) raise SpecError immediately; semantic problems such as
    bad probability sums surface later through validate_spec.
    """
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
    else:
        raw = source
    if not isinstance(raw, dict):
        raise SpecError("config: top level must be an object")
    _require_keys(raw, {"seed", "clusters", "variables", "profile", "groups", "noise"}, "config")
    if "seed" not in raw:
        raise SpecError("config: seed is required")
    seed = int(raw["seed"])
    if not 0 <= seed < 2**64:
        raise SpecError("config: seed must fit in an unsigned 64-bit integer")

    cl_raw = raw.get("clusters", {})
    _require_keys(cl_raw, {"C", "n", "weights", "counts"}, "config.clusters")
    clusters = ClustersConfig(
        count=None if "C" not in cl_raw else int(cl_raw["C"]),
        subjects=None if "n" not in cl_raw else int(cl_raw["n"]),
        weights=None if "weights" not in cl_raw else tuple(float(w) for w in cl_raw["weights"]),
        counts=None if "counts" not in cl_raw else tuple(int(c) for c in cl_raw["counts"]),
    )

    variables = None
    if "variables" in raw:
        variables = tuple(
            VariableDomain(
                name=str(v["name"]),
                levels=tuple(int(x) for x in v["levels"]),
                kind=str(v.get("kind", "interval")),
            )
            for v in raw["variables"]
        )

    if ("profile" in raw) == ("groups" in raw):
        raise SpecError("config: exactly one of 'profile' or 'groups' is required")

    profile = None
    if "profile" in raw:
        if variables is None:
            raise SpecError("config: 'profile' requires 'variables'")
        profile = tuple(
            tuple(tuple(float(p) for p in cell) for cell in row) for row in raw["profile"]
        )

    groups = None
    if "groups" in raw:
        g_raw = raw["groups"]
        _require_keys(g_raw, {"k", "sizes", "family", "targets", "pH", "H", "L"}, "config.groups")
        sizes = tuple(int(s) for s in g_raw["sizes"])
        if "k" in g_raw and int(g_raw["k"]) != len(sizes):
            raise SpecError("config.groups: k does not match the number of sizes")
        family = str(g_raw["family"])
        if family not in FAMILIES:
            raise SpecError(f"config.groups: unknown family {family!r}")
        targets = None
        if "targets" in g_raw:
            targets = tuple(
                _parse_target(t, f"config.groups.targets[{i}]") for i, t in enumerate(g_raw["targets"])
            )
        groups = GroupsConfig(
            sizes=sizes,
            family=family,
            targets=targets,
            high_prob=None if "pH" not in g_raw else float(g_raw["pH"]),
            high=None if "H" not in g_raw else tuple(float(p) for p in g_raw["H"]),
            low=None if "L" not in g_raw else tuple(float(p) for p in g_raw["L"]),
        )

    noise = ()
    if "noise" in raw:
        noise = tuple(
            NoiseConfig(
                name=str(v["name"]),
                levels=tuple(int(x) for x in v["levels"]),
                probs=tuple(float(p) for p in v["probs"]),
            )
            for v in raw["noise"]
        )

    return RunConfig(
        seed=seed, clusters=clusters, variables=variables, profile=profile, groups=groups, noise=noise
    )


def dump_config(config: RunConfig) -> dict:
    """Inverse of load_config; load_config(dump_config(c)) == c."""
    out: dict = {"seed": config.seed}
    cl: dict = {}
    if config.clusters.count is not None:
        cl["C"] = config.clusters.count
    if config.clusters.subjects is not None:
        cl["n"] = config.clusters.subjects
    if config.clusters.weights is not None:
        cl["weights"] = list(config.clusters.weights)
    if config.clusters.counts is not None:
        cl["counts"] = list(config.clusters.counts)
    out["clusters"] = cl
    if config.variables is not None:
        out["variables"] = [
            {"name": v.name, "levels": list(v.levels), "kind": v.kind} for v in config.variables
        ]
    if config.profile is not None:
        out["profile"] = [[list(cell) for cell in row] for row in config.profile]
    if config.groups is not None:
        g: dict = {"k": len(config.groups.sizes), "sizes": list(config.groups.sizes)}
        if config.groups.targets is not None:
            g["targets"] = [{t.kind: t.value} for t in config.groups.targets]
        if config.groups.high_prob is not None:
            g["pH"] = config.groups.high_prob
        if config.groups.high is not None:
            g["H"] = list(config.groups.high)
        if config.groups.low is not None:
            g["L"] = list(config.groups.low)
        g["family"] = config.groups.family
        out["groups"] = g
    if config.noise:
        out["noise"] = [
            {"name": v.name, "levels": list(v.levels), "probs": list(v.probs)} for v in config.noise
        ]
    return out


def resolve_clusters(config: ClustersConfig, derived_count: int | None = None) -> ClusterSpec:
    """Build a ClusterSpec from the config block, deriving what is absent.

    ``derived_count`` is the cluster count implied by a group structure; an
    explicit C must agree with it.
    """
    count = config.count
    if derived_count is not None:
        if count is not None and count != derived_count:
            raise SpecError(
                f"clusters: C={count} disagrees with the group structure, which needs C={derived_count}"
            )
        count = derived_count

    if config.counts is not None:
        if count is not None and len(config.counts) != count:
            raise SpecError(f"clusters: {len(config.counts)} counts given for C={count}")
        if config.subjects is not None and sum(config.counts) != config.subjects:
            raise SpecError("clusters: counts do not sum to n")
        if config.weights is not None:
            if len(config.weights) != len(config.counts):
                raise SpecError("clusters: weights and counts disagree in length")
            return ClusterSpec(config.weights, config.counts)
        return ClusterSpec.from_counts(config.counts)

    if config.subjects is None:
        raise SpecError("clusters: need either counts or n")
    if config.weights is not None:
        if count is not None and len(config.weights) != count:
            raise SpecError(f"clusters: {len(config.weights)} weights given for C={count}")
        return ClusterSpec.from_weights(config.weights, config.subjects)
    if count is None:
        raise SpecError("clusters: cluster count is neither given nor derivable")
    return ClusterSpec.uniform(count, config.subjects)
