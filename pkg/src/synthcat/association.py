"""Empirical pairwise association measures on categorical data.

Four measures, all driven by the pairwise contingency table or the raw
level codes: the chi-square statistic, two variants of Cramer's V, the
concentration coefficient (a proportional-reduction-in-variance measure
for nominal data), Stuart-Kendall tau_c (rank concordance on rectangular
tables), and the plain Pearson correlation of level codes for interval
variables.

Measure/kind compatibility: V and the concentration coefficient accept any
kind; tau_c needs an order (ordinal or interval); Pearson needs interval
codes.  Incompatible pairs yield NaN cells rather than errors, so one
matrix call works on mixed datasets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, KindError, SpecError, VariableDomain

MEASURES = ("v", "vcc", "tauc", "pearson")

# Kinds each measure accepts.
_COMPATIBLE = {
    "v": ("nominal", "ordinal", "interval"),
    "vcc": ("nominal", "ordinal", "interval"),
    "tauc": ("ordinal", "interval"),
    "pearson": ("interval",),
}


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Cross-tabulation counts, rows = first variable's levels."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def column_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    def violations(self) -> list[str]:
        out = []
        if self.counts.ndim != 2:
            out.append("contingency table: counts must be 2-dimensional")
            return out
        if (self.counts < 0).any():
            out.append("contingency table: negative counts")
        return out


def crosstab(x, y, levels_x: tuple[int, ...], levels_y: tuple[int, ...]) -> ContingencyTable:
    """Cross-tabulate two code columns over their declared levels.

    The table has one row per declared x level and one column per declared
    y level, in declared order, so levels never observed still appear as
    zero margins.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise SpecError("crosstab: columns differ in length")
    ix = np.searchsorted(levels_x, x)
    iy = np.searchsorted(levels_y, y)
    bad = (ix >= len(levels_x)) | (np.asarray(levels_x)[np.minimum(ix, len(levels_x) - 1)] != x)
    if bad.any():
        raise SpecError("crosstab: values outside the declared x levels")
    bad = (iy >= len(levels_y)) | (np.asarray(levels_y)[np.minimum(iy, len(levels_y) - 1)] != y)
    if bad.any():
        raise SpecError("crosstab: values outside the declared y levels")
    counts = np.zeros((len(levels_x), len(levels_y)), dtype=np.int64)
    np.add.at(counts, (ix, iy), 1)
    return ContingencyTable(counts)


def _dropped(table: ContingencyTable) -> np.ndarray:
    """Counts with zero-margin rows and columns removed."""
    counts = table.counts
    if counts.sum() == 0:
        raise SpecError("association: all-zero contingency table")
    counts = counts[counts.sum(axis=1) > 0]
    return counts[:, counts.sum(axis=0) > 0]


def chi_square(table: ContingencyTable) -> float:
    """Pearson chi-square statistic, zero-margin rows/columns dropped."""
    counts = _dropped(table).astype(float)
    n = counts.sum()
    expected = np.outer(counts.sum(axis=1), counts.sum(axis=0)) / n
    return float(((counts - expected) ** 2 / expected).sum())


def cramers_v(table: ContingencyTable, variant: str = "paper") -> float:
    """Cramer's V in two flavours.

    variant='paper' computes chi2 / (n * min(R, S)) with no square root;
    variant='standard' computes sqrt(chi2 / (n * (min(R, S) - 1))).  R and
    S are the table dimensions after dropping zero margins; a table left
    with a single row or column has no association to measure, which the
    standard variant reports as NaN (0/0) and the paper variant as 0.
    """
    if variant not in ("paper", "standard"):
        raise SpecError(f"cramers_v: unknown variant {variant!r}")
    counts = _dropped(table)
    n = counts.sum()
    smaller = min(counts.shape)
    chi2 = chi_square(table)
    if variant == "paper":
        return float(chi2 / (n * smaller))
    if smaller == 1:
        return math.nan
    return float(math.sqrt(chi2 / (n * (smaller - 1))))


def concentration_coefficient(table: ContingencyTable) -> float:
    """Proportional reduction in column-variable variation given the row.

        V_cc = [sum_ij pi_ij^2 / pi_i+  -  sum_j pi_+j^2] / [1 - sum_j pi_+j^2]

    Directed: the row variable is the predictor.  A degenerate column
    margin makes the denominator vanish; reported as NaN.
    """
    counts = table.counts
    n = int(counts.sum())
    if n == 0:
        raise SpecError("association: all-zero contingency table")
    # Multiply numerator and denominator by n^2 to clear the probabilities:
    # [n sum_ij c_ij^2 / r_i - sum_j s_j^2] / [n^2 - sum_j s_j^2].  Integer
    # sums with one rounded division per row keep small tables exact.
    baseline = sum(int(s) ** 2 for s in table.column_sums)
    denominator = n * n - baseline
    if denominator <= 0:
        return math.nan
    conditional = 0.0
    for r_i, row in zip(table.row_sums, counts):
        if r_i == 0:
            continue
        conditional += n * sum(int(c) ** 2 for c in row) / int(r_i)
    return float((conditional - baseline) / denominator)


def _concordance_counts(counts: np.ndarray) -> tuple[int, int]:
    """Concordant and discordant unordered pair counts from a crosstab.

    For a subject pair to be concordant both coordinates must strictly
    agree in direction; ties in either coordinate count for neither side.
    Each cell is paired with the cells strictly south-east of it
    (concordant) and strictly south-west (discordant); summing over cells
    visits every unordered pair once.
    """
    rows, cols = counts.shape
    concordant = 0
    discordant = 0
    for i in range(rows - 1):
        south = counts[i + 1 :]
        for j in range(cols):
            cell = int(counts[i, j])
            if cell == 0:
                continue
            if j + 1 < cols:
                concordant += cell * int(south[:, j + 1 :].sum())
            if j > 0:
                discordant += cell * int(south[:, :j].sum())
    return concordant, discordant


def stuart_kendall_tau_c(x, y, m_x: int, m_y: int) -> float:
    """Stuart-Kendall tau_c over two code columns.

        tau_c = 2 (n_c - n_d) / [n^2 (m - 1) / m],   m = min(m_x, m_y)

    with n_c and n_d the concordant and discordant unordered pair counts.
    m comes from the declared level counts, not the observed ones, because
    the correction is for the table's rectangular shape.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = len(x)
    if n < 2:
        raise SpecError("tau_c: need at least two subjects")
    if min(m_x, m_y) < 2:
        raise SpecError("tau_c: need at least two levels per variable")
    levels_x = tuple(np.unique(x))
    levels_y = tuple(np.unique(y))
    table = crosstab(x, y, levels_x, levels_y)
    concordant, discordant = _concordance_counts(table.counts)
    m = min(m_x, m_y)
    return float(2.0 * (concordant - discordant) / (n * n * (m - 1) / m))


def tau_c_pair_scan(x, y, m_x: int, m_y: int) -> float:
    """tau_c by the O(n^2) definition: scan all unordered subject pairs.

    Slow reference implementation kept as the oracle for the table-based
    production path.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    n = len(x)
    concordant = 0
    discordant = 0
    for a in range(n - 1):
        dx = x[a + 1 :] - x[a]
        dy = y[a + 1 :] - y[a]
        product = dx * dy
        concordant += int((product > 0).sum())
        discordant += int((product < 0).sum())
    m = min(m_x, m_y)
    return float(2.0 * (concordant - discordant) / (n * n * (m - 1) / m))


@dataclass(frozen=True, eq=False)
class AssociationMatrix:
    """P x P grid of pairwise values with names and a measure tag."""

    values: np.ndarray
    names: tuple[str, ...]
    measure: str

    @property
    def dimension(self) -> int:
        return len(self.names)

    def long_format(self) -> list[tuple[str, str, float]]:
        """(name_p, name_q, value) rows for heatmap tools, row-major."""
        out = []
        for p, name_p in enumerate(self.names):
            for q, name_q in enumerate(self.names):
                out.append((name_p, name_q, float(self.values[p, q])))
        return out


def _columns(data) -> tuple[np.ndarray, tuple[VariableDomain, ...]]:
    if isinstance(data, Dataset):
        return data.values, data.profile.variables
    values, variables = data
    return np.asarray(values), tuple(variables)


def pearson_matrix(data) -> AssociationMatrix:
    """Sample Pearson correlations of the level codes.

    Non-interval columns and zero-variance columns give NaN cells; the
    diagonal is 1 by convention.
    """
    values, variables = _columns(data)
    x = values.astype(float)
    x = x - x.mean(axis=0)
    norms = np.sqrt((x**2).sum(axis=0))
    interval = np.array([v.kind == "interval" for v in variables])
    ok = interval & (norms > 0.0)
    scale = np.where(ok, norms, np.nan)
    with np.errstate(invalid="ignore"):
        unit = x / scale
    matrix = unit.T @ unit
    np.fill_diagonal(matrix, 1.0)
    return AssociationMatrix(matrix, tuple(v.name for v in variables), "pearson")


def association_matrix(
    data,
    measure: str,
    variant: str = "paper",
    symmetrize: bool = False,
) -> AssociationMatrix:
    """All pairwise values of one measure; NaN where kinds are incompatible.

    The concentration coefficient is directed, so cell (p, q) holds the
    p-predicts-q value and (q, p) its reverse unless ``symmetrize`` averages
    the two.  The other measures are symmetric as defined.
    """
    if measure not in MEASURES:
        raise KindError(f"unknown measure {measure!r}")
    if measure == "pearson":
        return pearson_matrix(data)
    values, variables = _columns(data)
    p_count = len(variables)
    out = np.full((p_count, p_count), np.nan)
    np.fill_diagonal(out, 1.0)
    allowed = _COMPATIBLE[measure]
    for p in range(p_count):
        for q in range(p + 1, p_count):
            if variables[p].kind not in allowed or variables[q].kind not in allowed:
                continue
            if measure == "tauc":
                value = stuart_kendall_tau_c(
                    values[:, p], values[:, q], variables[p].size, variables[q].size
                )
                out[p, q] = out[q, p] = value
            elif measure == "v":
                table = crosstab(
                    values[:, p], values[:, q], variables[p].levels, variables[q].levels
                )
                out[p, q] = out[q, p] = cramers_v(table, variant)
            else:
                table = crosstab(
                    values[:, p], values[:, q], variables[p].levels, variables[q].levels
                )
                forward = concentration_coefficient(table)
                backward = concentration_coefficient(ContingencyTable(table.counts.T))
                if symmetrize:
                    forward = backward = 0.5 * (forward + backward)
                out[p, q] = forward
                out[q, p] = backward
    return AssociationMatrix(out, tuple(v.name for v in variables), measure)
