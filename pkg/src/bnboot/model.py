"""Core data model: datasets, DAGs, Bayesian networks, MLE fitting, sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "VariableSpec",
    "Dataset",
    "Dag",
    "GaussianParams",
    "BayesNet",
    "mle_fit",
    "log_likelihood",
    "sample",
    "parent_config_index",
    "topological_sort",
]


@dataclass(frozen=True)
class VariableSpec:
    """One column of a dataset: discrete with named levels, or continuous.

    ``levels is None`` marks a continuous variable; otherwise the tuple of
    level labels fixes the cardinality (>= 2).
    """

    name: str
    levels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.levels is not None:
            if len(self.levels) < 2:
                raise ValueError(
                    f"variable {self.name!r}: discrete cardinality must be >= 2, "
                    f"got {len(self.levels)}"
                )
            if len(set(self.levels)) != len(self.levels):
                raise ValueError(f"variable {self.name!r}: duplicate level labels")

    @property
    def is_discrete(self) -> bool:
        return self.levels is not None

    @property
    def cardinality(self) -> int:
        if self.levels is None:
            raise ValueError(f"variable {self.name!r} is continuous")
        return len(self.levels)


def binary_variables(n: int, prefix: str = "x") -> tuple[VariableSpec, ...]:
    """Convenience spec list for n binary variables x1..xn."""
    return tuple(VariableSpec(f"{prefix}{i + 1}", ("0", "1")) for i in range(n))


class Dataset:
    """A complete n-variable by m-sample matrix, all-discrete or all-continuous.

    Discrete values are stored as level indices (int64); continuous as float64.
    Instances are immutable and safe to share across workers.
    """

    __slots__ = ("variables", "values")

    def __init__(self, variables, values):
        variables = tuple(variables)
        if not variables:
            raise ValueError("dataset needs at least one variable")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        discrete_flags = {v.is_discrete for v in variables}
        if len(discrete_flags) != 1:
            raise ValueError("mixed discrete/continuous datasets are not supported")
        discrete = discrete_flags.pop()

        values = np.asarray(values)
        if values.ndim != 2 or values.shape[1] != len(variables):
            raise ValueError(
                f"values must be (m, {len(variables)}), got shape {values.shape}"
            )
        if values.shape[0] < 1:
            raise ValueError("dataset needs at least one row (m >= 1)")
        if discrete:
            values = values.astype(np.int64, copy=True)
            for j, v in enumerate(variables):
                col = values[:, j]
                if col.min() < 0 or col.max() >= v.cardinality:
                    raise ValueError(
                        f"column {v.name!r}: level index out of range "
                        f"[0, {v.cardinality})"
                    )
        else:
            values = values.astype(np.float64, copy=True)
            if not np.isfinite(values).all():
                raise ValueError("continuous dataset contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("Dataset is immutable")

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def m(self) -> int:
        return self.values.shape[0]

    @property
    def is_discrete(self) -> bool:
        return self.variables[0].is_discrete

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def replace_values(self, values) -> "Dataset":
        return Dataset(self.variables, values)

    def __repr__(self):
        kind = "discrete" if self.is_discrete else "continuous"
        return f"Dataset(n={self.n}, m={self.m}, {kind})"


def topological_sort(n: int, edges) -> list[int]:
    """Topological order of nodes 0..n-1, or raise ValueError on a cycle."""
    children = [[] for _ in range(n)]
    indeg = [0] * n
    for u, v in edges:
        children[u].append(v)
        indeg[v] += 1
    frontier = [i for i in range(n) if indeg[i] == 0]
    order = []
    while frontier:
        u = frontier.pop()
        order.append(u)
        for v in children[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                frontier.append(v)
    if len(order) != n:
        raise ValueError("edge set contains a directed cycle")
    return order


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes 0..n-1 as a frozen edge set."""

    n: int
    edges: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(u), int(v)) for u, v in self.edges)
        object.__setattr__(self, "edges", edges)
        for u, v in edges:
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"edge ({u}, {v}) out of range for n={self.n}")
            if u == v:
                raise ValueError(f"self-loop on node {u}")
        topological_sort(self.n, edges)  # raises on cycles

    def parents(self, j: int) -> tuple[int, ...]:
        return tuple(sorted(u for u, v in self.edges if v == j))

    def parent_lists(self) -> list[tuple[int, ...]]:
        out = [[] for _ in range(self.n)]
        for u, v in self.edges:
            out[v].append(u)
        return [tuple(sorted(p)) for p in out]

    def topological_order(self) -> list[int]:
        return topological_sort(self.n, self.edges)

    def with_edge(self, u: int, v: int) -> "Dag":
        return Dag(self.n, self.edges | {(u, v)})

    def without_edge(self, u: int, v: int) -> "Dag":
        return Dag(self.n, self.edges - {(u, v)})

    def __repr__(self):
        es = ",".join(f"{u}->{v}" for u, v in sorted(self.edges))
        return f"Dag(n={self.n}, [{es}])"


@dataclass(frozen=True)
class GaussianParams:
    """Linear-Gaussian conditional: intercept + coefficients over sorted parents."""

    intercept: float
    coefficients: tuple[float, ...]
    variance: float

    def __post_init__(self):
        if not self.variance > 0:
            raise ValueError(f"residual variance must be > 0, got {self.variance}")


def parent_config_index(values: np.ndarray, parents, cards) -> np.ndarray:
    """Mixed-radix index of each row's parent assignment (sorted parent order,
    first parent least significant)."""
    m = values.shape[0]
    cfg = np.zeros(m, dtype=np.int64)
    stride = 1
    for p in parents:
        cfg += values[:, p] * stride
        stride *= cards[p]
    return cfg


class BayesNet:
    """A Dag plus per-node conditionals: CPTs (discrete) or linear-Gaussian.

    Discrete CPTs are (n_parent_configs, cardinality) arrays indexed by the
    mixed-radix parent configuration over the node's sorted parent tuple.
    """

    __slots__ = ("dag", "variables", "params")

    def __init__(self, dag: Dag, variables, params):
        variables = tuple(variables)
        if dag.n != len(variables):
            raise ValueError("dag/variable count mismatch")
        discrete = variables[0].is_discrete
        if any(v.is_discrete != discrete for v in variables):
            raise ValueError("mixed discrete/continuous networks are not supported")
        params = tuple(params)
        if len(params) != dag.n:
            raise ValueError("one parameter block per node required")
        cards = [v.cardinality for v in variables] if discrete else None
        plists = dag.parent_lists()
        checked = []
        for j, block in enumerate(params):
            if discrete:
                cpt = np.asarray(block, dtype=np.float64)
                q = int(np.prod([cards[p] for p in plists[j]], dtype=np.int64)) if plists[j] else 1
                if cpt.shape != (q, cards[j]):
                    raise ValueError(
                        f"node {j}: CPT shape {cpt.shape} != ({q}, {cards[j]})"
                    )
                if (cpt < 0).any():
                    raise ValueError(f"node {j}: negative CPT entry")
                if not np.allclose(cpt.sum(axis=1), 1.0, rtol=0, atol=1e-9):
                    raise ValueError(f"node {j}: CPT rows must sum to 1 within 1e-9")
                cpt = cpt.copy()
                cpt.setflags(write=False)
                checked.append(cpt)
            else:
                if not isinstance(block, GaussianParams):
                    raise ValueError(f"node {j}: GaussianParams expected")
                if len(block.coefficients) != len(plists[j]):
                    raise ValueError(f"node {j}: one coefficient per parent required")
                checked.append(block)
        object.__setattr__(self, "dag", dag)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "params", tuple(checked))

    def __setattr__(self, name, value):
        raise AttributeError("BayesNet is immutable")

    @property
    def n(self) -> int:
        return self.dag.n

    @property
    def is_discrete(self) -> bool:
        return self.variables[0].is_discrete

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def cpt(self, j: int) -> np.ndarray:
        return self.params[j]

    def __repr__(self):
        return f"BayesNet(n={self.n}, edges={len(self.dag.edges)})"


def mle_fit(dag: Dag, data: Dataset, smoothing: float = 1.0) -> BayesNet:
    """Maximum-likelihood parameters for ``dag`` on ``data``.

    Discrete nodes get CPT rows (count + smoothing) / (row total + card *
    smoothing); an unobserved parent configuration with smoothing = 0 is an
    error. Continuous nodes are fitted by per-node OLS with residual
    variance RSS/m.
    """
    if dag.n != data.n:
        raise ValueError("dag/data variable count mismatch")
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    plists = dag.parent_lists()
    if data.is_discrete:
        cards = data.cardinalities
        values = data.values
        params = []
        for j in range(data.n):
            parents = plists[j]
            card = cards[j]
            q = 1
            for p in parents:
                q *= cards[p]
            cfg = parent_config_index(values, parents, cards)
            counts = np.bincount(cfg * card + values[:, j], minlength=q * card)
            counts = counts.reshape(q, card).astype(np.float64)
            counts += smoothing
            totals = counts.sum(axis=1)
            if smoothing == 0 and (totals == 0).any():
                bad = int(np.flatnonzero(totals == 0)[0])
                raise ValueError(
                    f"unobserved configuration: node {j} parent config {bad} "
                    "has no samples and smoothing is 0"
                )
            params.append(counts / totals[:, None])
        return BayesNet(dag, data.variables, params)

    values = data.values
    m = data.m
    params = []
    for j in range(data.n):
        parents = plists[j]
        design = np.column_stack([np.ones(m)] + [values[:, p] for p in parents])
        coef, _, rank, _ = np.linalg.lstsq(design, values[:, j], rcond=None)
        if rank < design.shape[1]:
            raise ValueError(f"singular design matrix for node {j}")
        resid = values[:, j] - design @ coef
        variance = float(resid @ resid) / m
        if variance <= 0:
            raise ValueError(f"zero residual variance for node {j}")
        params.append(GaussianParams(float(coef[0]), tuple(coef[1:]), variance))
    return BayesNet(dag, data.variables, params)


def log_likelihood(net: BayesNet, data: Dataset) -> float:
    """Sum over rows and nodes of log p(x_i | parents).

    A zero-probability observed cell yields -inf (sentinel, never raises).
    """
    if tuple(net.variables) != tuple(data.variables):
        raise ValueError("network/data variable specs differ")
    plists = net.dag.parent_lists()
    values = data.values
    total = 0.0
    if net.is_discrete:
        cards = net.cardinalities
        with np.errstate(divide="ignore"):
            for j in range(net.n):
                cfg = parent_config_index(values, plists[j], cards)
                probs = net.params[j][cfg, values[:, j]]
                total += float(np.sum(np.log(probs)))
        return total
    for j in range(net.n):
        g = net.params[j]
        mean = np.full(data.m, g.intercept)
        for p, c in zip(plists[j], g.coefficients):
            mean += c * values[:, p]
        resid = values[:, j] - mean
        total += float(
            -0.5 * data.m * math.log(2 * math.pi * g.variance)
            - 0.5 * float(resid @ resid) / g.variance
        )
    return total


def sample(net: BayesNet, m: int, seed: int) -> Dataset:
    """Forward (ancestral) sampling of m rows, deterministic per seed."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = np.random.default_rng(seed)
    plists = net.dag.parent_lists()
    order = net.dag.topological_order()
    if net.is_discrete:
        cards = net.cardinalities
        values = np.zeros((m, net.n), dtype=np.int64)
        for j in order:
            cfg = parent_config_index(values, plists[j], cards)
            rows = net.params[j][cfg]
            u = rng.random(m)
            values[:, j] = (u[:, None] > np.cumsum(rows, axis=1)).sum(axis=1)
            np.minimum(values[:, j], cards[j] - 1, out=values[:, j])
        return Dataset(net.variables, values)
    values = np.zeros((m, net.n), dtype=np.float64)
    for j in order:
        g = net.params[j]
        mean = np.full(m, g.intercept)
        for p, c in zip(plists[j], g.coefficients):
            mean += c * values[:, p]
        values[:, j] = mean + rng.normal(0.0, math.sqrt(g.variance), m)
    return Dataset(net.variables, values)
