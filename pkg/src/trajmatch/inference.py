"""Semantic similarity between an observation graph and a model graph.

Three evaluators share one set of potential tables:

* ``exact_log_similarity`` enumerates every mapping (the oracle),
* ``meanfield_similarity`` maximizes a fully factorized lower bound,
* ``icm_match`` runs iterated conditional modes on the mapping.

All similarities are unnormalized log values; the Gaussian and prior
normalizers are never computed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .model import EventGraph, PotentialTables, SigmaConfig, potential_tables
from .relations import neighborhood_matrix

DEFAULT_BUDGET = 10**7
_CHUNK = 1 << 16


class BudgetExceeded(ValueError):
    """Raised when exact enumeration would visit more mappings than allowed."""


@dataclass
class SimilarityReport:
    method: str
    log_similarity: float
    mapping: np.ndarray
    marginals: np.ndarray | None = None
    iterations: int = 0
    energy: float | None = None
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "log_similarity": float(self.log_similarity),
            "mapping": [int(v) for v in self.mapping],
            "iterations": int(self.iterations),
            "energy": None if self.energy is None else float(self.energy),
            "marginals": None if self.marginals is None else [[float(v) for v in row] for row in self.marginals],
        }
        return out


def as_tables(Z, Y=None, sigmas: SigmaConfig | str | None = None) -> PotentialTables:
    """Accept either ready potential tables or an (observation, model) graph pair."""
    if isinstance(Z, PotentialTables):
        return Z
    if not isinstance(Z, EventGraph) or not isinstance(Y, EventGraph):
        raise TypeError("expected PotentialTables or two EventGraphs")
    return potential_tables(Z, Y, sigmas)


def _all_mappings(N, M, start, stop):
    idx = np.arange(start, stop)
    X = np.empty((len(idx), N), dtype=np.int64)
    for i in range(N - 1, -1, -1):
        X[:, i] = idx % M
        idx = idx // M
    return X


def _enumerate(tables: PotentialTables, budget: int):
    N, M = tables.N, tables.M
    total = M**N
    if total > budget:
        raise BudgetExceeded(
            f"exact enumeration needs {M}^{N} = {total} mappings, budget is {budget}; "
            "use the meanfield or icm method"
        )
    for start in range(0, total, _CHUNK):
        X = _all_mappings(N, M, start, min(start + _CHUNK, total))
        yield X, tables.energies(X)


def exact_log_similarity(Z, Y=None, *, budget: int = DEFAULT_BUDGET, sigmas=None) -> SimilarityReport:
    """log sum_X exp(-U(Z, X | Y)) by full enumeration, with the MAP mapping."""
    tables = as_tables(Z, Y, sigmas)
    parts = []
    best_u, best_x = np.inf, None
    for X, u in _enumerate(tables, budget):
        parts.append(logsumexp(-u))
        j = int(np.argmin(u))
        if u[j] < best_u:
            best_u, best_x = float(u[j]), X[j].copy()
    return SimilarityReport("exact", float(logsumexp(parts)), best_x, energy=best_u, iterations=1)


def posterior_optimality(Z, Y=None, X=None, *, budget: int = DEFAULT_BUDGET, sigmas=None) -> float:
    """Posterior probability p(X | Y, Z) of one mapping."""
    tables = as_tables(Z, Y, sigmas)
    log_z = exact_log_similarity(tables, budget=budget).log_similarity
    return float(np.exp(-tables.energy(X) - log_z))


def _pair_field(tables: PotentialTables, q: np.ndarray, k: int) -> np.ndarray:
    """Expected pair energy of each label of node k under the other marginals."""
    # pair[i, k, b, a] * q[i, b], summed over i != k (pair[k, k] is zero)
    return np.einsum("iba,ib->a", tables.pair[:, k], q)


def mean_field_bound(tables: PotentialTables, q: np.ndarray) -> float:
    """LS(q) = -E_q[U] + H(q) for a factorized q."""
    q = np.asarray(q, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        entropy = -np.sum(np.where(q > 0, q * np.log(q), 0.0))
    expected = float(np.sum(q * tables.unary))
    for i in range(tables.N):
        for k in range(i + 1, tables.N):
            expected += float(q[i] @ tables.pair[i, k] @ q[k])
    return entropy - expected


def meanfield_similarity(
    Z, Y=None, *, max_iters: int = 200, tol: float = 1e-8, sigmas=None, return_trace: bool = False
) -> SimilarityReport:
    """Coordinate ascent on the factorized lower bound of the log similarity.

    Starting from uniform marginals, node k is updated in index order to
    q(x_k) proportional to exp(-V1(k) - sum_i sum_{x_i} q(x_i) V2(i, k)).
    Each update cannot decrease the bound.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    tables = as_tables(Z, Y, sigmas)
    N, M = tables.N, tables.M
    q = np.full((N, M), 1.0 / M)
    trace = [mean_field_bound(tables, q)] if return_trace else []
    it = 0
    for it in range(1, max_iters + 1):
        change = 0.0
        for k in range(N):
            logits = -tables.unary[k] - _pair_field(tables, q, k)
            new = np.exp(logits - logsumexp(logits))
            new /= new.sum()
            change = max(change, float(np.abs(new - q[k]).max()))
            q[k] = new
            if return_trace:
                trace.append(mean_field_bound(tables, q))
        if change < tol:
            break
    mapping = np.argmax(q, axis=1)
    report = SimilarityReport("meanfield", mean_field_bound(tables, q), mapping, q, it,
                              energy=tables.energy(mapping))
    report.trace = trace
    return report


def neighborhood_weights(tables: PotentialTables, neighborhood="dense", theta: float | None = None) -> np.ndarray:
    """ICM adjacency alpha[i, k] as a 0/1 float matrix.

    ``"dense"`` links every pair; ``"sparse"`` links nodes whose temporal
    neighborhood measure is at most ``theta`` (default: a quarter of the
    observation's frame span).  An explicit (N, N) array is used as given.
    """
    N = tables.N
    if isinstance(neighborhood, str):
        if neighborhood == "dense":
            alpha = 1.0 - np.eye(N)
        elif neighborhood == "sparse":
            if tables.z_intervals is None:
                raise ValueError("sparse neighborhoods need observation intervals")
            if theta is None:
                theta = 0.25 * (tables.frame_span or 0)
            alpha = neighborhood_matrix(tables.z_intervals, theta).astype(float)
        else:
            raise ValueError(f"unknown neighborhood {neighborhood!r}")
    else:
        alpha = np.asarray(neighborhood, dtype=float)
        if alpha.shape != (N, N):
            raise ValueError("neighborhood matrix has the wrong shape")
    return alpha


def icm_match(
    Z,
    Y=None,
    *,
    init=None,
    max_sweeps: int = 50,
    neighborhood="dense",
    theta: float | None = None,
    sigmas=None,
) -> SimilarityReport:
    """Iterated conditional modes over the mapping.

    Each node in turn takes the model label minimizing its node energy plus
    the pair energies with its neighbors' current labels (ties go to the
    smallest label).  The reported similarity is minus the full energy of
    the final mapping, all pairs included.  ``trace`` holds the full energy
    after every sweep.
    """
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be >= 1")
    tables = as_tables(Z, Y, sigmas)
    N = tables.N
    alpha = neighborhood_weights(tables, neighborhood, theta)
    x = np.argmin(tables.unary, axis=1) if init is None else np.array(init, dtype=int)
    if x.shape != (N,):
        raise ValueError("init has the wrong length")
    trace = [tables.energy(x)]
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        changed = False
        for k in range(N):
            local = tables.unary[k].copy()
            for i in np.flatnonzero(alpha[:, k]):
                local += tables.pair[i, k, x[i]]
            best = int(np.argmin(local))
            if best != x[k]:
                x[k] = best
                changed = True
        trace.append(tables.energy(x))
        if not changed:
            break
    u = trace[-1]
    report = SimilarityReport("icm", -u, x, None, sweeps, energy=u)
    report.trace = trace
    return report


METHODS = {
    "exact": exact_log_similarity,
    "meanfield": meanfield_similarity,
    "icm": icm_match,
}


def similarity(Z, Y=None, method: str = "icm", **kwargs) -> SimilarityReport:
    try:
        fn = METHODS[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    return fn(Z, Y, **kwargs)
