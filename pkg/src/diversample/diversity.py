"""Solow-Polasky diversity, per-instance contributions, and greedy selection.

The similarity kernel is M_ij = exp(-theta * ||s_i - s_j||) (+ ridge on the
diagonal). Diversity D(S) is the sum of all entries of M^-1; it ranges from
1 (all points identical) to |S| (all points infinitely far apart).

Removing one instance corresponds to deleting the matching row/column of M.
Writing M = [[A, b], [b^T, c]] and M^-1 = [[Abar, bbar], [bbar^T, cbar]],
the inverse of A is Abar - bbar bbar^T / cbar, so each removal is a rank-one
downdate of the maintained inverse, and the diversity an instance contributes
is (column sum of M^-1 at that instance)^2 / (diagonal of M^-1 there) --
no second inversion needed.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.spatial.distance import cdist
from sklearn.base import BaseEstimator

from ._validation import as_float_matrix, rng_from
from .exceptions import (
    DegenerateDiagonalError,
    RTooLargeError,
    SingularMatrixError,
)

# Rank-one downdates accumulate floating-point drift; re-factorize from
# scratch after this many, and spot-check one row of M @ M_inv in between.
DEFAULT_REFRESH_EVERY = 500
_SPOT_CHECK_INTERVAL = 16
_RESIDUAL_TOL = 1e-6


@dataclass
class SelectionResult:
    """Outcome of greedy diversity selection.

    kept_indices   : sorted original indices of the r survivors
    removal_trace  : (removed original index, its contribution) in removal order
    final_diversity: Solow-Polasky diversity of the kept set
    """

    kept_indices: np.ndarray
    removal_trace: list
    final_diversity: float


class KernelInverse:
    """Similarity matrix M, its maintained inverse, and cached column sums.

    Instances are mutated only by :meth:`remove`; everything else is
    read-only. A state must be confined to one thread at a time, but
    distinct states are safe to process in parallel.
    """

    def __init__(self, points, theta=1.0, ridge=0.0, refresh_every=DEFAULT_REFRESH_EVERY):
        X = as_float_matrix(points, "points")
        if theta <= 0:
            raise ValueError(f"theta must be > 0, got {theta}")
        if ridge < 0:
            raise ValueError(f"ridge must be >= 0, got {ridge}")
        n = X.shape[0]
        if ridge == 0.0 and len(np.unique(X, axis=0)) < n:
            raise SingularMatrixError(
                "duplicate points with ridge=0 make the kernel singular; "
                "remove duplicates or set ridge > 0"
            )
        self.theta = float(theta)
        self.ridge = float(ridge)
        self.refresh_every = int(refresh_every)

        M = np.exp(-self.theta * cdist(X, X))
        M[np.diag_indices(n)] = 1.0 + self.ridge
        self._M = M
        self._M_inv = np.empty_like(M)
        self._col_sums = np.empty(n)
        self._ids = np.arange(n)
        self._k = n
        self._removals = 0
        self._since_refresh = 0
        self._refactorize()

    # -- read-only views ------------------------------------------------------

    @property
    def n_alive(self):
        return self._k

    @property
    def alive(self):
        """Surviving original indices, in internal slot order."""
        return self._ids[: self._k].copy()

    def diversity(self):
        """Sum of all entries of the maintained inverse."""
        return float(self._col_sums[: self._k].sum())

    def contributions(self):
        """Per-instance diversity loss on removal, aligned with `alive`.

        contribution[i] = col_sum_i^2 / (M^-1)_ii = D(S) - D(S minus i),
        computed from the maintained inverse alone.
        """
        if self._k < 2:
            raise ValueError("contributions need at least 2 alive instances")
        diag = np.diagonal(self._M_inv[: self._k, : self._k])
        if np.min(diag) <= 0.0:
            self._refactorize()
            diag = np.diagonal(self._M_inv[: self._k, : self._k])
            if np.min(diag) <= 0.0:
                raise DegenerateDiagonalError(
                    "inverse diagonal not positive after re-factorization"
                )
        sums = self._col_sums[: self._k]
        return sums * sums / diag

    def residual(self):
        """max |M @ M_inv - I| over the alive block (exhaustive check)."""
        k = self._k
        prod = self._M[:k, :k] @ self._M_inv[:k, :k]
        prod[np.diag_indices(k)] -= 1.0
        return float(np.max(np.abs(prod)))

    # -- mutation ----------------------------------------------------------------

    def remove(self, index):
        """Remove one original index and downdate the inverse in place."""
        if self._k < 2:
            raise ValueError("cannot remove from a single-instance state")
        slots = np.flatnonzero(self._ids[: self._k] == index)
        if len(slots) == 0:
            raise KeyError(f"index {index} is not alive")
        t = self._k - 1
        self._swap(int(slots[0]), t)

        cbar = self._M_inv[t, t]
        if cbar <= 0.0:
            self._refactorize()
            cbar = self._M_inv[t, t]
            if cbar <= 0.0:
                raise DegenerateDiagonalError(
                    "inverse diagonal not positive after re-factorization"
                )
        bbar = self._M_inv[:t, t]
        self._col_sums[:t] -= bbar * (self._col_sums[t] / cbar)
        scaled = bbar / np.sqrt(cbar)
        self._M_inv[:t, :t] -= np.outer(scaled, scaled)
        self._k = t
        self._removals += 1
        self._since_refresh += 1

        if self._since_refresh >= self.refresh_every:
            self._refactorize()
        elif self._removals % _SPOT_CHECK_INTERVAL == 0 and self._spot_residual() > _RESIDUAL_TOL:
            self._refactorize()

    # -- internals ------------------------------------------------------------------

    def _swap(self, a, b):
        if a == b:
            return
        k = self._k
        for mat in (self._M, self._M_inv):
            mat[[a, b], :k] = mat[[b, a], :k]
            mat[:k, [a, b]] = mat[:k, [b, a]]
        self._col_sums[[a, b]] = self._col_sums[[b, a]]
        self._ids[[a, b]] = self._ids[[b, a]]

    def _spot_residual(self):
        k = self._k
        row = self._removals % k
        v = self._M[row, :k] @ self._M_inv[:k, :k]
        v[row] -= 1.0
        return float(np.max(np.abs(v)))

    def _refactorize(self):
        k = self._k
        try:
            factor = cho_factor(self._M[:k, :k], lower=True, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularMatrixError(
                f"similarity matrix of {k} points is not positive definite"
            ) from exc
        inv = cho_solve(factor, np.eye(k), check_finite=False)
        inv = 0.5 * (inv + inv.T)  # enforce exact symmetry
        self._M_inv[:k, :k] = inv
        self._col_sums[:k] = inv.sum(axis=0)
        self._since_refresh = 0


def build_kernel(points, theta=1.0, ridge=0.0):
    """Construct the similarity kernel state for a point set."""
    return KernelInverse(points, theta=theta, ridge=ridge)


def solow_polasky(state):
    """Solow-Polasky diversity of the state's surviving set."""
    return state.diversity()


def argmin_random_ties(values, rng):
    """Index of the minimum value; exact ties resolved uniformly at random."""
    values = np.asarray(values)
    ties = np.flatnonzero(values == values.min())
    return int(ties[rng.integers(len(ties))])


def _first_occurrences(X):
    """Indices of the first copy of each distinct row, in insertion order."""
    seen = set()
    keep = []
    for i in range(X.shape[0]):
        key = X[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return np.asarray(keep, dtype=np.intp)


def diversity_of_points(points, theta=1.0, ridge=0.0):
    """Diversity of a raw point multiset.

    Exact duplicates are dropped first, so adding a copy of an existing
    point never changes the value (the twining property holds exactly).
    """
    X = as_float_matrix(points, "points")
    uniq = _first_occurrences(X)
    return KernelInverse(X[uniq], theta=theta, ridge=ridge).diversity()


def greedy_select(points, r, theta=1.0, ridge=1e-9, seed=0):
    """Keep the r most diversity-preserving points by greedy removal.

    Repeats n - r times: compute all contributions, remove the argmin
    (ties broken uniformly at random under `seed`), downdate the inverse.
    Exact duplicate rows are removed first, in insertion order, each with
    contribution 0, before the kernel is ever built.
    """
    X = as_float_matrix(points, "points")
    n = X.shape[0]
    if r < 1:
        raise ValueError(f"r must be >= 1, got {r}")
    if r > n:
        raise RTooLargeError(f"cannot keep {r} of {n} instances")

    rng = rng_from(seed)
    removals_needed = n - r
    trace = []
    removed = np.zeros(n, dtype=bool)

    seen = {}
    duplicate_copies = []
    for i in range(n):
        key = X[i].tobytes()
        if key in seen:
            duplicate_copies.append(i)
        else:
            seen[key] = i
    for i in duplicate_copies[:removals_needed]:
        removed[i] = True
        trace.append((int(i), 0.0))

    remaining = removals_needed - len(trace)
    survivors = np.flatnonzero(~removed)

    if remaining > 0:
        # All duplicate copies are gone, so the survivors are unique rows.
        state = KernelInverse(X[survivors], theta=theta, ridge=ridge)
        for _ in range(remaining):
            contrib = state.contributions()
            pick = argmin_random_ties(contrib, rng)
            local = state.alive[pick]
            trace.append((int(survivors[local]), float(contrib[pick])))
            state.remove(local)
        kept = survivors[np.sort(state.alive)]
        final = state.diversity()
    else:
        kept = survivors
        final = diversity_of_points(X[kept], theta=theta, ridge=ridge)

    return SelectionResult(
        kept_indices=kept,
        removal_trace=trace,
        final_diversity=float(final),
    )


class DiversitySelector(BaseEstimator):
    """Row selector keeping the `n_keep` most diverse instances.

    Distances are computed on z-scored features by default (Euclidean
    distance is otherwise dominated by large-scale columns); the rows
    returned by :meth:`transform` stay in the original feature space.
    """

    def __init__(self, n_keep, theta=1.0, ridge=1e-9, standardize=True, random_state=0):
        self.n_keep = n_keep
        self.theta = theta
        self.ridge = ridge
        self.standardize = standardize
        self.random_state = random_state

    def fit(self, X, y=None):
        X = as_float_matrix(X, "X")
        points = X
        if self.standardize:
            from .data import Standardizer

            points = Standardizer().fit(X).transform(X)
        result = greedy_select(
            points,
            self.n_keep,
            theta=self.theta,
            ridge=self.ridge,
            seed=self.random_state,
        )
        self.selection_ = result
        self.kept_indices_ = result.kept_indices
        self.n_rows_ = X.shape[0]
        return self

    def transform(self, X):
        X = as_float_matrix(X, "X")
        if X.shape[0] != self.n_rows_:
            raise ValueError(
                f"transform expects the {self.n_rows_} fitted rows, got {X.shape[0]}"
            )
        return X[self.kept_indices_]

    def fit_transform(self, X, y=None):
        return self.fit(X, y).transform(X)
