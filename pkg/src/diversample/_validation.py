"""Input validation and seed-derivation helpers shared across modules."""

import hashlib

import numpy as np

from .exceptions import LengthMismatchError, NonFinitePointError

# Mask for folding digests into numpy-acceptable seeds.
_SEED_MASK = (1 << 63) - 1


def as_float_matrix(X, name="X", require_finite=True):
    """Coerce to a 2-D float64 array, optionally rejecting NaN/Inf."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-dimensional, got shape {X.shape}")
    if require_finite and not np.all(np.isfinite(X)):
        raise NonFinitePointError(f"{name} contains NaN or infinite values")
    return X


def as_binary_labels(y, name="y"):
    """Coerce to a 1-D int array of {0, 1} labels."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {y.shape}")
    out = y.astype(np.int64, copy=True)
    if not np.array_equal(np.asarray(y, dtype=np.float64), out):
        raise ValueError(f"{name} contains non-integer labels")
    if not np.all((out == 0) | (out == 1)):
        raise ValueError(f"{name} must contain only 0/1 labels")
    return out


def check_equal_length(a, b, what="sequences"):
    if len(a) != len(b):
        raise LengthMismatchError(
            f"{what} have different lengths: {len(a)} vs {len(b)}"
        )


def rng_from(seed, *stage):
    """Deterministic Generator for `seed`, optionally forked by stage labels.

    Stage labels keep independent random streams (e.g. the under- and
    over-sampling halves of a hybrid plan) decoupled, so adding draws to
    one stage never perturbs another.
    """
    if stage:
        return np.random.default_rng(np.random.SeedSequence([derive_seed(seed, *stage)]))
    return np.random.default_rng(int(seed))


def derive_seed(*parts):
    """Stable 63-bit seed from arbitrary labels (ints, floats, strings).

    Uses blake2b rather than hash() so values survive across processes
    and interpreter restarts.
    """
    h = hashlib.blake2b(digest_size=8)
    for part in parts:
        h.update(repr(part).encode("utf-8"))
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "big") & _SEED_MASK


def round_half_up(x):
    """Round to nearest integer, halves away from zero (no banker's rounding)."""
    return int(np.floor(x + 0.5))
