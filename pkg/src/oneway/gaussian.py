"""Gaussian states of bosonic modes: means, covariances, symplectic maps, homodyne.

Units use hbar = 1, so the vacuum covariance is I/2. Quadratures are ordered
``(q_1, p_1, q_2, p_2, ...)``.
"""

from __future__ import annotations

import dataclasses
from typing import Sequence

import numpy as np

VACUUM_VARIANCE = 0.5
UNCERTAINTY_ATOL = 1e-8


class GaussianError(ValueError):
    pass


def db_to_variance(db: float) -> float:
    """Quadrature variance that lies ``db`` decibels above (or below) vacuum."""
    return VACUUM_VARIANCE * 10 ** (db / 10)


def variance_to_db(var: float) -> float:
    return float(10 * np.log10(var / VACUUM_VARIANCE))


def omega(m: int) -> np.ndarray:
    """Symplectic form for ``m`` modes."""
    return np.kron(np.eye(m), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def rotation_matrix(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeeze_matrix(t: float) -> np.ndarray:
    """q -> t q, p -> p / t."""
    if t <= 0:
        raise GaussianError(f"squeezing parameter must be positive, got {t}")
    return np.diag([t, 1.0 / t])


def cz_matrix(g: float) -> np.ndarray:
    """Shear of exp(i g q1 q2): p1 += g q2, p2 += g q1."""
    s = np.eye(4)
    s[1, 2] = g
    s[3, 0] = g
    return s


def beamsplitter_matrix(mixing: float = np.pi / 4) -> np.ndarray:
    """Passive coupling a -> cos a - sin b, b -> sin a + cos b (50:50 at pi/4)."""
    c, s = np.cos(mixing), np.sin(mixing)
    return np.kron(np.array([[c, -s], [s, c]]), np.eye(2))


@dataclasses.dataclass(frozen=True)
class GaussianState:
    num_modes: int
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self) -> None:
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        n = 2 * self.num_modes
        if mean.shape != (n,) or cov.shape != (n, n):
            raise GaussianError(f"shapes {mean.shape}, {cov.shape} do not fit {self.num_modes} modes")
        scale = max(1.0, float(np.abs(cov).max(initial=0.0)))
        if not np.allclose(cov, cov.T, atol=1e-10 * scale):
            raise GaussianError("covariance must be symmetric")
        cov = (cov + cov.T) / 2
        mean.setflags(write=False)
        cov.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @classmethod
    def vacuum(cls, m: int) -> GaussianState:
        return cls(m, np.zeros(2 * m), VACUUM_VARIANCE * np.eye(2 * m))

    @classmethod
    def squeezed(cls, db: float, quadrature: str = "p") -> GaussianState:
        """Single mode with the named quadrature at ``db`` relative to vacuum."""
        v = db_to_variance(db)
        diag = [v, 0.25 / v] if quadrature == "q" else [0.25 / v, v]
        return cls(1, np.zeros(2), np.diag(diag))

    @classmethod
    def coherent(cls, q: float, p: float) -> GaussianState:
        return cls(1, np.array([q, p]), VACUUM_VARIANCE * np.eye(2))

    def uncertainty_min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.cov + 0.5j * omega(self.num_modes)).min())

    def purity_det(self) -> float:
        """det(2V); equal to 1 for pure states."""
        return float(np.linalg.det(2 * self.cov))

    def quadrature_variance(self, vector: Sequence[float]) -> float:
        v = np.asarray(vector, dtype=float)
        return float(v @ self.cov @ v)

    def mode_block(self, modes: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        idx = _indices(modes)
        return self.mean[idx], self.cov[np.ix_(idx, idx)]


def _trusted(m: int, mean: np.ndarray, cov: np.ndarray) -> GaussianState:
    """Build a state from an update that is symmetric up to rounding."""
    return GaussianState(m, mean, (cov + cov.T) / 2)


def _indices(modes: Sequence[int]) -> list[int]:
    return [i for m in modes for i in (2 * m, 2 * m + 1)]


def _check_modes(state: GaussianState, modes: Sequence[int]) -> None:
    if len(set(modes)) != len(modes):
        raise GaussianError(f"mode collision in {list(modes)}")
    for m in modes:
        if not 0 <= m < state.num_modes:
            raise GaussianError(f"mode {m} out of range for {state.num_modes} modes")


def tensor(*states: GaussianState) -> GaussianState:
    mean = np.concatenate([s.mean for s in states])
    cov = np.zeros((mean.size, mean.size))
    o = 0
    for s in states:
        n = 2 * s.num_modes
        cov[o : o + n, o : o + n] = s.cov
        o += n
    return GaussianState(sum(s.num_modes for s in states), mean, cov)


def apply_symplectic(state: GaussianState, matrix: np.ndarray, modes: Sequence[int]) -> GaussianState:
    """Apply a symplectic ``matrix`` on ``modes`` (in the given order)."""
    _check_modes(state, modes)
    idx = _indices(modes)
    full = np.eye(2 * state.num_modes)
    full[np.ix_(idx, idx)] = matrix
    return _trusted(state.num_modes, full @ state.mean, full @ state.cov @ full.T)


def symplectic_rotate(state: GaussianState, mode: int, theta: float) -> GaussianState:
    return apply_symplectic(state, rotation_matrix(theta), [mode])


def symplectic_squeeze(state: GaussianState, mode: int, t: float) -> GaussianState:
    return apply_symplectic(state, squeeze_matrix(t), [mode])


def beamsplitter(state: GaussianState, i: int, j: int, mixing: float = np.pi / 4) -> GaussianState:
    return apply_symplectic(state, beamsplitter_matrix(mixing), [i, j])


def cz_direct(state: GaussianState, i: int, j: int, g: float) -> GaussianState:
    return apply_symplectic(state, cz_matrix(g), [i, j])


def displace(state: GaussianState, mode: int, dq: float, dp: float) -> GaussianState:
    _check_modes(state, [mode])
    mean = state.mean.copy()
    mean[2 * mode] += dq
    mean[2 * mode + 1] += dp
    return GaussianState(state.num_modes, mean, state.cov)


@dataclasses.dataclass(frozen=True)
class HomodyneSpec:
    """Measure ``q cos(theta) + p sin(theta)`` on ``mode``."""

    mode: int
    theta: float = 0.0


@dataclasses.dataclass(frozen=True)
class SampleValue:
    seed: int | np.random.Generator | None = None

    def rng(self) -> np.random.Generator:
        if isinstance(self.seed, np.random.Generator):
            return self.seed
        return np.random.default_rng(self.seed)


@dataclasses.dataclass(frozen=True)
class ForcedValue:
    value: float


def remove_modes(state: GaussianState, modes: Sequence[int]) -> GaussianState:
    keep = [m for m in range(state.num_modes) if m not in set(modes)]
    mean, cov = state.mode_block(keep)
    return GaussianState(len(keep), mean, cov)


def homodyne(
    state: GaussianState, spec: HomodyneSpec, policy: SampleValue | ForcedValue = ForcedValue(0.0)
) -> tuple[float, GaussianState]:
    """Measure a rotated quadrature, condition the other modes and drop the mode."""
    _check_modes(state, [spec.mode])
    rotated = symplectic_rotate(state, spec.mode, -spec.theta)
    i = 2 * spec.mode
    rest = [j for j in range(2 * state.num_modes) if j not in (i, i + 1)]
    var = rotated.cov[i, i]
    mu = rotated.mean[i]
    if isinstance(policy, ForcedValue):
        x = float(policy.value)
    else:
        x = float(policy.rng().normal(mu, np.sqrt(var)))
    cross = rotated.cov[rest, i]
    gain = cross * (1.0 / var if var > 0 else 0.0)
    mean = rotated.mean[rest] + gain * (x - mu)
    cov = rotated.cov[np.ix_(rest, rest)] - np.outer(gain, cross)
    return x, _trusted(state.num_modes - 1, mean, cov)
