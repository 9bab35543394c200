"""Reproducible generation of complex normal vectors and normalized
rank-1 / full-rank perturbations.

Reproducibility contract: a stream is keyed by the 128-bit pair
``(seed, stream)`` fed to a counter-based Philox generator, so trial ``i``
of a run always uses stream ``i`` and produces the same draws regardless
of worker count or scheduling.  Normal variates come from Box-Muller on
Philox uniforms rather than the generator's own ziggurat path, keeping the
byte-level output a function of (seed, stream) alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError
from .linalg import UpperTriangularMatrix, as_complex_vector, spectral_norm

__all__ = [
    "SeededRng",
    "RankOnePerturbation",
    "sample_complex_normal",
    "rank1_perturbation",
    "full_rank_perturbation",
    "apply_perturbation",
]


@dataclass
class SeededRng:
    """Stateful pseudorandom stream keyed by ``(seed, stream)``.

    Instances are cheap to create; fork one per trial with
    ``SeededRng(seed, trial_index)``.  Draws within one instance are
    sequential and deterministic.
    """

    seed: int
    stream: int = 0
    _gen: np.random.Generator = field(default=None, repr=False, compare=False)

    def generator(self):
        if self._gen is None:
            key = ((int(self.seed) & 0xFFFFFFFFFFFFFFFF) << 64) | (
                int(self.stream) & 0xFFFFFFFFFFFFFFFF
            )
            self._gen = np.random.Generator(np.random.Philox(key=key))
        return self._gen

    def uniforms(self, n):
        """n uniforms in [0, 1)."""
        return self.generator().random(n)

    def complex_normals(self, n):
        """n i.i.d. complex normals with unit total variance.

        Box-Muller in polar form: squared modulus is Exp(1), phase is
        uniform, hence real and imaginary parts are independent
        N(0, 1/2).
        """
        w = self.generator().random((2, n))
        radius = np.sqrt(-np.log1p(-w[0]))  # 1 - U in (0, 1], avoids log(0)
        return radius * np.exp(2j * np.pi * w[1])


@dataclass
class RankOnePerturbation:
    """Factored perturbation ``eps * u v^dag / (|u| |v|)``.

    Kept in (u, v, eps) form; the dense matrix is materialized only on
    request, so a trial costs O(d) storage.
    """

    u: np.ndarray
    v: np.ndarray
    eps: float

    def __post_init__(self):
        self.u = as_complex_vector(self.u, name="u")
        self.v = as_complex_vector(self.v, dim=self.u.size, name="v")
        if self.eps <= 0:
            raise ShapeError("eps must be positive")
        self.norm_u = float(np.linalg.norm(self.u))
        self.norm_v = float(np.linalg.norm(self.v))
        if self.norm_u == 0.0 or self.norm_v == 0.0:
            raise ShapeError("perturbation factors must have positive norm")

    @property
    def dim(self):
        return self.u.size

    @property
    def scale(self):
        """eps / (|u| |v|), the coefficient in front of ``u v^dag``."""
        return self.eps / (self.norm_u * self.norm_v)

    def materialize(self):
        return self.scale * np.outer(self.u, np.conj(self.v))


def sample_complex_normal(d, rng):
    """Standard complex normal vector in dimension d (entries CN(0, 1))."""
    if d < 1:
        raise ShapeError("dimension must be positive")
    return rng.complex_normals(d)


def rank1_perturbation(d, eps, rng):
    """Draw independent u, v and wrap them as a normalized rank-1
    perturbation of spectral norm ``eps``."""
    if eps <= 0:
        raise ShapeError("eps must be positive")
    u = sample_complex_normal(d, rng)
    v = sample_complex_normal(d, rng)
    # A zero draw has probability zero; resample once, then give up.
    if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
        u = sample_complex_normal(d, rng)
        v = sample_complex_normal(d, rng)
        if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
            raise ShapeError("drew a zero-norm vector twice in a row")
    return RankOnePerturbation(u, v, float(eps))


def full_rank_perturbation(d, eps, rng):
    """Dense i.i.d. CN(0,1) matrix rescaled to spectral norm ``eps``."""
    if eps <= 0:
        raise ShapeError("eps must be positive")
    if d < 1:
        raise ShapeError("dimension must be positive")
    e = rng.complex_normals(d * d).reshape(d, d)
    norm = spectral_norm(e)
    if norm == 0.0:
        e = rng.complex_normals(d * d).reshape(d, d)
        norm = spectral_norm(e)
    return (eps / norm) * e


def apply_perturbation(t, p):
    """Dense sum ``T + eps u v^dag / (|u| |v|)``."""
    if isinstance(t, UpperTriangularMatrix):
        t = t.to_dense()
    t = np.asarray(t, dtype=np.complex128)
    if t.shape != (p.dim, p.dim):
        raise ShapeError(f"matrix shape {t.shape} does not match perturbation dim {p.dim}")
    return t + p.materialize()
