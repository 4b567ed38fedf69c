"""Amplitude damping, erasure and Haar-averaged fidelity of a Q-Pair translation.

Q-Pair densities are 3x3 over the blockade-allowed basis
``(|g_A g_B>, |g_A r_B>, |r_A g_B>)``; the doubly excited ``|r_A r_B>`` is
excluded.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np
from scipy.linalg import expm

COMPLETENESS_TOL = 1e-12
PSD_TOL = 1e-10

GG, GR, RG = 0, 1, 2  # Q-Pair basis indices


class NoiseError(ValueError):
    pass


class TotalErasure(NoiseError):
    """Every population was in the erased level."""


@dataclass(frozen=True)
class NoiseParams:
    """Decay, timing and transport parameters.

    ``p`` defaults to ``gamma * t_g / 2``.  Defaults: Rydberg lifetime 60 us,
    pi-pulse time 0.05 us (Rabi frequency 2 pi x 10 MHz), 500 us moves.
    """

    gamma: float = 1 / 60e-6
    t_g: float = 0.05e-6
    p: float | None = None
    move_time: float = 500e-6
    f_x: float = 0.9997
    f_d_gamma: float = 0.99997
    f_d_mov: float = 0.995

    def __post_init__(self):
        if self.p is None:
            object.__setattr__(self, "p", self.gamma * self.t_g / 2)
        if not 0 <= self.p < 1:
            raise NoiseError("per-gate decay probability must be in [0, 1)")
        for name in ("gamma", "t_g", "move_time"):
            if getattr(self, name) < 0:
                raise NoiseError(f"{name} must be non-negative")
        for name in ("f_x", "f_d_gamma", "f_d_mov"):
            if not 0 <= getattr(self, name) <= 1:
                raise NoiseError(f"{name} must be in [0, 1]")

    @classmethod
    def from_physical(cls, omega: float = 2 * math.pi * 10e6, lifetime: float = 60e-6,
                      **kwargs) -> "NoiseParams":
        """Gate time t_g = pi / omega (a pi pulse) and gamma = 1 / lifetime."""
        return cls(gamma=1 / lifetime, t_g=math.pi / omega, **kwargs)

    def translation_fidelity(self) -> float:
        """F_T = F_X^8 (F_D,gamma F_D,mov)^2: eight pulses and two moves per translation."""
        return self.f_x ** 8 * (self.f_d_gamma * self.f_d_mov) ** 2


def parse_params(text: str) -> NoiseParams:
    """``key=value`` lines (``#`` comments) for any :class:`NoiseParams` field."""
    known = {f.name for f in fields(NoiseParams)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in known:
            raise NoiseError(f"params line {lineno}: expected one of {sorted(known)}")
        try:
            values[key] = float(value)
        except ValueError:
            raise NoiseError(f"params line {lineno}: {value.strip()!r} is not a number") from None
    return NoiseParams(**values)


def load_params(path) -> NoiseParams:
    return parse_params(Path(path).read_text())


def format_params(params: NoiseParams) -> str:
    return "".join(f"{f.name}={getattr(params, f.name)!r}\n" for f in fields(NoiseParams))


# ---------------------------------------------------------------- channels


@dataclass(frozen=True)
class KrausChannel:
    operators: tuple

    def __post_init__(self):
        ops = tuple(np.asarray(k, dtype=complex) for k in self.operators)
        object.__setattr__(self, "operators", ops)

    def completeness_error(self) -> float:
        total = sum(k.conj().T @ k for k in self.operators)
        return float(np.max(np.abs(total - np.eye(total.shape[0]))))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.operators)

    def tensor(self, other: "KrausChannel") -> "KrausChannel":
        return KrausChannel(tuple(np.kron(a, b) for a in self.operators for b in other.operators))


def amplitude_damping(p: float) -> KrausChannel:
    if not 0 <= p <= 1:
        raise NoiseError("damping probability must be in [0, 1]")
    k0 = np.diag([1.0, math.sqrt(1 - p)])
    k1 = np.array([[0.0, math.sqrt(p)], [0.0, 0.0]])
    return KrausChannel((k0, k1))


#: Rows of the 4x4 two-atom basis (A major, B minor) kept in the Q-Pair basis.
_QPAIR_ROWS = (0b00, 0b01, 0b10)


def qpair_channel(p: float) -> KrausChannel:
    """Two-atom damping restricted to the blockade-allowed 3-level subspace."""
    full = amplitude_damping(p).tensor(amplitude_damping(p))
    rows = list(_QPAIR_ROWS)
    ops = [k[np.ix_(rows, rows)] for k in full.operators]
    return KrausChannel(tuple(k for k in ops if np.any(k)))


def apply_qpair_channel(rho: np.ndarray, p: float) -> np.ndarray:
    return qpair_channel(p)(np.asarray(rho, dtype=complex))


def erase_rydberg(rho: np.ndarray, level: int = RG) -> tuple[np.ndarray, float]:
    """Project out ``level`` and renormalise; returns (state, discarded probability)."""
    rho = np.asarray(rho, dtype=complex)
    erased = float(np.real(rho[level, level]))
    kept = rho.copy()
    kept[level, :] = 0
    kept[:, level] = 0
    norm = float(np.real(np.trace(kept)))
    if norm <= 1e-300:
        raise TotalErasure("all population was erased")
    return kept / norm, erased


def _flip(i: int, j: int) -> np.ndarray:
    """Permutation swapping basis states i and j (a blockade-conditioned pi pulse, phases dropped)."""
    u = np.eye(3, dtype=complex)
    u[[i, j]] = u[[j, i]]
    return u


X_B = _flip(GG, GR)  # B flips only while A is in g
X_A = _flip(GG, RG)  # A flips only while B is in g


def _conj(u, rho):
    return u @ rho @ u.conj().T


def noisy_translation_steps(alpha: complex, beta: complex, p: float) -> dict[str, np.ndarray]:
    """Step-by-step channel composition of a noisy translation.

    Returns intermediate Q-Pair densities and the final data-qubit 2x2 density.
    The second half mirrors the first with the roles of A and B exchanged.
    """
    psi = np.zeros(3, dtype=complex)
    psi[GG], psi[RG] = alpha, beta
    rho = np.outer(psi, psi.conj())
    out = {"initial": rho}
    rho = _conj(X_B, rho)
    out["after_xb"] = rho
    rho = apply_qpair_channel(rho, p)
    out["after_damping_1"] = rho
    rho = _conj(X_A, rho)
    out["after_xa"] = rho
    rho = apply_qpair_channel(rho, p)
    out["after_damping_2"] = rho
    rho, d1 = erase_rydberg(rho, RG)
    out["on_aux"] = rho[np.ix_([GG, GR], [GG, GR])]
    rho = apply_qpair_channel(_conj(X_A, rho), p)
    rho = apply_qpair_channel(_conj(X_B, rho), p)
    rho, d2 = erase_rydberg(rho, GR)
    out["final"] = rho[np.ix_([GG, RG], [GG, RG])]
    out["erasure"] = np.array([d1, d2])
    return out


def noisy_translation(alpha: complex, beta: complex, p: float) -> np.ndarray:
    """Closed-form data-qubit density after one noisy translation (erasure-conditioned)."""
    if not 0 <= p < 1:
        raise NoiseError("p must be in [0, 1)")
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    n = 1 - p + p * p
    q = 1 - p
    rho00 = (p * n + a2 * q ** 4) / n ** 2
    rho01 = alpha * np.conj(beta) * q ** 3 / n ** 2
    rho11 = q ** 2 * (p + q ** 2 * b2) / n ** 2
    return np.array([[rho00, rho01], [np.conj(rho01), rho11]], dtype=complex)


def noisy_translation_full(alpha: complex, beta: complex, p: float) -> np.ndarray:
    """Same protocol on the full 4-dimensional two-atom space (cross-check of the 3x3 model)."""
    ch = amplitude_damping(p).tensor(amplitude_damping(p))
    idx = {"gg": 0, "gr": 1, "rg": 2, "rr": 3}

    def perm(i, j):
        u = np.eye(4, dtype=complex)
        u[[i, j]] = u[[j, i]]
        return u

    xb = perm(idx["gg"], idx["gr"])
    xa = perm(idx["gg"], idx["rg"])
    psi = np.zeros(4, dtype=complex)
    psi[idx["gg"]], psi[idx["rg"]] = alpha, beta
    rho = np.outer(psi, psi.conj())
    rho = ch(_conj(xa, ch(_conj(xb, rho))))
    rho, _ = erase_rydberg(rho, idx["rg"])
    rho = ch(_conj(xb, ch(_conj(xa, rho))))
    rho, _ = erase_rydberg(rho, idx["gr"])
    if abs(rho[3, 3]) > 1e-14:
        raise NoiseError("doubly excited population appeared")
    return rho[np.ix_([0, 2], [0, 2])]


def single_atom_decay_reference(alpha: complex, beta: complex, p: float) -> np.ndarray:
    """Unprotected atom after damping for four gate times (total decay 4p)."""
    if not 0 <= 4 * p < 1:
        raise NoiseError("single-atom reference needs 4p < 1")
    a2, b2 = abs(alpha) ** 2, abs(beta) ** 2
    c = alpha * np.conj(beta) * math.sqrt(1 - 4 * p)
    return np.array([[a2 + 4 * p * b2, c], [np.conj(c), (1 - 4 * p) * b2]], dtype=complex)


def state_fidelity(alpha, beta, rho) -> np.ndarray:
    """<psi|rho|psi> for (possibly vectorised) amplitudes."""
    alpha, beta = np.asarray(alpha), np.asarray(beta)
    val = (np.conj(alpha) * rho[0, 0] * alpha + np.conj(alpha) * rho[0, 1] * beta
           + np.conj(beta) * rho[1, 0] * alpha + np.conj(beta) * rho[1, 1] * beta)
    return np.real(val)


PROTOCOLS = {"single_atom": single_atom_decay_reference, "qpair": noisy_translation}


def fidelity(protocol: str, alpha, beta, p: float):
    try:
        channel = PROTOCOLS[protocol]
    except KeyError:
        raise NoiseError(f"unknown protocol {protocol!r}") from None
    return state_fidelity(alpha, beta, channel(alpha, beta, p))


# ---------------------------------------------------------------- Haar averages


def haar_amplitudes(rng: np.random.Generator, size: int) -> tuple[np.ndarray, np.ndarray]:
    """alpha = cos(chi/2), beta = e^{i phi} sin(chi/2) with cos(chi) uniform on [-1, 1]."""
    cos_chi = rng.uniform(-1.0, 1.0, size)
    phi = rng.uniform(0.0, 2 * math.pi, size)
    alpha = np.sqrt((1 + cos_chi) / 2).astype(complex)
    beta = np.exp(1j * phi) * np.sqrt((1 - cos_chi) / 2)
    return alpha, beta


def _chunk(protocol: str, p: float, seed_seq, size: int) -> np.ndarray:
    alpha, beta = haar_amplitudes(np.random.default_rng(seed_seq), size)
    return fidelity(protocol, alpha, beta, p)


def haar_average_fidelity(protocol: str, p: float, sample_count: int, seed=None,
                          workers: int = 1, chunk: int = 250_000) -> tuple[float, float]:
    """Monte Carlo Haar mean of <psi|rho_final|psi>; returns (mean, standard error).

    Samples are drawn in fixed-size chunks from spawned, independent seed
    streams, so the result depends only on ``(seed, sample_count, chunk)``
    and not on ``workers``.
    """
    if sample_count < 1:
        raise NoiseError("sample_count must be >= 1")
    if protocol not in PROTOCOLS:
        raise NoiseError(f"unknown protocol {protocol!r}")
    sizes = [chunk] * (sample_count // chunk)
    if sample_count % chunk:
        sizes.append(sample_count % chunk)
    jobs = list(zip(np.random.SeedSequence(seed).spawn(len(sizes)), sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda job: _chunk(protocol, p, *job), jobs))
    else:
        parts = [_chunk(protocol, p, *job) for job in jobs]
    f = np.concatenate(parts)
    mean = float(f.mean())
    err = float(f.std(ddof=1) / math.sqrt(f.size)) if f.size > 1 else 0.0
    return mean, err


def haar_average_exact(protocol: str, p: float, order: int = 8) -> float:
    """Haar mean by Gauss-Legendre quadrature in cos(chi) (exact for polynomial fidelities)."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    alpha = np.sqrt((1 + nodes) / 2).astype(complex)
    beta = np.sqrt((1 - nodes) / 2).astype(complex)
    f = fidelity(protocol, alpha, beta, p)
    return float(np.dot(weights, f) / 2)


def loglog_slope(ps, deviations) -> float:
    slope, _ = np.polyfit(np.log(ps), np.log(deviations), 1)
    return float(slope)


# ---------------------------------------------------------------- factorisation check

_AXIS_STATES = [(1, 0), (0, 1)] + [
    (1 / math.sqrt(2), ph / math.sqrt(2)) for ph in (1, -1, 1j, -1j)]


def _lindblad_generator(omega: float, gamma: float) -> np.ndarray:
    """Superoperator (column-stacked) for a resonant x drive plus decay r -> g."""
    h = 0.5 * omega * np.array([[0, 1], [1, 0]], dtype=complex)
    lop = math.sqrt(gamma) * np.array([[0, 1], [0, 0]], dtype=complex)
    eye = np.eye(2)
    lind = (-1j * (np.kron(eye, h) - np.kron(h.T, eye))
            + np.kron(lop.conj(), lop)
            - 0.5 * np.kron(eye, lop.conj().T @ lop)
            - 0.5 * np.kron((lop.conj().T @ lop).T, eye))
    return lind


def factorization_gap(gamma: float, t_g: float) -> float:
    """|Haar-mean fidelity (joint drive+decay) - (decay after ideal pulse)| for one pi pulse.

    The six Bloch-axis states form a 2-design, so their mean equals the Haar
    mean of any fidelity quadratic in the state.
    """
    omega = math.pi / t_g
    joint = expm(_lindblad_generator(omega, gamma) * t_g)
    split = expm(_lindblad_generator(0.0, gamma) * t_g) @ expm(_lindblad_generator(omega, 0.0) * t_g)
    ideal = expm(_lindblad_generator(omega, 0.0) * t_g)
    gaps = []
    for a, b in _AXIS_STATES:
        psi = np.array([a, b], dtype=complex)
        rho = np.outer(psi, psi.conj()).reshape(-1, order="F")
        target = (ideal @ rho).reshape(2, 2, order="F")
        fj = np.real(np.trace(target @ (joint @ rho).reshape(2, 2, order="F")))
        fs = np.real(np.trace(target @ (split @ rho).reshape(2, 2, order="F")))
        gaps.append((fj, fs))
    gaps = np.array(gaps)
    return float(abs(gaps[:, 0].mean() - gaps[:, 1].mean()))
