"""Self-verification suite shared by ``maqcy verify`` and the tests."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pulses
from .blockade import collective_rabi_frequency
from .noise import NoiseParams, haar_amplitudes, noisy_translation, noisy_translation_steps
from .pulses import HADAMARD, I2, PAULI_X, SINGLE, SUPERATOM
from .wiregates import TRANSLATIONS, Processor, cz_wiregate, temporal_translation


@dataclass(frozen=True)
class CheckResult:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error <= self.tolerance)


def composite_errors() -> dict[str, float]:
    """Post-correction distance (up to global phase) of every composite identity."""
    d = pulses.global_phase_distance
    return {
        "bitflip_single": d(pulses.global_bitflip(SINGLE), PAULI_X),
        "bitflip_superatom": d(pulses.global_bitflip(SUPERATOM), PAULI_X),
        "superatom_bitflip_single": d(pulses.superatom_only_bitflip(SINGLE), I2),
        "superatom_bitflip_superatom": d(pulses.superatom_only_bitflip(SUPERATOM), PAULI_X),
        "superatom_hadamard_single": d(pulses.superatom_only_hadamard(SINGLE), I2),
        "superatom_hadamard_superatom": d(pulses.superatom_only_hadamard(SUPERATOM), HADAMARD),
    }


def mediator_errors() -> dict[str, float]:
    return {kind: float(np.max(np.abs(pulses.cz_mediator_sequence(kind) + I2)))
            for kind in (SINGLE, SUPERATOM)}


def cz_data_unitary() -> np.ndarray:
    """4x4 data-qubit map of a mediated CZ between two single-atom Q-Pairs."""
    cols = []
    for b in range(4):
        proc = Processor([SINGLE, SINGLE])
        e = np.zeros(4)
        e[b] = 1
        proc.prepare(e)
        cz_wiregate(proc, 1, 2)
        cols.append(proc.data_vector())
    return np.stack(cols, axis=1)


def teleport_infidelities(count: int, seed=0) -> np.ndarray:
    """Infidelity of every (Haar state, nu) pair through one translation."""
    rng = np.random.default_rng(seed)
    alpha, beta = haar_amplitudes(rng, count)
    out = np.zeros((count, len(TRANSLATIONS)))
    for i in range(count):
        v = np.array([alpha[i], beta[i]])
        for j, (nu, (source, _)) in enumerate(TRANSLATIONS.items()):
            proc = Processor([source], replace_aux=False)
            proc.prepare(v)
            temporal_translation(proc, nu)
            out[i, j] = 1 - abs(np.vdot(v, proc.data_vector())) ** 2
    return out


def rabi_errors(ms=(2, 3, 4, 5), omega: float = 1.0) -> dict[int, float]:
    times = np.linspace(0.0, 4 * math.pi / omega, 81)
    return {m: abs(collective_rabi_frequency(m, omega, times) / (math.sqrt(m) * omega) - 1)
            for m in ms}


def closed_form_error(count: int = 100, seed=0) -> float:
    rng = np.random.default_rng(seed)
    alpha, beta = haar_amplitudes(rng, count)
    ps = rng.uniform(0.0, 0.2, count)
    return max(float(np.max(np.abs(noisy_translation_steps(a, b, p)["final"]
                                   - noisy_translation(a, b, p))))
               for a, b, p in zip(alpha, beta, ps))


def run_checks(seed: int = 0, teleport_count: int = 200,
               inject_failure: str | None = None) -> list[CheckResult]:
    """All noiseless identity checks plus the preset sanity lines.

    ``inject_failure`` names a check whose tolerance is forced negative (test hook).
    """
    results: list[CheckResult] = []

    def add(name: str, error: float, tol: float) -> None:
        results.append(CheckResult(name, float(error), -1.0 if name == inject_failure else tol))

    for name, err in composite_errors().items():
        add(f"composite.{name}", err, 1e-10)
    for kind, err in mediator_errors().items():
        add(f"mediator.{kind}", err, 1e-10)
    u = cz_data_unitary()
    add("cz.diag", pulses.global_phase_distance(u, np.diag([1, 1, 1, -1])), 1e-9)
    add("teleport.max_infidelity", teleport_infidelities(teleport_count, seed).max(), 1e-10)
    for m, err in rabi_errors().items():
        add(f"rabi.M{m}", err, 1e-6)
    add("noise.closed_form", closed_form_error(seed=seed), 1e-12)
    preset = NoiseParams()
    add("preset.p_0.0004", abs(round(preset.p, 4) - 0.0004), 0.0)
    add("preset.F_T_0.99", abs(preset.translation_fidelity() - 0.99), 0.005)
    fast = NoiseParams(f_d_mov=0.999)
    add("preset.F_T_0.995", abs(fast.translation_fidelity() - 0.995), 0.005)
    return results


