"""PXP state engine over registered atoms and superatoms.

Every registered (super)atom is an effective two-level system ``{g, r}``.  A
global pulse drives each *active* atom of the addressed species, and each
drive term is projected onto "all active blockade neighbours in g".  Parked
atoms (population shelved in a metastable level during transport) are neither
driven nor blockading.

Basis convention: the first atom of ``QuantumState.atoms`` is the most
significant bit, bit value 0 is ``g`` and 1 is ``r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.optimize import curve_fit

from .pulses import (DEFAULT_M, SINGLE, SUPERATOM, PulseSpec,
                     rotation_angle_unitary)

STATEVECTOR = "statevector"
DENSITY = "density"

EXACT = "exact_exponential"
DERIVED = "derived_unitary"

#: Minimum distance (micrometres) between two distinct atoms.
MIN_SEPARATION = 1e-6
#: Largest register handled by the dense exponential route.
MAX_EXACT_ATOMS = 10
#: Residual Rydberg population tolerated on an atom that leaves the register.
REMOVAL_TOL = 1e-10


class BlockadeError(ValueError):
    """Invalid atom layout or register operation."""


class ProtocolViolation(BlockadeError):
    """An operation would discard quantum information (e.g. removing an excited atom)."""


@dataclass(frozen=True)
class AtomSpec:
    id: str
    species: str
    kind: str = SINGLE
    m: int = 1
    position: tuple[float, float] = (0.0, 0.0)
    parked: bool = False

    def __post_init__(self):
        if self.species not in ("A", "B"):
            raise BlockadeError(f"atom {self.id}: unknown species {self.species!r}")
        if self.kind == SINGLE:
            object.__setattr__(self, "m", 1)
        elif self.kind == SUPERATOM:
            if self.m < 2:
                raise BlockadeError(f"atom {self.id}: superatom needs M >= 2")
        else:
            raise BlockadeError(f"atom {self.id}: unknown kind {self.kind!r}")
        x, y = self.position
        object.__setattr__(self, "position", (float(x), float(y)))

    @property
    def rabi_scale(self) -> float:
        """Collective enhancement sqrt(M) of the Rabi frequency."""
        return math.sqrt(self.m)

    @property
    def atom_count(self) -> int:
        return self.m


def _radius(radii, a: str, b: str) -> float:
    if isinstance(radii, (int, float)):
        return float(radii)
    for key in ((a, b), (b, a), a + b, b + a):
        if key in radii:
            return float(radii[key])
    raise BlockadeError(f"no blockade radius for species pair {a}{b}")


@dataclass(frozen=True)
class BlockadeGraph:
    """Undirected blockade adjacency (PXP: interaction iff distance < r_b)."""

    edges: frozenset = frozenset()

    def neighbors(self, atom_id: str) -> set[str]:
        out = set()
        for edge in self.edges:
            if atom_id in edge:
                out |= edge - {atom_id}
        return out

    def adjacent(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.edges

    def __len__(self) -> int:
        return len(self.edges)


def build_blockade_graph(atoms: Sequence[AtomSpec], radii=5.0) -> BlockadeGraph:
    ids = [a.id for a in atoms]
    if len(set(ids)) != len(ids):
        raise BlockadeError("duplicate atom ids")
    edges = set()
    for a, b in combinations(atoms, 2):
        d = math.dist(a.position, b.position)
        if d < MIN_SEPARATION:
            raise BlockadeError(f"atoms {a.id} and {b.id} occupy the same position")
        r_b = _radius(radii, a.species, b.species)
        if r_b <= 0:
            raise BlockadeError("blockade radii must be positive")
        if d < r_b:
            edges.add(frozenset((a.id, b.id)))
    return BlockadeGraph(frozenset(edges))


@dataclass(frozen=True)
class AtomRegistry:
    """Immutable set of registered atoms with their blockade graph."""

    atoms: tuple[AtomSpec, ...] = ()
    radii: object = 5.0

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        self.graph  # validates ids and positions eagerly

    @cached_property
    def graph(self) -> BlockadeGraph:
        return build_blockade_graph(self.atoms, self.radii)

    @cached_property
    def _by_id(self) -> dict[str, AtomSpec]:
        return {a.id: a for a in self.atoms}

    def __getitem__(self, atom_id: str) -> AtomSpec:
        try:
            return self._by_id[atom_id]
        except KeyError:
            raise KeyError(f"unknown atom {atom_id!r}") from None

    def __contains__(self, atom_id: str) -> bool:
        return atom_id in self._by_id

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.atoms)

    def add(self, atom: AtomSpec) -> "AtomRegistry":
        return AtomRegistry(self.atoms + (atom,), self.radii)

    def remove(self, atom_id: str) -> "AtomRegistry":
        self[atom_id]
        return AtomRegistry(tuple(a for a in self.atoms if a.id != atom_id), self.radii)

    def update(self, atom_id: str, **changes) -> "AtomRegistry":
        self[atom_id]
        return AtomRegistry(tuple(replace(a, **changes) if a.id == atom_id else a
                                  for a in self.atoms), self.radii)

    def active_neighbors(self, atom_id: str) -> set[str]:
        return {n for n in self.graph.neighbors(atom_id) if not self[n].parked}

    def total_atoms(self) -> int:
        """Physical atom count (a superatom counts its M atoms)."""
        return sum(a.atom_count for a in self.atoms)


def parse_registry(text: str, radii=5.0) -> AtomRegistry:
    """Parse ``id species kind M x y`` lines (whitespace or comma separated, ``#`` comments)."""
    atoms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.replace(",", " ").split()
        if len(fields) != 6:
            raise BlockadeError(f"registry line {lineno}: expected 6 fields, got {len(fields)}")
        atom_id, species, kind, m, x, y = fields
        try:
            atoms.append(AtomSpec(atom_id, species, kind, int(m), (float(x), float(y))))
        except ValueError as exc:
            raise BlockadeError(f"registry line {lineno}: {exc}") from None
    return AtomRegistry(tuple(atoms), radii)


def load_registry(path, radii=5.0) -> AtomRegistry:
    return parse_registry(Path(path).read_text(), radii)


def format_registry(registry: AtomRegistry) -> str:
    lines = ["# id species kind M x y"]
    for a in registry.atoms:
        lines.append(f"{a.id} {a.species} {a.kind} {a.m} {a.position[0]:g} {a.position[1]:g}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GlobalPulseEvent:
    pulse: PulseSpec

    @property
    def target_species(self) -> str:
        return self.pulse.species


@dataclass(frozen=True)
class PhaseEvent:
    """Kind-selective diagonal phase diag(1, e^{i phi_kind}) on every active atom of a species.

    Diagonal gates commute with the blockade projectors, so they are applied
    unconditionally (as an instantaneous frame update).
    """

    species: str
    angles: Mapping[str, float] = field(default_factory=dict)

    def angle(self, kind: str) -> float:
        return float(self.angles.get(kind, 0.0))


@dataclass(frozen=True)
class QuantumState:
    """State vector or density operator over an ordered list of atom ids."""

    atoms: tuple[str, ...]
    data: np.ndarray
    representation: str = STATEVECTOR

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        if len(set(self.atoms)) != len(self.atoms):
            raise BlockadeError("duplicate atoms in state")
        dim = 2 ** len(self.atoms)
        data = np.asarray(self.data, dtype=complex)
        expected = (dim,) if self.representation == STATEVECTOR else (dim, dim)
        if self.representation not in (STATEVECTOR, DENSITY):
            raise BlockadeError(f"unknown representation {self.representation!r}")
        if data.shape != expected:
            raise BlockadeError(f"state shape {data.shape} does not match {len(self.atoms)} atoms")
        object.__setattr__(self, "data", data)

    @classmethod
    def ground(cls, atoms: Sequence[str], representation: str = STATEVECTOR) -> "QuantumState":
        dim = 2 ** len(atoms)
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
        if representation == DENSITY:
            return cls(tuple(atoms), np.outer(vec, vec.conj()), DENSITY)
        return cls(tuple(atoms), vec)

    @classmethod
    def product(cls, amplitudes: Mapping[str, Sequence[complex]],
                representation: str = STATEVECTOR) -> "QuantumState":
        vec = np.ones(1, dtype=complex)
        for amps in amplitudes.values():
            vec = np.kron(vec, np.asarray(amps, dtype=complex))
        state = cls(tuple(amplitudes), vec)
        return state.to_density() if representation == DENSITY else state

    @property
    def n(self) -> int:
        return len(self.atoms)

    @property
    def is_density(self) -> bool:
        return self.representation == DENSITY

    def index(self, atom_id: str) -> int:
        try:
            return self.atoms.index(atom_id)
        except ValueError:
            raise KeyError(f"atom {atom_id!r} not in state") from None

    def norm(self) -> float:
        if self.is_density:
            return float(np.real(np.trace(self.data)))
        return float(np.linalg.norm(self.data))

    def to_density(self) -> "QuantumState":
        if self.is_density:
            return self
        return QuantumState(self.atoms, np.outer(self.data, self.data.conj()), DENSITY)

    def probabilities(self) -> np.ndarray:
        if self.is_density:
            return np.clip(np.real(np.diag(self.data)), 0.0, None)
        return np.abs(self.data) ** 2

    def rydberg_population(self, atom_id: str) -> float:
        bit = _bit_mask(self.n, self.index(atom_id))
        probs = self.probabilities()
        return float(probs[(np.arange(probs.size) & bit) != 0].sum())


def _bit_mask(n: int, position: int) -> int:
    return 1 << (n - 1 - position)


def _conditional_indices(n: int, target: int, neighbours: Iterable[int]) -> np.ndarray:
    """Indices with the target bit 0 and every neighbour bit 0."""
    idx = np.arange(2 ** n)
    mask = _bit_mask(n, target)
    for j in neighbours:
        mask |= _bit_mask(n, j)
    return idx[(idx & mask) == 0]


def _check_registry(state: QuantumState, registry: AtomRegistry) -> None:
    if set(state.atoms) != set(registry.ids):
        raise BlockadeError("state atoms and registry atoms differ")


def _targets(state: QuantumState, registry: AtomRegistry, species: str) -> list[AtomSpec]:
    return [registry[a] for a in state.atoms
            if registry[a].species == species and not registry[a].parked]


def _left_apply(data: np.ndarray, op) -> np.ndarray:
    """Apply a vector map to a state vector, or U rho U^dagger to a density matrix."""
    if data.ndim == 1:
        return op(data)
    half = op(data)
    return op(half.conj().T).conj().T


def _derived_apply(state: QuantumState, registry: AtomRegistry, pulse: PulseSpec) -> np.ndarray:
    targets = _targets(state, registry, pulse.species)
    phi = pulse.effective_phase()
    n = state.n
    plan = []
    for atom in targets:
        u = rotation_angle_unitary(pulse.area_theta * atom.rabi_scale, phi)
        nbrs = [state.index(x) for x in registry.active_neighbors(atom.id)]
        idx0 = _conditional_indices(n, state.index(atom.id), nbrs)
        plan.append((u, idx0, idx0 | _bit_mask(n, state.index(atom.id))))

    def op(x: np.ndarray) -> np.ndarray:
        x = x.copy()
        for u, i0, i1 in plan:
            a, b = x[i0].copy(), x[i1].copy()
            x[i0] = u[0, 0] * a + u[0, 1] * b
            x[i1] = u[1, 0] * a + u[1, 1] * b
        return x

    return _left_apply(state.data, op)


def pxp_hamiltonian(state_atoms: Sequence[str], registry: AtomRegistry, species: str,
                    phase: float, omega: float = 1.0) -> np.ndarray:
    """Dense PXP drive Hamiltonian (units of omega) on the full 2^n space."""
    atoms = tuple(state_atoms)
    n = len(atoms)
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i, atom_id in enumerate(atoms):
        atom = registry[atom_id]
        if atom.species != species or atom.parked:
            continue
        nbrs = [atoms.index(x) for x in registry.active_neighbors(atom_id)]
        idx0 = _conditional_indices(n, i, nbrs)
        idx1 = idx0 | _bit_mask(n, i)
        amp = 0.5 * omega * atom.rabi_scale
        h[idx1, idx0] += amp * np.exp(1j * phase)
        h[idx0, idx1] += amp * np.exp(-1j * phase)
    return h


def _evolution(h: np.ndarray, t: float) -> np.ndarray:
    energies, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * energies * t)) @ vecs.conj().T


def _exact_apply(state: QuantumState, registry: AtomRegistry, pulse: PulseSpec) -> np.ndarray:
    if state.n > MAX_EXACT_ATOMS:
        raise BlockadeError(f"exact exponential limited to {MAX_EXACT_ATOMS} atoms; "
                            f"use {DERIVED!r}")
    h = pxp_hamiltonian(state.atoms, registry, pulse.species, pulse.effective_phase())
    u = _evolution(h, pulse.area_theta)
    if state.is_density:
        return u @ state.data @ u.conj().T
    return u @ state.data


def _targets_independent(state: QuantumState, registry: AtomRegistry, species: str) -> bool:
    ids = [a.id for a in _targets(state, registry, species)]
    return not any(registry.graph.adjacent(a, b) for a, b in combinations(ids, 2))


def apply_global_pulse(state: QuantumState, event, registry: AtomRegistry,
                       method: str = DERIVED) -> QuantumState:
    """Evolve ``state`` under one species-selective global pulse.

    ``derived_unitary`` applies the blockade-conditioned 2x2 rotation atom by
    atom, which is exact whenever no two driven atoms blockade each other; in
    the other case it defers to ``exact_exponential``.
    """
    pulse = event.pulse if isinstance(event, GlobalPulseEvent) else event
    _check_registry(state, registry)
    if method == EXACT or (method == DERIVED and not _targets_independent(
            state, registry, pulse.species)):
        data = _exact_apply(state, registry, pulse)
    elif method == DERIVED:
        data = _derived_apply(state, registry, pulse)
    else:
        raise ValueError(f"unknown method {method!r}")
    return QuantumState(state.atoms, data, state.representation)


def apply_phase(state: QuantumState, event: PhaseEvent, registry: AtomRegistry) -> QuantumState:
    _check_registry(state, registry)
    diag = np.ones(2 ** state.n, dtype=complex)
    idx = np.arange(diag.size)
    for atom in _targets(state, registry, event.species):
        angle = event.angle(atom.kind)
        if angle:
            excited = (idx & _bit_mask(state.n, state.index(atom.id))) != 0
            diag[excited] *= np.exp(1j * angle)
    if state.is_density:
        data = diag[:, None] * state.data * diag.conj()[None, :]
    else:
        data = diag * state.data
    return QuantumState(state.atoms, data, state.representation)


def insert_atom(state: QuantumState, atom_id: str) -> QuantumState:
    """Append a fresh atom in its ground state (tensor-factor insertion)."""
    if atom_id in state.atoms:
        raise BlockadeError(f"atom {atom_id} already present")
    g = np.array([1.0, 0.0], dtype=complex)
    if state.is_density:
        data = np.kron(state.data, np.outer(g, g))
    else:
        data = np.kron(state.data, g)
    return QuantumState(state.atoms + (atom_id,), data, state.representation)


def remove_atom(state: QuantumState, atom_id: str, tol: float = REMOVAL_TOL) -> QuantumState:
    """Drop an atom that sits in its ground state; the rest of the state is untouched."""
    pop = state.rydberg_population(atom_id)
    if pop > tol:
        raise ProtocolViolation(f"removing atom {atom_id} with excited population {pop:.3g} "
                                "would break the blockade protocol")
    k = state.index(atom_id)
    n = state.n
    atoms = state.atoms[:k] + state.atoms[k + 1:]
    if state.is_density:
        t = state.data.reshape((2,) * (2 * n))
        sl = [slice(None)] * (2 * n)
        sl[k] = 0
        sl[n + k] = 0
        data = t[tuple(sl)].reshape(2 ** (n - 1), 2 ** (n - 1))
        data = data / np.real(np.trace(data))
    else:
        t = state.data.reshape((2,) * n)
        data = np.take(t, 0, axis=k).reshape(-1)
        data = data / np.linalg.norm(data)
    return QuantumState(atoms, data, state.representation)


def _outcome_label(bits: Sequence[int]) -> str:
    return "".join("r" if b else "g" for b in bits)


def measure(state: QuantumState, atoms: Sequence[str]) -> dict[str, float]:
    """Born-rule distribution over ``g``/``r`` strings for the listed atoms (in order)."""
    positions = [state.index(a) for a in atoms]
    probs = state.probabilities().reshape((2,) * state.n)
    others = tuple(i for i in range(state.n) if i not in positions)
    marg = probs.sum(axis=others) if others else probs
    # remaining axes are in increasing position order; reorder to the requested order
    order = np.argsort(np.argsort(positions))
    marg = np.transpose(marg, axes=order) if len(positions) > 1 else marg
    total = marg.sum()
    out = {}
    for bits in np.ndindex(*(2,) * len(atoms)):
        out[_outcome_label(bits)] = float(marg[bits] / total)
    return out


def sample(state: QuantumState, atoms: Sequence[str], shots: int, seed=None) -> dict[str, int]:
    dist = measure(state, atoms)
    labels = list(dist)
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, [dist[k] for k in labels])
    return {k: int(c) for k, c in zip(labels, counts) if c}


def blockaded_ensemble(m: int, spacing: float = 1.0, species: str = "A") -> AtomRegistry:
    """M single atoms on a small ring, all pairwise inside one blockade radius."""
    if m == 1:
        return AtomRegistry((AtomSpec("e0", species),), 5.0)
    radius = spacing / (2 * math.sin(math.pi / m))
    atoms = tuple(AtomSpec(f"e{i}", species, position=(radius * math.cos(2 * math.pi * i / m),
                                                     radius * math.sin(2 * math.pi * i / m)))
                  for i in range(m))
    return AtomRegistry(atoms, 2 * radius + spacing)


def collective_rabi_frequency(m: int, omega: float, duration_grid: Sequence[float]) -> float:
    """Fit the ground-state Rabi frequency of a fully blockaded M-atom ensemble.

    The ensemble is simulated in its full 2^M product space; the ground-state
    population ``cos^2(W t / 2)`` is fitted for ``W``.
    """
    if not 1 <= m <= 6:
        raise ValueError("collective simulation supports 1 <= M <= 6")
    times = np.asarray(duration_grid, dtype=float)
    if times.size < 4:
        raise ValueError("need at least four durations")
    registry = blockaded_ensemble(m)
    if m > 1 and len(registry.graph) != m * (m - 1) // 2:
        raise BlockadeError("ensemble is not fully blockaded")
    h = pxp_hamiltonian(registry.ids, registry, "A", 0.0, omega)
    energies, vecs = np.linalg.eigh(h)
    ground_overlap = vecs[0, :].conj()
    amps = (np.exp(-1j * np.outer(times, energies)) * ground_overlap) @ vecs.T
    p_ground = np.abs(amps[:, 0]) ** 2

    # Initial estimate from the first half period, then least-squares refinement.
    first = np.argmax(p_ground < 0.999) if np.any(p_ground < 0.999) else 1
    first = max(first, 1)
    guess = np.arccos(np.clip(2 * p_ground[first] - 1, -1, 1)) / times[first]

    def model(t, w):
        return np.cos(w * t / 2) ** 2

    (w_fit,), _ = curve_fit(model, times, p_ground, p0=[guess], xtol=1e-15, ftol=1e-15,
                            gtol=1e-15, maxfev=10000)
    return float(abs(w_fit))


def superatom(atom_id: str, species: str, position=(0.0, 0.0), m: int = DEFAULT_M) -> AtomSpec:
    return AtomSpec(atom_id, species, SUPERATOM, m, position)
