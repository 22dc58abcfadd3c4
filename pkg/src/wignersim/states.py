"""Dense exact states, density matrices, and projectors over labeled factors.

All values are immutable after construction and every operation is a pure
function, so anything built here can be shared freely between threads or
cached without copying.  Numeric conventions:

* construction invariants (normalization, hermiticity, trace) hold to 1e-12,
* positive semidefiniteness allows eigenvalues down to -1e-10,
* computed probabilities are compared against exact fractions at 1e-9.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np

from .registry import Subsystem, SubsystemRegistry

ATOL_CONSTRUCT = 1e-12
ATOL_PSD = 1e-10
ATOL_PROB = 1e-9


class ZeroProbabilityError(ValueError):
    """Raised when conditioning on an event of (numerically) zero probability."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


def _format_coefficient(z: complex) -> str:
    if abs(z.imag) < 1e-12:
        return f"{z.real:.8g}"
    return f"({z.real:.8g}{z.imag:+.8g}j)"


@dataclass(frozen=True)
class StateVector:
    """Pure state over a registry; amplitudes are flat in canonical C-order."""

    registry: SubsystemRegistry
    amplitudes: np.ndarray
    normalized: bool = True

    def __post_init__(self) -> None:
        amps = _freeze(np.asarray(self.amplitudes).reshape(-1))
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape[0] != self.registry.total_dimension:
            raise ValueError(
                f"amplitude length {amps.shape[0]} does not match registry "
                f"dimension {self.registry.total_dimension}"
            )
        if self.normalized:
            norm_sq = float(np.sum(np.abs(amps) ** 2))
            if abs(norm_sq - 1.0) > ATOL_CONSTRUCT:
                raise ValueError(
                    f"state not normalized: |psi|^2 = {norm_sq!r} "
                    "(pass normalized=False for an unnormalized branch)"
                )

    @classmethod
    def from_terms(
        cls,
        registry: SubsystemRegistry,
        terms: Mapping[Union[str, tuple[str, ...]], complex],
        normalized: bool = True,
    ) -> "StateVector":
        """Build from {product-basis label tuple: amplitude} (str ok for 1 factor)."""
        amps = np.zeros(registry.total_dimension, dtype=np.complex128)
        for key, coeff in terms.items():
            labels = (key,) if isinstance(key, str) else tuple(key)
            amps[registry.flat_index(labels)] += coeff
        return cls(registry, amps, normalized=normalized)

    @classmethod
    def basis_state(
        cls, registry: SubsystemRegistry, labels: Union[str, tuple[str, ...]]
    ) -> "StateVector":
        return cls.from_terms(registry, {labels: 1.0})

    @property
    def dims(self) -> tuple[int, ...]:
        return self.registry.dims

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def renormalized(self) -> "StateVector":
        n = self.norm()
        if n <= 1e-12:
            raise ZeroProbabilityError("cannot renormalize a numerically zero state")
        return StateVector(self.registry, self.amplitudes / n, normalized=True)

    def amplitude(self, labels: Union[str, tuple[str, ...]]) -> complex:
        labels = (labels,) if isinstance(labels, str) else tuple(labels)
        return complex(self.amplitudes[self.registry.flat_index(labels)])

    def tensored(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims)

    def density_matrix(self) -> "DensityMatrix":
        if not self.normalized:
            return DensityMatrix(
                self.registry,
                np.outer(self.amplitudes, self.amplitudes.conj()),
                subnormalized=True,
            )
        return DensityMatrix(
            self.registry, np.outer(self.amplitudes, self.amplitudes.conj())
        )

    def __str__(self) -> str:
        parts = []
        for i, amp in enumerate(self.amplitudes):
            if abs(amp) <= 1e-12:
                continue
            labels = ",".join(self.registry.basis_tuple(i))
            parts.append(f"{_format_coefficient(complex(amp))} |{labels}⟩")
        return " + ".join(parts) if parts else "0"


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace operator over a registry.

    ``subnormalized=True`` marks a conditional block whose trace may be < 1.
    """

    registry: SubsystemRegistry
    entries: np.ndarray
    subnormalized: bool = False

    def __post_init__(self) -> None:
        mat = np.ascontiguousarray(np.asarray(self.entries), dtype=np.complex128)
        d = self.registry.total_dimension
        if mat.shape != (d, d):
            raise ValueError(f"entries shape {mat.shape} does not match dimension {d}")
        if np.max(np.abs(mat - mat.conj().T)) > ATOL_CONSTRUCT:
            raise ValueError("density matrix is not Hermitian within 1e-12")
        if not self.subnormalized:
            tr = complex(np.trace(mat))
            if abs(tr - 1.0) > ATOL_CONSTRUCT:
                raise ValueError(f"density matrix trace {tr!r} != 1 within 1e-12")
        eigmin = float(np.min(np.linalg.eigvalsh(mat)))
        if eigmin < -ATOL_PSD:
            raise ValueError(f"density matrix has negative eigenvalue {eigmin!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "entries", mat)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.registry.dims

    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector on named target factors, identity elsewhere.

    The stored operator acts on the target factors in the declared
    ``target_labels`` order; embedding into any host registry containing those
    labels happens lazily in :meth:`matrix_on`.
    """

    target_labels: tuple[str, ...]
    target_registry: SubsystemRegistry
    operator: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        op = np.ascontiguousarray(np.asarray(self.operator), dtype=np.complex128)
        d = self.target_registry.total_dimension
        if tuple(self.target_labels) != self.target_registry.labels:
            raise ValueError("target_labels must match the target registry order")
        if op.shape != (d, d):
            raise ValueError(f"operator shape {op.shape} does not match dimension {d}")
        if np.max(np.abs(op - op.conj().T)) > ATOL_CONSTRUCT:
            raise ValueError("projector is not Hermitian within 1e-12")
        if np.max(np.abs(op @ op - op)) > ATOL_CONSTRUCT:
            raise ValueError("projector is not idempotent within 1e-12")
        op.setflags(write=False)
        object.__setattr__(self, "operator", op)

    def _check_host(self, registry: SubsystemRegistry) -> None:
        for sub in self.target_registry.subsystems:
            if sub.label not in registry:
                raise ValueError(f"registry mismatch: no subsystem {sub.label!r}")
            host = registry.subsystem(sub.label)
            if host.basis_labels != sub.basis_labels:
                raise ValueError(
                    f"registry mismatch: subsystem {sub.label!r} bases differ"
                )

    def matrix_on(self, registry: SubsystemRegistry) -> np.ndarray:
        """Embed as a full matrix on the host registry (identity padding)."""
        self._check_host(registry)
        return embed_operator(registry, self.operator, self.target_labels)


def embed_operator(
    registry: SubsystemRegistry, op: np.ndarray, target_labels: Iterable[str]
) -> np.ndarray:
    """Pad an operator on the named factors with identity on all others.

    ``op`` is indexed in the declared target order, which need not be the
    registry-relative order; axes are permuted back into canonical order.
    """
    targets = tuple(target_labels)
    dims = registry.dims
    n = len(dims)
    target_axes = [registry.axis(l) for l in targets]
    rest_axes = [i for i in range(n) if i not in target_axes]
    d_rest = math.prod(dims[i] for i in rest_axes) if rest_axes else 1
    full = np.kron(np.asarray(op, dtype=np.complex128), np.eye(d_rest))
    cur_axes = target_axes + rest_axes
    cur_dims = [dims[a] for a in cur_axes]
    perm = [cur_axes.index(i) for i in range(n)]
    tens = full.reshape(cur_dims + cur_dims)
    tens = tens.transpose(perm + [p + n for p in perm])
    d = registry.total_dimension
    return np.ascontiguousarray(tens.reshape(d, d))


def tensor(a: StateVector, b: StateVector) -> StateVector:
    """Tensor product; the result lives on the concatenated registry."""
    registry = a.registry.combined(b.registry)
    amps = np.kron(a.amplitudes, b.amplitudes)
    return StateVector(registry, amps, normalized=a.normalized and b.normalized)


def partial_trace(rho: DensityMatrix, keep: Iterable[str]) -> DensityMatrix:
    """Trace out every subsystem not named in ``keep``; trace is preserved."""
    keep = set(keep)
    if not keep:
        raise ValueError("keep must be a nonempty set of labels")
    sub_registry = rho.registry.restricted(keep)  # validates the labels
    dims = list(rho.registry.dims)
    n = len(dims)
    discard_axes = sorted(
        (i for i, s in enumerate(rho.registry.subsystems) if s.label not in keep),
        reverse=True,
    )
    tens = rho.entries.reshape(dims + dims)
    for ax in discard_axes:
        tens = np.trace(tens, axis1=ax, axis2=ax + n)
        n -= 1
    d = sub_registry.total_dimension
    return DensityMatrix(sub_registry, tens.reshape(d, d), subnormalized=rho.subnormalized)


def projector_from_basis_vector(
    v: StateVector, targets: Iterable[str] | None = None
) -> Projector:
    """Rank-1 projector |v><v| on v's factors, identity on all other labels."""
    labels = v.registry.labels
    if targets is not None and set(targets) != set(labels):
        raise ValueError(
            f"targets {sorted(set(targets))} do not match the vector's labels {labels}"
        )
    norm = v.norm()
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"basis vector not normalized: |v| = {norm!r}")
    op = np.outer(v.amplitudes, v.amplitudes.conj())
    return Projector(labels, v.registry, op)


def basis_projectors(sub: Subsystem) -> dict[str, Projector]:
    """Complete family of rank-1 projectors onto one subsystem's basis states."""
    registry = SubsystemRegistry((sub,))
    out = {}
    for label in sub.basis_labels:
        out[label] = projector_from_basis_vector(
            StateVector.basis_state(registry, label)
        )
    return out


def born_probability(
    state: Union[StateVector, DensityMatrix], proj: Projector
) -> float:
    """tr(rho P), or <psi|P|psi>, clamped into [0, 1] after a tolerance check."""
    full = proj.matrix_on(state.registry)
    if isinstance(state, StateVector):
        value = float(np.real(np.vdot(state.amplitudes, full @ state.amplitudes)))
    else:
        value = float(np.real(np.trace(state.entries @ full)))
    if value < -ATOL_PSD:
        raise ValueError(f"Born probability {value!r} below -1e-10")
    if value > 1.0 + ATOL_PROB:
        raise ValueError(f"Born probability {value!r} above 1")
    return min(max(value, 0.0), 1.0)
