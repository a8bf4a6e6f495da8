"""LOCC protocol simulation: local projective measurements, broadcasts, discrimination, teleportation.

Pure states are held as a product of blocks, each block a tensor over a subset
of qudits. Blocks merge only when a local operation spans several of them, and
a projective measurement splits the measured qudits back off into their own
block. Every step is appended to a :class:`LoccTranscript` that can be audited
for locality.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .linalg_core import SubsystemLayout, ptrace
from .qudit_states import (
    BellLabel,
    Ket,
    MesFamily,
    bell_vector,
    computational_basis,
    fourier_basis,
    weyl_from_ints,
    weyl_operator,
)

PRUNE_PROB = 1e-14
ORTHO_TOL = 1e-10


class UnreachableBranch(RuntimeError):
    """A forced outcome has (numerically) zero probability."""


class OutcomeSource:
    """Chooses measurement outcomes: Born sampling from a seeded RNG, or a forced list."""

    def __init__(self, seed: Optional[int] = 0, forced: Optional[Sequence[int]] = None):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.forced = None if forced is None else list(forced)
        self._pos = 0

    def choose(self, probs: np.ndarray) -> int:
        if self.forced is not None:
            if self._pos >= len(self.forced):
                raise IndexError("forced outcome list exhausted")
            k = int(self.forced[self._pos])
            self._pos += 1
            if probs[k] < PRUNE_PROB:
                raise UnreachableBranch(f"outcome {k} has probability {probs[k]:.3e}")
            return k
        p = np.clip(probs, 0, None)
        p = p / p.sum()
        return int(self.rng.choice(len(p), p=p))


def _source(rng) -> OutcomeSource:
    if isinstance(rng, OutcomeSource):
        return rng
    return OutcomeSource(rng)


@dataclass(frozen=True)
class MeasurementEvent:
    party: str
    qudits: tuple[int, ...]
    basis: str
    outcome: int
    probability: float
    probabilities: tuple[float, ...]
    kind: str = "measure"


@dataclass(frozen=True)
class BroadcastEvent:
    sender: str
    message: object
    kind: str = "broadcast"


@dataclass(frozen=True)
class LocalUnitaryEvent:
    party: str
    qudits: tuple[int, ...]
    operation: str
    kind: str = "unitary"


Event = Union[MeasurementEvent, BroadcastEvent, LocalUnitaryEvent]


@dataclass
class LoccTranscript:
    layout: SubsystemLayout
    seed: Optional[int] = None
    events: list = field(default_factory=list)

    def measurements(self) -> list[MeasurementEvent]:
        return [e for e in self.events if isinstance(e, MeasurementEvent)]

    def broadcasts(self) -> list[BroadcastEvent]:
        return [e for e in self.events if isinstance(e, BroadcastEvent)]

    def broadcast(self, sender: str, message) -> None:
        self.layout.qudits_of(sender)
        self.events.append(BroadcastEvent(sender, message))

    def audit(self) -> list[str]:
        """Return a list of locality violations; empty means the run was LOCC."""
        problems = []
        for i, e in enumerate(self.events):
            if isinstance(e, (MeasurementEvent, LocalUnitaryEvent)):
                try:
                    owned = set(self.layout.qudits_of(e.party))
                except ValueError as exc:
                    problems.append(f"event {i}: {exc}")
                    continue
                if not set(e.qudits) <= owned:
                    problems.append(f"event {i}: party {e.party} acted on foreign qudits {e.qudits}")
            if isinstance(e, MeasurementEvent):
                if abs(sum(e.probabilities) - 1) > 1e-12:
                    problems.append(f"event {i}: outcome probabilities sum to {sum(e.probabilities)}")
            elif isinstance(e, BroadcastEvent):
                if not _is_classical(e.message):
                    problems.append(f"event {i}: non-classical message {e.message!r}")
                if e.sender not in self.layout.party_names:
                    problems.append(f"event {i}: unknown sender {e.sender}")
        return problems

    def is_locc(self) -> bool:
        return not self.audit()

    def to_jsonl(self) -> str:
        lines = []
        for e in self.events:
            row = {k: v for k, v in e.__dict__.items()}
            if "qudits" in row:
                row["qudits"] = list(row["qudits"])
            if "probabilities" in row:
                row["probabilities"] = list(row["probabilities"])
            row["seed"] = self.seed
            lines.append(json.dumps(row, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")


def _is_classical(msg) -> bool:
    if isinstance(msg, (bool, int, str)) or isinstance(msg, np.integer):
        return True
    if isinstance(msg, (tuple, list)):
        return all(_is_classical(x) for x in msg)
    return False


class PureState:
    """Multi-qudit pure state stored as a product of blocks."""

    def __init__(self, layout: SubsystemLayout, blocks: Sequence[tuple[Sequence[int], np.ndarray]]):
        self.layout = layout
        self.blocks: list[tuple[tuple[int, ...], np.ndarray]] = []
        seen: list[int] = []
        for qudits, vec in blocks:
            qudits = tuple(int(q) for q in qudits)
            shape = tuple(layout.dims[q] for q in qudits)
            t = np.asarray(vec, dtype=complex).reshape(shape)
            self.blocks.append((qudits, t))
            seen += qudits
        if sorted(seen) != list(range(layout.num_qudits)):
            raise ValueError("blocks must cover every qudit exactly once")

    @classmethod
    def from_pairs(cls, d: int, labels: Sequence[BellLabel], parties: Sequence[str]) -> "PureState":
        """One Bell pair per consecutive qudit pair: labels[k] on qudits (2k, 2k+1)."""
        layout = SubsystemLayout.uniform(d, parties)
        if len(parties) != 2 * len(labels):
            raise ValueError("need two parties per Bell pair")
        blocks = [((2 * k, 2 * k + 1), bell_vector(d, lb.n, lb.m)) for k, lb in enumerate(labels)]
        return cls(layout, blocks)

    def copy(self) -> "PureState":
        return PureState(self.layout, [(q, t.copy()) for q, t in self.blocks])

    def _block_of(self, q: int) -> int:
        for i, (qs, _) in enumerate(self.blocks):
            if q in qs:
                return i
        raise IndexError(f"qudit {q} not in state")

    def _merge(self, qudits: Sequence[int]) -> int:
        idx = sorted({self._block_of(q) for q in qudits})
        if len(idx) == 1:
            return idx[0]
        qs: tuple[int, ...] = ()
        t = None
        for i in idx:
            bq, bt = self.blocks[i]
            qs += bq
            t = bt if t is None else np.multiply.outer(t, bt)
        self.blocks = [b for i, b in enumerate(self.blocks) if i not in idx]
        self.blocks.append((qs, t))
        return len(self.blocks) - 1

    def _front(self, qudits: Sequence[int]) -> tuple[int, tuple[int, ...], np.ndarray]:
        """Merge, then return (block index, remaining qudits, matrix with ``qudits`` as rows)."""
        i = self._merge(qudits)
        bq, bt = self.blocks[i]
        pos = [bq.index(q) for q in qudits]
        rest = tuple(q for q in bq if q not in qudits)
        rest_pos = [bq.index(q) for q in rest]
        dm = int(np.prod([self.layout.dims[q] for q in qudits]))
        mat = bt.transpose(pos + rest_pos).reshape(dm, -1)
        return i, rest, mat

    def _check_local(self, party: str, qudits: Optional[Sequence[int]]) -> tuple[int, ...]:
        owned = self.layout.qudits_of(party)
        if qudits is None:
            return owned
        qudits = tuple(int(q) for q in qudits)
        if not set(qudits) <= set(owned):
            raise ValueError(f"party {party} does not hold qudits {qudits}")
        return qudits

    def apply(self, unitary: np.ndarray, qudits: Sequence[int]) -> None:
        qudits = tuple(qudits)
        i, rest, mat = self._front(qudits)
        new = np.asarray(unitary) @ mat
        shape = tuple(self.layout.dims[q] for q in qudits + rest)
        self.blocks[i] = (qudits + rest, new.reshape(shape))

    def branch_amplitudes(self, qudits: Sequence[int], basis: np.ndarray):
        """Unnormalized post-measurement vectors of the other qudits, one row per outcome."""
        i, rest, mat = self._front(tuple(qudits))
        return i, rest, basis.conj() @ mat

    def ket(self, qudits: Sequence[int]) -> np.ndarray:
        """State vector of ``qudits``; they must not be entangled with anything else."""
        qudits = tuple(qudits)
        idx = {self._block_of(q) for q in qudits}
        covered = [q for i in idx for q in self.blocks[i][0]]
        if sorted(covered) != sorted(qudits):
            raise ValueError(f"qudits {qudits} share a block with other qudits")
        i, rest, mat = self._front(qudits)
        return mat.reshape(-1)

    def reduced_density(self, qudits: Sequence[int]) -> np.ndarray:
        """Reduced density matrix of ``qudits`` (kept in the given order)."""
        qudits = tuple(qudits)
        idx = sorted({self._block_of(q) for q in qudits})
        out = None
        order: tuple[int, ...] = ()
        for i in idx:
            bq, bt = self.blocks[i]
            keep = [bq.index(q) for q in bq if q in qudits]
            v = bt.reshape(-1)
            red = ptrace(np.outer(v, v.conj()), [self.layout.dims[q] for q in bq], keep)
            out = red if out is None else np.kron(out, red)
            order += tuple(q for q in bq if q in qudits)
        perm = [order.index(q) for q in qudits]
        dims = [self.layout.dims[q] for q in order]
        n = len(order)
        t = out.reshape(tuple(dims) * 2).transpose(perm + [n + p for p in perm])
        dim = int(np.prod(dims))
        return t.reshape(dim, dim)

    def norm(self) -> float:
        return float(np.prod([np.linalg.norm(t) for _, t in self.blocks]))


@dataclass(frozen=True)
class MeasurementOutcome:
    outcome: int
    probability: float
    post_state: PureState
    event: MeasurementEvent


def _basis_matrix(basis: Sequence, dim: int) -> np.ndarray:
    rows = [np.asarray(b.vector if isinstance(b, Ket) else b, dtype=complex).reshape(-1) for b in basis]
    mat = np.array(rows)
    if mat.shape != (dim, dim):
        raise ValueError(f"basis must have {dim} vectors of dimension {dim}, got shape {mat.shape}")
    dev = np.max(np.abs(mat.conj() @ mat.T - np.eye(dim)))
    if dev > ORTHO_TOL:
        raise ValueError(f"basis is not orthonormal (max Gram deviation {dev:.3e})")
    return mat


def measure_local(
    state: PureState,
    party: str,
    basis: Sequence,
    rng=0,
    transcript: Optional[LoccTranscript] = None,
    qudits: Optional[Sequence[int]] = None,
    basis_name: str = "custom",
) -> MeasurementOutcome:
    """Projective measurement by one party on its own qudits.

    ``rng`` is a seed, or an :class:`OutcomeSource` to share sampling state
    across steps or force particular branches. The state is updated in place:
    the measured qudits end up in the observed basis vector, in a block of
    their own.
    """
    source = _source(rng)
    qudits = state._check_local(party, qudits)
    dim = int(np.prod([state.layout.dims[q] for q in qudits]))
    bmat = _basis_matrix(basis, dim)
    i, rest, amps = state.branch_amplitudes(qudits, bmat)
    probs = np.sum(np.abs(amps) ** 2, axis=1)
    total = probs.sum()
    probs = probs / total
    k = source.choose(probs)
    p = float(probs[k])
    blocks = [b for j, b in enumerate(state.blocks) if j != i]
    blocks.append((qudits, bmat[k].reshape(tuple(state.layout.dims[q] for q in qudits))))
    if rest:
        post = amps[k] / np.linalg.norm(amps[k])
        blocks.append((rest, post.reshape(tuple(state.layout.dims[q] for q in rest))))
    state.blocks = blocks
    event = MeasurementEvent(party, tuple(qudits), basis_name, k, p, tuple(float(x) for x in probs))
    if transcript is not None:
        transcript.events.append(event)
    return MeasurementOutcome(k, p, state, event)


def apply_local(
    state: PureState,
    party: str,
    unitary: np.ndarray,
    transcript: Optional[LoccTranscript] = None,
    qudits: Optional[Sequence[int]] = None,
    name: str = "unitary",
) -> None:
    qudits = state._check_local(party, qudits)
    u = np.asarray(unitary)
    if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > ORTHO_TOL:
        raise ValueError("local operation is not unitary")
    state.apply(u, qudits)
    if transcript is not None:
        transcript.events.append(LocalUnitaryEvent(party, tuple(qudits), name))


# Discrimination protocols


def _measure_pair(state, parties, basis, name, source, transcript) -> tuple[int, int]:
    a = measure_local(state, parties[0], basis, source, transcript, basis_name=name).outcome
    transcript.broadcast(parties[0], a)
    b = measure_local(state, parties[1], basis, source, transcript, basis_name=name).outcome
    transcript.broadcast(parties[1], b)
    return a, b


def infer_shift(a: int, b: int, d: int) -> int:
    return (b - a) % d


def infer_phase(a: int, b: int, d: int) -> int:
    # <f_a f_b|psi_nm> is nonzero only when n + a + b = 0 mod d
    return (-(a + b)) % d


def discriminate_pair(
    state: PureState, parties: tuple[str, str], family: MesFamily, source: OutcomeSource, transcript: LoccTranscript
) -> BellLabel:
    d = family.d
    if family.kind == "shift":
        a, b = _measure_pair(state, parties, computational_basis(d), "computational", source, transcript)
        return BellLabel(family.fixed_index, infer_shift(a, b, d), d)
    a, b = _measure_pair(state, parties, fourier_basis(d), "fourier", source, transcript)
    return BellLabel(infer_phase(a, b, d), family.fixed_index, d)


@dataclass
class DiscriminationResult:
    inferred: BellLabel
    transcript: LoccTranscript
    probability: float
    state: PureState


def _branch_probability(transcript: LoccTranscript) -> float:
    return float(np.prod([e.probability for e in transcript.measurements()]))


def discriminate_single_copy(
    family: MesFamily, hidden: BellLabel, rng_seed: Optional[int] = 0, forced: Optional[Sequence[int]] = None
) -> DiscriminationResult:
    """Identify which family member two parties share, using one copy.

    Shift family: both measure in the computational basis, ``m = b - a``.
    Phase family: both measure in the Fourier basis, ``n = -(a + b)``.
    """
    if hidden not in family:
        raise ValueError(f"hidden label {hidden} is not in the {family.kind} family")
    source = OutcomeSource(rng_seed, forced)
    state = PureState.from_pairs(family.d, [hidden], ("A", "B"))
    transcript = LoccTranscript(state.layout, rng_seed)
    inferred = discriminate_pair(state, ("A", "B"), family, source, transcript)
    return DiscriminationResult(inferred, transcript, _branch_probability(transcript), state)


def discriminate_copies(
    state: PureState, copy1: tuple[str, str], copy2: tuple[str, str], d: int, source, transcript
) -> BellLabel:
    m = discriminate_pair(state, copy1, MesFamily.shift(d, 0), source, transcript).m
    n = discriminate_pair(state, copy2, MesFamily.phase(d, 0), source, transcript).n
    return BellLabel(n, m, d)


def discriminate_two_copy(
    d: int, hidden: BellLabel, rng_seed: Optional[int] = 0, forced: Optional[Sequence[int]] = None
) -> DiscriminationResult:
    """Identify any of the d**2 Bell states from two copies.

    Copy 1 is measured in the computational basis (fixes ``m``), copy 2 in
    the Fourier basis (fixes ``n``); the phase inference is insensitive to
    ``m`` so the two readouts combine directly.
    """
    if hidden.d != d:
        raise ValueError(f"label dimension {hidden.d} does not match d={d}")
    source = OutcomeSource(rng_seed, forced)
    state = PureState.from_pairs(d, [hidden, hidden], ("A0", "B0", "A1", "B1"))
    transcript = LoccTranscript(state.layout, rng_seed)
    inferred = discriminate_copies(state, ("A0", "B0"), ("A1", "B1"), d, source, transcript)
    return DiscriminationResult(inferred, transcript, _branch_probability(transcript), state)


def enumerate_branches(run: Callable[[Sequence[int]], object], num_measurements: int, num_outcomes: int) -> list:
    """Run ``run(forced)`` over every outcome sequence, skipping zero-probability branches.

    Returns ``(outcomes, result)`` pairs for the reachable branches.
    """
    out = []
    for forced in itertools.product(range(num_outcomes), repeat=num_measurements):
        try:
            out.append((forced, run(forced)))
        except UnreachableBranch:
            continue
    return out


# Teleportation


def bell_basis(d: int) -> list[np.ndarray]:
    """Two-qudit Bell basis, outcome index ``k*d + l`` for ``psi_kl``."""
    return [bell_vector(d, k, l) for k in range(d) for l in range(d)]


def teleport_correction(d: int, outcome: BellLabel, corrections_for: BellLabel) -> np.ndarray:
    """Receiver's correction after a Bell outcome ``(k, l)``.

    Through a ``psi_00`` channel the receiver holds ``X**l Z**-k`` applied to the
    input; for a channel assumed to be ``psi_c`` this is preceded by ``W_c``.
    """
    v = weyl_from_ints(d, -outcome.n, outcome.m)
    return (weyl_operator(corrections_for) @ v).conj().T


@dataclass
class TeleportResult:
    output: Ket
    outcome: BellLabel
    transcript: LoccTranscript
    probability: float
    state: PureState


def teleport(
    input_ket: Union[Ket, np.ndarray],
    channel: BellLabel,
    corrections_for: Optional[BellLabel] = None,
    rng_seed: Optional[int] = 0,
    forced: Optional[Sequence[int]] = None,
) -> TeleportResult:
    """Teleport a qudit from Alice (qudits 0, 1) to Bob (qudit 2).

    Alice holds the input on qudit 0 and half of the channel ``|psi_channel>`` on
    qudit 1; she measures both in the Bell basis and broadcasts ``(k, l)``. Bob
    corrects as if the channel were ``corrections_for`` (default: the channel).
    """
    d = channel.d
    corrections_for = channel if corrections_for is None else corrections_for
    if corrections_for.d != d:
        raise ValueError("channel and correction labels differ in dimension")
    vec = np.asarray(input_ket.vector if isinstance(input_ket, Ket) else input_ket, dtype=complex).reshape(-1)
    if vec.size != d:
        raise ValueError(f"input of dimension {vec.size} does not match channel dimension {d}")
    if abs(np.linalg.norm(vec) - 1) > 1e-10:
        raise ValueError("input ket is not normalized")
    layout = SubsystemLayout.uniform(d, ("Alice", "Alice", "Bob"))
    state = PureState(layout, [((0,), vec), ((1, 2), bell_vector(d, channel.n, channel.m))])
    transcript = LoccTranscript(layout, rng_seed)
    source = OutcomeSource(rng_seed, forced)
    res = measure_local(state, "Alice", bell_basis(d), source, transcript, basis_name="bell")
    outcome = BellLabel(res.outcome // d, res.outcome % d, d)
    transcript.broadcast("Alice", outcome.pair)
    corr = teleport_correction(d, outcome, corrections_for)
    apply_local(state, "Bob", corr, transcript, name=f"teleport-correction{outcome.pair}")
    out = state.ket((2,))
    out = out / np.linalg.norm(out)
    return TeleportResult(
        Ket(out, SubsystemLayout((d,), ("Bob",))), outcome, transcript, res.probability, state
    )
