"""Noisy measurement simulation for tomography circuits.

Every two-level gate is followed by a depolarizing channel of strength
`gate_depol_p`; preparation and readout errors come from the configured
initial state and readout POVM.  Protocols run with an equal shot split:
floor(total / n) shots per circuit, one extra for the first total mod n
circuits.  All sampling is reproducible from a 64-bit root seed.
"""

from dataclasses import dataclass

import numpy as np

from . import qcore, readout
from .circuits import gate_unitary
from .protocols import TomographyProtocol


@dataclass(frozen=True)
class GibbsInit:
    """Thermal initialization parameters."""

    temperature: float
    omegas: tuple

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) for w in self.omegas))
        readout.gibbs_populations(self.temperature, np.asarray(self.omegas))


@dataclass(frozen=True)
class LevelReadoutError:
    """False-negative (b0) and false-positive (b1) rates of a level read."""

    b0: float
    b1: float

    def __post_init__(self):
        for name, val in (("b0", self.b0), ("b1", self.b1)):
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")


@dataclass(frozen=True)
class NoiseConfig:
    """Noise model of a simulated experiment.

    init: None (perfect |0>), GibbsInit, or explicit level populations.
    readout: None (projective), LevelReadoutError (cascade readout), or an
    explicit column-stochastic response matrix.
    `truth_depol_p` is not applied here; experiment drivers use it to
    depolarize the state or process under study.
    """

    gate_depol_p: float = 0.0
    truth_depol_p: float = 0.0
    init: object = None
    readout: object = None

    def __post_init__(self):
        for name in ("gate_depol_p", "truth_depol_p"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {val}")

    def initial_state(self, dim):
        if self.init is None:
            return qcore.projector(qcore.ket(0, dim))
        if isinstance(self.init, GibbsInit):
            omegas = np.asarray(self.init.omegas)
            if omegas.size != dim:
                raise ValueError(f"need {dim} level energies, got {omegas.size}")
            return readout.diagonal_state(
                readout.gibbs_populations(self.init.temperature, omegas))
        return readout.diagonal_state(np.asarray(self.init, dtype=float))

    def readout_povm(self, dim):
        if self.readout is None:
            return readout.ideal_readout_povm(dim)
        if isinstance(self.readout, LevelReadoutError):
            effects = np.stack([
                readout.level_readout_operator(dim, j, self.readout.b0, self.readout.b1)
                for j in range(1, dim)])
            return readout.cascade_povm(effects)
        return readout.diagonal_povm(np.asarray(self.readout, dtype=float))

    def level_effect(self, dim, level):
        """Effect of reading a single level in isolation."""
        if self.readout is None:
            b0 = b1 = 0.0
        elif isinstance(self.readout, LevelReadoutError):
            b0, b1 = self.readout.b0, self.readout.b1
        else:
            raise ValueError(
                "single-level reads are undefined for an explicit response matrix")
        return readout.level_readout_operator(dim, level, b0, b1)

    def spam_model(self, dim):
        """The configured preparation and readout as a DiagonalSpamModel."""
        a = np.diagonal(self.initial_state(dim)).real
        return readout.DiagonalSpamModel(a, readout.povm_diagonals(self.readout_povm(dim)))


def noisy_prep_state(circuit, noise):
    """Initial state sent through the prep gates, depolarizing after each."""
    dim = circuit.dim
    rho = noise.initial_state(dim)
    for g in circuit.prep.gates:
        u = gate_unitary(g, dim)
        rho = u @ rho @ qcore.dagger(u)
        if noise.gate_depol_p:
            rho = qcore.depolarize(rho, noise.gate_depol_p)
    return rho


def circuit_probabilities(circuit, truth, noise, check=True):
    """Outcome probabilities of one circuit under the noise model.

    `truth` is either None (the circuit measures the prepared state as in
    calibration), a d x d density matrix that replaces preparation
    entirely, or a d^2 x d^2 Choi matrix applied after preparation.
    """
    dim = circuit.dim
    if truth is None:
        rho = noisy_prep_state(circuit, noise)
    else:
        truth = np.asarray(truth, dtype=complex)
        if truth.shape == (dim, dim):
            if check:
                qcore.check_density_matrix(truth)
            if len(circuit.prep):
                raise ValueError(
                    "a truth state replaces preparation; circuit has prep gates")
            rho = truth
        elif truth.shape == (dim * dim, dim * dim):
            if check:
                qcore.check_choi(truth, atol_tp=1e-8)
            rho = qcore.apply_choi(truth, noisy_prep_state(circuit, noise), check=False)
        else:
            raise ValueError(
                f"truth shape {truth.shape} fits neither a state nor a Choi "
                f"matrix in dimension {dim}")
    for g in circuit.meas.gates:
        u = gate_unitary(g, dim)
        rho = u @ rho @ qcore.dagger(u)
        if noise.gate_depol_p:
            rho = qcore.depolarize(rho, noise.gate_depol_p)
    probs = np.real(np.einsum("kij,ji->k", noise.readout_povm(dim), rho))
    if probs.min() < -1e-12:
        raise ValueError(f"probability {probs.min()} below -1e-12; invalid inputs")
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def allocate_shots(total_shots, n_circuits):
    """Equal split: floor(total/n) each, one extra for the first total mod n."""
    if total_shots < 1:
        raise ValueError(f"total shots must be positive, got {total_shots}")
    if n_circuits < 1:
        raise ValueError(f"need at least one circuit, got {n_circuits}")
    base, extra = divmod(int(total_shots), n_circuits)
    shots = np.full(n_circuits, base, dtype=np.int64)
    shots[:extra] += 1
    return shots


def sample_counts(probs, shots, rng):
    """Multinomial draw of `shots` outcomes from the distribution `probs`."""
    probs = np.asarray(probs, dtype=float)
    if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-10:
        raise ValueError("probabilities must be nonnegative and sum to 1")
    return rng.multinomial(int(shots), probs / probs.sum())


@dataclass(frozen=True)
class CountsDataset:
    """Measured counts for an ordered family of circuits."""

    protocol_ref: str
    labels: tuple
    shots: np.ndarray
    counts: np.ndarray
    seed: int

    def __post_init__(self):
        labels = tuple(self.labels)
        shots = np.asarray(self.shots)
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != len(labels) or shots.shape != (len(labels),):
            raise ValueError("labels, shots and counts do not line up")
        if counts.min() < 0:
            raise ValueError("counts must be nonnegative")
        if not np.allclose(counts.sum(axis=1), shots):
            raise ValueError("per-circuit counts must sum to the recorded shots")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "shots", shots)
        object.__setattr__(self, "counts", counts)

    @property
    def n_circuits(self):
        return len(self.labels)

    @property
    def total_shots(self):
        return int(self.shots.sum())

    def frequencies(self):
        """Per-circuit outcome frequencies; zero-shot circuits give zeros."""
        denom = np.where(self.shots > 0, self.shots, 1)[:, None]
        return self.counts / denom

    def to_dict(self):
        return {
            "protocol_ref": self.protocol_ref,
            "seed": int(self.seed),
            "circuits": [
                {"label": lab, "shots": int(s), "counts": np.asarray(c).tolist()}
                for lab, s, c in zip(self.labels, self.shots, self.counts)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        labels = tuple(c["label"] for c in d["circuits"])
        shots = np.array([c["shots"] for c in d["circuits"]])
        counts = np.array([c["counts"] for c in d["circuits"]])
        return cls(d["protocol_ref"], labels, shots, counts, int(d["seed"]))

    def to_csv(self, path):
        lines = ["circuit,label,outcome,count"]
        for i, (lab, row) in enumerate(zip(self.labels, self.counts)):
            for k, c in enumerate(row):
                lines.append(f"{i},{lab},{k},{int(c) if float(c).is_integer() else c}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def run_protocol(protocol, truth, noise, total_shots, seed, protocol_ref=None):
    """Simulate counts for every circuit of a protocol.

    `protocol` is a TomographyProtocol or a plain circuit list; `truth`
    passes through to `circuit_probabilities`.  Sampling uses the child
    stream (seed, "counts", 0) and is deterministic in the argument tuple.
    """
    if isinstance(protocol, TomographyProtocol):
        circuits = protocol.circuits
        ref = protocol_ref or f"{protocol.kind}-d{protocol.dim}-{len(circuits)}"
    else:
        circuits = tuple(protocol)
        ref = protocol_ref or "circuits"
    if not circuits:
        raise ValueError("protocol has no circuits")
    dim = circuits[0].dim
    if truth is not None:
        truth = np.asarray(truth, dtype=complex)
        if truth.shape == (dim, dim):
            qcore.check_density_matrix(truth)
        elif truth.shape == (dim * dim, dim * dim):
            qcore.check_choi(truth, atol_tp=1e-8)
    shots = allocate_shots(total_shots, len(circuits))
    rng = qcore.make_rng(seed, "counts")
    counts = np.zeros((len(circuits), noise.readout_povm(dim).shape[0]), dtype=np.int64)
    for i, circuit in enumerate(circuits):
        probs = circuit_probabilities(circuit, truth, noise, check=False)
        counts[i] = sample_counts(probs, shots[i], rng)
    labels = tuple(c.label for c in circuits)
    return CountsDataset(ref, labels, shots, counts, int(seed))


def simulate_level_reads(dim, noise, total_shots, seed):
    """Binary reads of each level on the bare initial state.

    Circuit j interrogates level j alone; outcome 1 is a click.  Used to
    calibrate the thermal-initialization readout model.
    """
    rho0 = noise.initial_state(dim)
    shots = allocate_shots(total_shots, dim)
    rng = qcore.make_rng(seed, "level-reads")
    counts = np.zeros((dim, 2), dtype=np.int64)
    for j in range(dim):
        effect = noise.level_effect(dim, j)
        p_click = float(np.clip(np.real(np.trace(rho0 @ effect)), 0.0, 1.0))
        clicks = rng.binomial(shots[j], p_click)
        counts[j] = (shots[j] - clicks, clicks)
    labels = tuple(f"read{j}" for j in range(dim))
    return CountsDataset("level-reads", labels, shots, counts, int(seed))
