"""Two-level rotation gates and gate sequences on qudits.

Rotation convention: R_axis(theta) = exp(-i theta sigma_axis / 2) embedded
in the (j, k) level pair, identity elsewhere.  Explicitly, on the pair,

    R_y(theta) = [[cos(theta/2), -sin(theta/2)],
                  [sin(theta/2),  cos(theta/2)]]
    R_x(theta) = [[cos(theta/2), -i sin(theta/2)],
                  [-i sin(theta/2), cos(theta/2)]]

Sequences list gates in time order; the product unitary of [g1, .., gn] is
U_n ... U_2 U_1.
"""

from dataclasses import dataclass, field

import numpy as np

from . import qcore


@dataclass(frozen=True)
class TwoLevelGate:
    """A single rotation on the level pair `levels` = (j, k), j < k."""

    axis: str
    angle: float
    levels: tuple

    def __post_init__(self):
        if self.axis not in ("x", "y"):
            raise ValueError(f"axis must be 'x' or 'y', got {self.axis!r}")
        j, k = self.levels
        if not (0 <= j < k):
            raise ValueError(f"levels must satisfy 0 <= j < k, got {self.levels}")
        object.__setattr__(self, "levels", (int(j), int(k)))
        object.__setattr__(self, "angle", float(self.angle))

    def to_dict(self):
        return {"axis": self.axis, "angle": self.angle, "levels": list(self.levels)}

    @classmethod
    def from_dict(cls, d):
        return cls(axis=d["axis"], angle=d["angle"], levels=tuple(d["levels"]))


@dataclass(frozen=True)
class GateSequence:
    """Time-ordered gates acting in a fixed qudit dimension."""

    dim: int
    gates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError(f"dimension must be at least 2, got {self.dim}")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if g.levels[1] >= self.dim:
                raise ValueError(
                    f"gate on levels {g.levels} does not fit dimension {self.dim}")

    def __len__(self):
        return len(self.gates)

    def to_list(self):
        return [g.to_dict() for g in self.gates]

    @classmethod
    def from_list(cls, dim, items):
        return cls(dim, tuple(TwoLevelGate.from_dict(d) for d in items))


def su2_rotation(axis, angle):
    """The 2 x 2 rotation block exp(-i angle sigma_axis / 2)."""
    c = np.cos(angle / 2.0)
    s = np.sin(angle / 2.0)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")


def gate_unitary(gate, dim):
    """Embed the gate's rotation block into a dim x dim unitary."""
    j, k = gate.levels
    if k >= dim:
        raise ValueError(f"gate on levels {gate.levels} does not fit dimension {dim}")
    u = np.eye(dim, dtype=complex)
    u[np.ix_([j, k], [j, k])] = su2_rotation(gate.axis, gate.angle)
    return u


def sequence_unitary(seq):
    """Product unitary of the sequence, last gate leftmost."""
    u = np.eye(seq.dim, dtype=complex)
    for g in seq.gates:
        u = gate_unitary(g, seq.dim) @ u
    return u


def euler_decompose(u):
    """Angles (alpha, beta, gamma) with u = R_x(gamma) R_y(beta) R_x(alpha).

    Requires a 2 x 2 unitary with det(u) = 1.  beta lies in [0, pi]; the
    beta = 0 or pi degeneracy is resolved by gamma = 0.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"expected a 2 x 2 matrix, got shape {u.shape}")
    if not qcore.is_unitary(u, 1e-10):
        raise ValueError("input is not unitary")
    if abs(np.linalg.det(u) - 1.0) > 1e-10:
        raise ValueError("input determinant differs from 1; not in SU(2)")

    w, z = u[0, 0], u[1, 0]
    # u = [[w, -conj(z)], [z, conj(w)]] with
    #   w = cos(b/2) cos(s) + i sin(b/2) sin(t)
    #   z = sin(b/2) cos(t) - i cos(b/2) sin(s)
    # where s = (alpha + gamma)/2 and t = (alpha - gamma)/2.
    cb = np.hypot(w.real, z.imag)
    sb = np.hypot(w.imag, z.real)
    beta = 2.0 * np.arctan2(sb, cb)
    if sb <= 1e-12:
        s = np.arctan2(-z.imag, w.real)
        t = s
    elif cb <= 1e-12:
        t = np.arctan2(w.imag, z.real)
        s = t
    else:
        s = np.arctan2(-z.imag, w.real)
        t = np.arctan2(w.imag, z.real)
    return float(s + t), float(beta), float(s - t)
