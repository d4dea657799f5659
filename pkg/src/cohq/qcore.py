"""
Dense linear algebra for quantum channels.

Channels are stored as Kraus operators. Density matrices are plain complex
numpy arrays; :func:`check_density_matrix` validates them where an operation
needs a genuine state.

Index conventions used everywhere in the package:

* Choi matrices are ordered output-first, ``J = sum_ij Theta(|i><j|) (x) |i><j|``,
  so ``J[(b, a), (b', a')]`` with ``b`` the output and ``a`` the input index.
* Channel coefficients are stored as ``coeffs[a, c, b, d]`` with
  ``Theta(|b><d|) = sum_{a,c} coeffs[a, c, b, d] |a><c|``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

STRUCT_TOL = 1e-10

__all__ = [
    "Channel", "ChoiMatrix", "check_density_matrix", "dephase", "apply",
    "choi", "apply_from_choi", "trace_norm", "compose", "tensor", "mix",
    "coefficients", "unitary_channel", "identity", "dephasing",
    "fourier_matrix", "fourier_unitary", "fourier_measurement",
    "depolarizing", "hadamard", "standard_channels", "ket", "projector",
    "channel_to_json", "channel_from_json", "load_channel", "save_channel",
    "ChannelFormatError", "kraus_from_json",
]


def _hermitize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def check_density_matrix(rho, atol: float = STRUCT_TOL) -> np.ndarray:
    """Return ``rho`` as a complex array, raising ValueError if it is not a state."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] == 0:
        raise ValueError(f"density matrix must be square, got shape {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 100 * atol:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValueError(f"density matrix has trace {np.trace(rho).real:.3g}")
    if np.linalg.eigvalsh(_hermitize(rho))[0] < -atol:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def ket(d: int, i: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[i] = 1
    return v


def projector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex).ravel()
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


class Channel:
    """A CPTP map given by Kraus operators of shape ``(dim_out, dim_in)``.

    Instances are immutable; the Kraus arrays are made read-only.
    """

    __slots__ = ("kraus",)

    def __init__(self, kraus: Sequence, *, check: bool = True, atol: float = STRUCT_TOL):
        ops = tuple(np.array(k, dtype=complex) for k in kraus)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        shape = ops[0].shape
        if len(shape) != 2 or any(k.shape != shape for k in ops):
            raise ValueError("Kraus operators must be matrices of a common shape")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus", ops)
        if check:
            res = self.tp_residual()
            if res > atol:
                raise ValueError(f"Kraus operators are not trace preserving (residual {res:.3g})")

    @property
    def dim_in(self) -> int:
        return self.kraus[0].shape[1]

    @property
    def dim_out(self) -> int:
        return self.kraus[0].shape[0]

    def tp_residual(self) -> float:
        """Largest entry of ``sum_n K_n^dag K_n - 1``."""
        s = sum(k.conj().T @ k for k in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim_in))))

    def __setattr__(self, name, value):
        raise AttributeError("Channel is immutable")

    def __reduce__(self):
        return (_rebuild_channel, (tuple(np.array(k) for k in self.kraus),))

    def __call__(self, rho) -> np.ndarray:
        return apply(self, rho)

    def __repr__(self) -> str:
        return f"Channel(dim_in={self.dim_in}, dim_out={self.dim_out}, n_kraus={len(self.kraus)})"


def _rebuild_channel(kraus):
    return Channel(kraus, check=False)


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    dim_in: int
    dim_out: int
    data: np.ndarray

    def reshaped(self) -> np.ndarray:
        """Four-index view ``J[b, a, b', a']``."""
        return self.data.reshape(self.dim_out, self.dim_in, self.dim_out, self.dim_in)

    def trace_over_output(self) -> np.ndarray:
        return np.einsum("bxby->xy", self.reshaped())

    def trace_over_input(self) -> np.ndarray:
        return np.einsum("xaya->xy", self.reshaped())


def dephase(rho) -> np.ndarray:
    """Total dephasing: keep only the diagonal in the incoherent basis."""
    rho = np.asarray(rho)
    return np.diag(np.diag(rho)).astype(complex)


def apply(chan: Channel, rho) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (chan.dim_in, chan.dim_in):
        raise ValueError(f"state of shape {rho.shape} does not fit channel input {chan.dim_in}")
    out = sum(k @ rho @ k.conj().T for k in chan.kraus)
    return out


def choi(chan: Channel) -> ChoiMatrix:
    vecs = np.array([k.ravel() for k in chan.kraus])
    data = vecs.T @ vecs.conj()
    return ChoiMatrix(chan.dim_in, chan.dim_out, data)


def apply_from_choi(J: ChoiMatrix, rho) -> np.ndarray:
    """Evaluate ``Theta(rho) = tr_A[(1_B (x) rho^T) J]``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (J.dim_in, J.dim_in):
        raise ValueError(f"state of shape {rho.shape} does not fit Choi input {J.dim_in}")
    return np.einsum("bacd,ad->bc", J.reshaped(), rho)


def trace_norm(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def compose(f: Channel, g: Channel) -> Channel:
    """The channel ``f o g`` (apply ``g`` first)."""
    if g.dim_out != f.dim_in:
        raise ValueError(f"cannot compose: g outputs {g.dim_out}, f expects {f.dim_in}")
    return Channel([a @ b for a in f.kraus for b in g.kraus], check=False)


def tensor(f: Channel, g: Channel) -> Channel:
    return Channel([np.kron(a, b) for a in f.kraus for b in g.kraus], check=False)


def mix(channels: Sequence[Channel], weights: Sequence[float]) -> Channel:
    """Convex combination, realised as a weighted union of Kraus sets."""
    weights = np.asarray(weights, dtype=float)
    if len(channels) != len(weights) or np.any(weights < 0) or abs(weights.sum() - 1) > STRUCT_TOL:
        raise ValueError("mixing weights must be a probability vector matching the channels")
    shapes = {(c.dim_out, c.dim_in) for c in channels}
    if len(shapes) != 1:
        raise ValueError("mixed channels must share input and output dimensions")
    ops = [np.sqrt(w) * k for c, w in zip(channels, weights) if w > 0 for k in c.kraus]
    return Channel(ops, check=False)


def coefficients(chan: Channel) -> np.ndarray:
    """Coefficients ``coeffs[a, c, b, d] = sum_n K_n[a, b] conj(K_n[c, d])``."""
    return choi(chan).reshaped().transpose(0, 2, 1, 3)


# standard channels ---------------------------------------------------------

def unitary_channel(u) -> Channel:
    u = np.asarray(u, dtype=complex)
    if not np.allclose(u.conj().T @ u, np.eye(u.shape[1]), atol=STRUCT_TOL):
        raise ValueError("matrix is not unitary")
    return Channel([u])


def identity(d: int) -> Channel:
    return Channel([np.eye(d)])


def dephasing(d: int) -> Channel:
    return Channel([np.outer(ket(d, i), ket(d, i)) for i in range(d)])


def fourier_matrix(d: int) -> np.ndarray:
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(2j * np.pi * j * k / d) / np.sqrt(d)


def fourier_unitary(d: int) -> Channel:
    return Channel([fourier_matrix(d)])


def fourier_measurement(d: int) -> Channel:
    """Measure in the Fourier basis and record outcome ``k`` as ``|k><k|``."""
    F = fourier_matrix(d)
    return Channel([np.outer(ket(d, k), F[:, k].conj()) for k in range(d)])


def depolarizing(d: int, lam: float) -> Channel:
    """``rho -> (1 - lam) rho + lam tr(rho) 1/d``."""
    if not 0 <= lam <= 1:
        raise ValueError("depolarizing strength must lie in [0, 1]")
    ops = [np.sqrt(1 - lam) * np.eye(d)]
    ops += [np.sqrt(lam / d) * np.outer(ket(d, k), ket(d, l)) for k in range(d) for l in range(d)]
    return Channel(ops)


def hadamard() -> Channel:
    return fourier_unitary(2)


def standard_channels(d: int, lam: float = 1.0) -> dict:
    if d < 1:
        raise ValueError("dimension must be positive")
    return {
        "dephasing": dephasing(d),
        "fourier_unitary": fourier_unitary(d),
        "fourier_measurement": fourier_measurement(d),
        "identity": identity(d),
        "depolarizing": depolarizing(d, lam),
    }


# JSON channel format -------------------------------------------------------

def channel_to_json(chan: Channel) -> dict:
    return {
        "dim_in": chan.dim_in,
        "dim_out": chan.dim_out,
        "kraus": [[[[float(z.real), float(z.imag)] for z in row] for row in k] for k in chan.kraus],
    }


class ChannelFormatError(ValueError):
    """The JSON data does not describe a list of Kraus matrices."""


def kraus_from_json(obj) -> list[np.ndarray]:
    """Kraus matrices from the JSON layout, without checking trace preservation."""
    try:
        dim_in, dim_out = int(obj["dim_in"]), int(obj["dim_out"])
        ops = []
        for k in obj["kraus"]:
            arr = np.asarray(k, dtype=float)
            if arr.shape != (dim_out, dim_in, 2):
                raise ChannelFormatError(f"Kraus operator of shape {arr.shape[:-1]} does not match "
                                         f"({dim_out}, {dim_in})")
            ops.append(arr[..., 0] + 1j * arr[..., 1])
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ChannelFormatError):
            raise
        raise ChannelFormatError(f"malformed channel description: {exc}") from exc
    if not ops:
        raise ChannelFormatError("channel description has no Kraus operators")
    return ops


def channel_from_json(obj: dict, *, atol: float = STRUCT_TOL) -> Channel:
    """Build a channel from the JSON layout.

    Raises ChannelFormatError for malformed data and ValueError if the Kraus
    operators are not trace preserving.
    """
    return Channel(kraus_from_json(obj), atol=atol)


def save_channel(chan: Channel, path) -> None:
    Path(path).write_text(json.dumps(channel_to_json(chan)) + "\n", encoding="utf-8")


def load_channel(path, *, atol: float = STRUCT_TOL) -> Channel:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    return channel_from_json(obj, atol=atol)
