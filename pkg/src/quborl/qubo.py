"""Binary quadratic problem representations and exact solving.

Two equivalent forms are supported: QUBO over x in {0,1}^n and Ising over
s in {-1,+1}^n, linked by the variable change s = 2x - 1.  Conversions are
exact (up to float rounding) and preserve energies of corresponding
assignments, so samplers can work in whichever form is natural.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "QuboProblem",
    "IsingProblem",
    "qubo_energy",
    "ising_energy",
    "spins_to_bits",
    "bits_to_spins",
    "ising_to_qubo",
    "qubo_to_ising",
    "partition_qubo",
    "brute_force_solve",
    "save_problem",
    "load_problem",
]


def _canonical_coupling(
    n: int, coupling: dict, kind: str, diagonal: np.ndarray | None = None
) -> dict[tuple[int, int], float]:
    """Validate and canonicalize a pairwise coefficient dict to keys i < j.

    When ``diagonal`` is given, (i, i) entries are accumulated into it instead
    of raising (QUBO diagonal terms act linearly because x_i^2 = x_i).
    """
    out: dict[tuple[int, int], float] = {}
    for key, value in coupling.items():
        try:
            i, j = key
        except (TypeError, ValueError):
            raise ValueError(f"{kind} key {key!r} is not an index pair")
        i, j = int(i), int(j)
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError(f"{kind} key ({i}, {j}) is out of range for n={n}")
        if i == j:
            if diagonal is None:
                raise ValueError(f"{kind} key ({i}, {j}) couples a variable to itself")
            diagonal[i] += float(value)
            continue
        if i > j:
            i, j = j, i
        if (i, j) in out:
            raise ValueError(f"{kind} key ({i}, {j}) appears more than once after ordering")
        out[(i, j)] = float(value)
    return dict(sorted(out.items()))


def _as_vector(n: int, values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass
class QuboProblem:
    """Quadratic unconstrained binary optimization problem.

    Energy of an assignment x in {0,1}^n:

        E(x) = sum_{i<j} quadratic[i,j] x_i x_j + sum_i linear[i] x_i + offset

    Parameters
    ----------
    n : int
        Number of binary variables.
    linear : array_like of shape (n,)
        Per-variable coefficients.
    quadratic : dict mapping (i, j) to float
        Pairwise coefficients.  Keys are canonicalized to i < j; a pair may
        appear at most once.
    offset : float
        Constant added to every energy.
    """

    n: int
    linear: np.ndarray
    quadratic: dict[tuple[int, int], float] = field(default_factory=dict)
    offset: float = 0.0

    def __post_init__(self) -> None:
        self.n = int(self.n)
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        self.linear = _as_vector(self.n, self.linear, "linear")
        diagonal = np.zeros(self.n)
        self.quadratic = _canonical_coupling(self.n, self.quadratic, "quadratic", diagonal)
        self.linear = self.linear + diagonal
        self.offset = float(self.offset)
        if not np.isfinite(self.offset):
            raise ValueError("offset must be finite")
        for value in self.quadratic.values():
            if not np.isfinite(value):
                raise ValueError("quadratic contains non-finite entries")

    def dense_quadratic(self) -> np.ndarray:
        """Symmetric (n, n) matrix A with A[i, j] = A[j, i] = quadratic[i, j]."""
        a = np.zeros((self.n, self.n))
        for (i, j), value in self.quadratic.items():
            a[i, j] = value
            a[j, i] = value
        return a


@dataclass
class IsingProblem:
    """Ising model over spins s in {-1,+1}^n.

    Energy of a spin assignment:

        H(s) = -sum_{i<j} couplings[i,j] s_i s_j - sum_i fields[i] s_i

    Parameters
    ----------
    n : int
        Number of spins.
    couplings : dict mapping (i, j) to float
        Pairwise couplings J_ij, canonicalized to i < j.
    fields : array_like of shape (n,)
        Local fields h_i.
    """

    n: int
    couplings: dict[tuple[int, int], float] = field(default_factory=dict)
    fields: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.n = int(self.n)
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if self.fields is None:
            self.fields = np.zeros(self.n)
        self.fields = _as_vector(self.n, self.fields, "fields")
        self.couplings = _canonical_coupling(self.n, self.couplings, "couplings")
        for value in self.couplings.values():
            if not np.isfinite(value):
                raise ValueError("couplings contains non-finite entries")

    def dense_couplings(self) -> np.ndarray:
        """Symmetric (n, n) matrix J with J[i, j] = J[j, i] = couplings[i, j]."""
        j = np.zeros((self.n, self.n))
        for (a, b), value in self.couplings.items():
            j[a, b] = value
            j[b, a] = value
        return j


def _check_bits(bits, n: int) -> np.ndarray:
    x = np.asarray(bits)
    if x.shape != (n,):
        raise ValueError(f"assignment must have shape ({n},), got {x.shape}")
    x = x.astype(np.int64)
    if not np.all((x == 0) | (x == 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return x


def _check_spins(spins, n: int) -> np.ndarray:
    s = np.asarray(spins)
    if s.shape != (n,):
        raise ValueError(f"spin assignment must have shape ({n},), got {s.shape}")
    s = s.astype(np.int64)
    if not np.all((s == -1) | (s == 1)):
        raise ValueError("spin entries must be -1 or +1")
    return s


def qubo_energy(problem: QuboProblem, bits) -> float:
    """Energy of a binary assignment under a QUBO problem."""
    x = _check_bits(bits, problem.n)
    energy = problem.offset + float(np.dot(problem.linear, x))
    for (i, j), value in problem.quadratic.items():
        if x[i] and x[j]:
            energy += value
    return float(energy)


def ising_energy(problem: IsingProblem, spins) -> float:
    """Energy of a spin assignment under an Ising problem."""
    s = _check_spins(spins, problem.n)
    energy = -float(np.dot(problem.fields, s))
    for (i, j), value in problem.couplings.items():
        energy -= value * s[i] * s[j]
    return float(energy)


def spins_to_bits(spins) -> np.ndarray:
    """Map spins {-1,+1} to bits {0,1} via x = (s + 1) / 2."""
    s = np.asarray(spins)
    arr = s.astype(np.int64)
    if not np.all((arr == -1) | (arr == 1)):
        raise ValueError("spin entries must be -1 or +1")
    return (arr + 1) // 2


def bits_to_spins(bits) -> np.ndarray:
    """Map bits {0,1} to spins {-1,+1} via s = 2x - 1."""
    x = np.asarray(bits)
    arr = x.astype(np.int64)
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("assignment entries must be 0 or 1")
    return 2 * arr - 1


def ising_to_qubo(problem: IsingProblem) -> QuboProblem:
    """Convert an Ising problem to a QUBO with identical energies.

    Under s = 2x - 1 the energies satisfy H(s) = E(x) exactly, so the
    conversion embeds the constant part into the QUBO offset.
    """
    n = problem.n
    quadratic = {key: -4.0 * value for key, value in problem.couplings.items()}
    linear = -2.0 * problem.fields.copy()
    coupling_row = np.zeros(n)
    coupling_total = 0.0
    for (i, j), value in problem.couplings.items():
        coupling_row[i] += value
        coupling_row[j] += value
        coupling_total += value
    linear += 2.0 * coupling_row
    offset = -coupling_total + float(np.sum(problem.fields))
    return QuboProblem(n=n, linear=linear, quadratic=quadratic, offset=offset)


def qubo_to_ising(problem: QuboProblem) -> tuple[IsingProblem, float]:
    """Convert a QUBO to an Ising problem plus a constant offset.

    Returns ``(ising, offset)`` such that for corresponding assignments
    E(x) = H(s) + offset.  Round-tripping through :func:`ising_to_qubo`
    recovers the original coefficients up to float rounding.
    """
    n = problem.n
    couplings = {key: -value / 4.0 for key, value in problem.quadratic.items()}
    coupling_row = np.zeros(n)
    coupling_total = 0.0
    for (i, j), value in couplings.items():
        coupling_row[i] += value
        coupling_row[j] += value
        coupling_total += value
    fields = coupling_row - problem.linear / 2.0
    constant = -coupling_total + float(np.sum(fields))
    ising = IsingProblem(n=n, couplings=couplings, fields=fields)
    return ising, problem.offset - constant


def partition_qubo(weights) -> QuboProblem:
    """QUBO whose minimum is zero exactly when the weights split evenly.

    For weights a_1..a_n, selecting a subset S with indicator bits x gives
    energy (sum_{i in S} a_i - K)^2 with K = sum(a)/2, expanded into
    quadratic terms 2 a_i a_j, linear terms a_i^2 - 2 K a_i and offset K^2.
    """
    a = np.asarray(weights, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise ValueError("weights must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(a)):
        raise ValueError("weights contains non-finite entries")
    n = a.size
    half = float(np.sum(a)) / 2.0
    linear = a * a - 2.0 * half * a
    quadratic = {
        (i, j): 2.0 * a[i] * a[j] for i, j in itertools.combinations(range(n), 2)
    }
    return QuboProblem(n=n, linear=linear, quadratic=quadratic, offset=half * half)


def brute_force_solve(problem: QuboProblem, max_n: int = 24) -> tuple[np.ndarray, float]:
    """Exhaustively enumerate all assignments and return the best one.

    Ties are broken toward the lexicographically smallest bit vector read
    as (x_0, x_1, ..., x_{n-1}).  Refuses problems with more than ``max_n``
    variables because enumeration is exponential.

    Returns
    -------
    (bits, energy) : (ndarray of shape (n,), float)
    """
    n = problem.n
    if n > max_n:
        raise ValueError(
            f"brute force enumeration over n={n} variables exceeds max_n={max_n}"
        )
    linear = problem.linear
    a = problem.dense_quadratic()

    # Enumerate in chunks so n around 24 stays within a modest memory bound.
    # Index k maps to bits x_i = (k >> i) & 1; scanning k in increasing order
    # visits bit vectors in exactly the tie-break order (x_0 varies slowest
    # in lexicographic terms thanks to the comparison below).
    chunk = 1 << min(n, 16)
    total = 1 << n
    best_energy = np.inf
    best_key: tuple[int, ...] | None = None
    shifts = np.arange(n, dtype=np.uint64)
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        codes = np.arange(start, stop, dtype=np.uint64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64)
        energies = bits @ linear + 0.5 * np.einsum("ki,ij,kj->k", bits, a, bits)
        energies += problem.offset
        low = float(energies.min())
        if low < best_energy:
            best_energy = low
            best_key = None
        if low == best_energy:
            # Enumeration order is by integer code (x_0 is the fastest bit),
            # which is not lexicographic in (x_0, ..., x_{n-1}); compare tied
            # rows explicitly.
            for t in np.flatnonzero(energies == low):
                key = tuple(int(b) for b in bits[t])
                if best_key is None or key < best_key:
                    best_key = key
    best_bits = np.array(best_key, dtype=np.int64)
    return best_bits, qubo_energy(problem, best_bits)


def save_problem(problem: QuboProblem, path) -> None:
    """Write a QUBO problem to a small line-based text file."""
    lines = [f"n {problem.n}", f"offset {float(problem.offset)!r}", "linear"]
    for i, value in enumerate(problem.linear):
        if value != 0.0:
            lines.append(f"{i} {float(value)!r}")
    lines.append("quadratic")
    for (i, j), value in problem.quadratic.items():
        if value != 0.0:
            lines.append(f"{i} {j} {float(value)!r}")
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")


def load_problem(path) -> QuboProblem:
    """Read a QUBO problem written by :func:`save_problem`.

    Raises ``ValueError`` with the offending line number on malformed input.
    """
    n = None
    offset = 0.0
    linear = None
    quadratic: dict[tuple[int, int], float] = {}
    section = None
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            try:
                if parts[0] == "n" and len(parts) == 2 and section is None:
                    n = int(parts[1])
                    linear = np.zeros(n)
                elif parts[0] == "offset" and len(parts) == 2 and section is None:
                    offset = float(parts[1])
                elif line == "linear":
                    section = "linear"
                elif line == "quadratic":
                    section = "quadratic"
                elif section == "linear" and len(parts) == 2:
                    linear[int(parts[0])] = float(parts[1])
                elif section == "quadratic" and len(parts) == 3:
                    quadratic[(int(parts[0]), int(parts[1]))] = float(parts[2])
                else:
                    raise ValueError("unrecognized line")
            except (ValueError, IndexError, TypeError) as exc:
                raise ValueError(f"{path}: parse error on line {lineno}: {line!r}") from exc
    if n is None or linear is None:
        raise ValueError(f"{path}: missing problem size header")
    return QuboProblem(n=n, linear=linear, quadratic=quadratic, offset=offset)
