"""l2-norm sample model: sum trees over squared entries.

A SampleVector keeps an implicit array-backed complete binary tree padded to
the next power of two. Leaves hold v_i**2, every internal node holds the sum
of its two children, and the root holds ||v||_2**2. Sampling draws one uniform
number u in [0, root) and descends by cumulative sums, so index i is returned
with probability v_i**2 / ||v||_2**2.

A SampleMatrix keeps one such tree per row and one per column (stored as 2-D
"forests"), plus a row-norm tree and a column-norm tree whose leaves are the
row/column tree roots.

Structures are safe for concurrent readers that own their random streams;
mutation requires exclusive access.
"""

import math
import struct
from collections.abc import Sequence
from pathlib import Path

import numpy as np

from .errors import EmptySupportError, NonFiniteInputError, SerializationError

MAGIC = b"QSMX"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sHHQQ")


def _capacity(n: int) -> int:
    return 1 << max(0, math.ceil(math.log2(n))) if n > 1 else 1


def _check_finite(values: np.ndarray) -> None:
    bad = np.argwhere(~np.isfinite(values))
    if bad.size:
        index = tuple(int(i) for i in bad[0])
        raise NonFiniteInputError(index[0] if len(index) == 1 else index, float(values[index]))


def _fill_internal(forest: np.ndarray, capacity: int) -> None:
    """Recompute every internal node bottom-up; forest has shape (trees, 2*capacity)."""
    width = capacity
    while width > 1:
        half = width // 2
        forest[:, half:width] = forest[:, width : 2 * width : 2] + forest[:, width + 1 : 2 * width : 2]
        width = half


def _descend(tree: np.ndarray, capacity: int, u: float) -> tuple[int, int]:
    """Walk from the root to a leaf; returns (leaf index, nodes touched)."""
    node = 1
    touched = 1
    while node < capacity:
        left = tree[2 * node]
        right = tree[2 * node + 1]
        touched += 2
        if right <= 0.0 or (left > 0.0 and u < left):
            node = 2 * node
        else:
            u -= left
            node = 2 * node + 1
    return node - capacity, touched


def _descend_many(tree: np.ndarray, capacity: int, u: np.ndarray) -> np.ndarray:
    nodes = np.ones(u.shape[0], dtype=np.int64)
    if nodes.size == 0:
        return nodes
    u = u.copy()
    while nodes[0] < capacity:
        left = tree[2 * nodes]
        right = tree[2 * nodes + 1]
        go_left = (right <= 0.0) | ((left > 0.0) & (u < left))
        u = np.where(go_left, u, u - left)
        nodes = np.where(go_left, 2 * nodes, 2 * nodes + 1)
    return nodes - capacity


def _set_leaf(tree: np.ndarray, capacity: int, index: int, weight: float) -> int:
    """Write a leaf and refresh its ancestors; returns nodes touched."""
    node = index + capacity
    tree[node] = weight
    touched = 1
    node >>= 1
    while node >= 1:
        tree[node] = tree[2 * node] + tree[2 * node + 1]
        touched += 1
        node >>= 1
    return touched


class SampleVector:
    """Sum tree over the squared entries of a real vector."""

    def __init__(self, values: Sequence[float] | np.ndarray) -> None:
        data = np.array(values, dtype=np.float64).reshape(-1)
        if data.size < 1:
            raise ValueError("a SampleVector needs at least one entry")
        _check_finite(data)
        self._n = int(data.size)
        self._capacity = _capacity(self._n)
        self._values = data
        self._tree = np.zeros(2 * self._capacity, dtype=np.float64)
        self._tree[self._capacity : self._capacity + self._n] = data * data
        _fill_internal(self._tree[np.newaxis, :], self._capacity)
        self.last_touches = 0

    @classmethod
    def _from_parts(cls, values: np.ndarray, tree: np.ndarray, capacity: int) -> "SampleVector":
        obj = cls.__new__(cls)
        obj._n = int(values.size)
        obj._capacity = capacity
        obj._values = values
        obj._tree = tree
        obj.last_touches = 0
        return obj

    def copy(self) -> "SampleVector":
        return SampleVector._from_parts(self._values.copy(), self._tree.copy(), self._capacity)

    def __len__(self) -> int:
        return self._n

    @property
    def capacity(self) -> int:
        return self._capacity

    @property
    def tree(self) -> np.ndarray:
        """Read-only view of the node array (index 1 is the root)."""
        view = self._tree.view()
        view.flags.writeable = False
        return view

    @property
    def signs(self) -> np.ndarray:
        return np.sign(self._values)

    def values(self) -> np.ndarray:
        return self._values.copy()

    def _check_index(self, i: int) -> None:
        if not 0 <= i < self._n:
            raise IndexError(f"index {i} out of range for vector of length {self._n}")

    def query(self, i: int) -> float:
        self._check_index(i)
        return float(self._values[i])

    def update(self, i: int, value: float) -> "SampleVector":
        self._check_index(i)
        if not math.isfinite(value):
            raise NonFiniteInputError(i, value)
        self._values[i] = value
        self.last_touches = _set_leaf(self._tree, self._capacity, i, value * value)
        return self

    def norm2(self) -> float:
        return float(self._tree[1])

    def _require_support(self) -> float:
        root = float(self._tree[1])
        if root <= 0.0:
            raise EmptySupportError("cannot sample from a zero vector")
        return root

    def sample(self, rng: np.random.Generator) -> int:
        root = self._require_support()
        index, self.last_touches = _descend(self._tree, self._capacity, rng.random() * root)
        return index

    def sample_many(self, rng: np.random.Generator, size: int) -> np.ndarray:
        root = self._require_support()
        return _descend_many(self._tree, self._capacity, rng.random(size) * root)

    def probabilities(self) -> np.ndarray:
        root = self._require_support()
        return self._tree[self._capacity : self._capacity + self._n] / root

    def path_probability(self, i: int) -> float:
        """Product of branch probabilities along the root-to-leaf path of i."""
        self._check_index(i)
        self._require_support()
        node = i + self._capacity
        prob = 1.0
        while node > 1:
            parent = self._tree[node >> 1]
            prob *= self._tree[node] / parent if parent > 0 else 0.0
            node >>= 1
        return prob

    def rebuild(self) -> "SampleVector":
        """Recompute all node sums from the stored entries."""
        self._tree[:] = 0.0
        self._tree[self._capacity : self._capacity + self._n] = self._values * self._values
        _fill_internal(self._tree[np.newaxis, :], self._capacity)
        return self


def sv_build(values: Sequence[float] | np.ndarray) -> SampleVector:
    return SampleVector(values)


class SampleMatrix:
    """Row-wise and column-wise sum trees over a dense real matrix."""

    def __init__(self, values: np.ndarray | Sequence[Sequence[float]]) -> None:
        data = np.array(values, dtype=np.float64)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2-D array, got shape {data.shape}")
        _check_finite(data)
        self._values = data
        self._m, self._n = data.shape
        self._row_cap = _capacity(self._n)
        self._col_cap = _capacity(self._m)
        squares = data * data
        self._row_forest = np.zeros((self._m, 2 * self._row_cap))
        self._row_forest[:, self._row_cap : self._row_cap + self._n] = squares
        _fill_internal(self._row_forest, self._row_cap)
        self._col_forest = np.zeros((self._n, 2 * self._col_cap))
        self._col_forest[:, self._col_cap : self._col_cap + self._m] = squares.T
        _fill_internal(self._col_forest, self._col_cap)
        self._row_norms = SampleVector(np.sqrt(self._row_forest[:, 1]))
        self._col_norms = SampleVector(np.sqrt(self._col_forest[:, 1]))
        self._sync_norm_leaves()

    def _sync_norm_leaves(self) -> None:
        # leaves of the norm trees are the exact roots of the row/column trees
        self._row_norms._tree[self._row_norms.capacity : self._row_norms.capacity + self._m] = self._row_forest[:, 1]
        _fill_internal(self._row_norms._tree[np.newaxis, :], self._row_norms.capacity)
        self._col_norms._tree[self._col_norms.capacity : self._col_norms.capacity + self._n] = self._col_forest[:, 1]
        _fill_internal(self._col_norms._tree[np.newaxis, :], self._col_norms.capacity)

    @property
    def shape(self) -> tuple[int, int]:
        return self._m, self._n

    # Tree accessors return snapshots; mutate the matrix only through update().

    @property
    def row_norm_tree(self) -> SampleVector:
        return self._row_norms.copy()

    @property
    def col_norm_tree(self) -> SampleVector:
        return self._col_norms.copy()

    def row_tree(self, i: int) -> SampleVector:
        self._check_row(i)
        return SampleVector._from_parts(self._values[i].copy(), self._row_forest[i].copy(), self._row_cap)

    def col_tree(self, j: int) -> SampleVector:
        self._check_col(j)
        return SampleVector._from_parts(self._values[:, j].copy(), self._col_forest[j].copy(), self._col_cap)

    def dense(self) -> np.ndarray:
        return self._values.copy()

    def rows(self, indices: np.ndarray) -> np.ndarray:
        return self._values[indices]

    def _check_row(self, i: int) -> None:
        if not 0 <= i < self._m:
            raise IndexError(f"row index {i} out of range for {self._m} rows")

    def _check_col(self, j: int) -> None:
        if not 0 <= j < self._n:
            raise IndexError(f"column index {j} out of range for {self._n} columns")

    def query(self, i: int, j: int) -> float:
        self._check_row(i)
        self._check_col(j)
        return float(self._values[i, j])

    def query_by_column(self, i: int, j: int) -> float:
        """Entry read through the column-side structure."""
        self._check_row(i)
        self._check_col(j)
        magnitude = math.sqrt(self._col_forest[j, self._col_cap + i])
        return math.copysign(magnitude, self._values[i, j])

    def update(self, i: int, j: int, value: float) -> "SampleMatrix":
        self._check_row(i)
        self._check_col(j)
        if not math.isfinite(value):
            raise NonFiniteInputError((i, j), value)
        self._values[i, j] = value
        weight = value * value
        _set_leaf(self._row_forest[i], self._row_cap, j, weight)
        _set_leaf(self._col_forest[j], self._col_cap, i, weight)
        _set_leaf(self._row_norms._tree, self._row_norms.capacity, i, float(self._row_forest[i, 1]))
        _set_leaf(self._col_norms._tree, self._col_norms.capacity, j, float(self._col_forest[j, 1]))
        self._row_norms._values[i] = math.sqrt(self._row_forest[i, 1])
        self._col_norms._values[j] = math.sqrt(self._col_forest[j, 1])
        return self

    def frob2(self) -> float:
        return self._row_norms.norm2()

    def frob2_by_columns(self) -> float:
        return self._col_norms.norm2()

    def row_norm2(self, i: int) -> float:
        self._check_row(i)
        return float(self._row_forest[i, 1])

    def col_norm2(self, j: int) -> float:
        self._check_col(j)
        return float(self._col_forest[j, 1])

    def row_probabilities(self) -> np.ndarray:
        return self._row_norms.probabilities()

    def col_probabilities(self) -> np.ndarray:
        return self._col_norms.probabilities()

    def sample_row(self, rng: np.random.Generator) -> int:
        if self.frob2() <= 0.0:
            raise EmptySupportError("cannot sample rows of a zero matrix")
        return self._row_norms.sample(rng)

    def sample_rows(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.frob2() <= 0.0:
            raise EmptySupportError("cannot sample rows of a zero matrix")
        return self._row_norms.sample_many(rng, size)

    def sample_col(self, rng: np.random.Generator) -> int:
        if self.frob2_by_columns() <= 0.0:
            raise EmptySupportError("cannot sample columns of a zero matrix")
        return self._col_norms.sample(rng)

    def sample_cols(self, rng: np.random.Generator, size: int) -> np.ndarray:
        if self.frob2_by_columns() <= 0.0:
            raise EmptySupportError("cannot sample columns of a zero matrix")
        return self._col_norms.sample_many(rng, size)

    def sample_in_row(self, i: int, rng: np.random.Generator) -> int:
        self._check_row(i)
        root = float(self._row_forest[i, 1])
        if root <= 0.0:
            raise EmptySupportError(f"row {i} is zero")
        index, _ = _descend(self._row_forest[i], self._row_cap, rng.random() * root)
        return index

    def sample_in_col(self, j: int, rng: np.random.Generator) -> int:
        self._check_col(j)
        root = float(self._col_forest[j, 1])
        if root <= 0.0:
            raise EmptySupportError(f"column {j} is zero")
        index, _ = _descend(self._col_forest[j], self._col_cap, rng.random() * root)
        return index

    def rebuild(self) -> "SampleMatrix":
        squares = self._values * self._values
        self._row_forest[:] = 0.0
        self._row_forest[:, self._row_cap : self._row_cap + self._n] = squares
        _fill_internal(self._row_forest, self._row_cap)
        self._col_forest[:] = 0.0
        self._col_forest[:, self._col_cap : self._col_cap + self._m] = squares.T
        _fill_internal(self._col_forest, self._col_cap)
        self._row_norms._values[:] = np.sqrt(self._row_forest[:, 1])
        self._col_norms._values[:] = np.sqrt(self._col_forest[:, 1])
        self._sync_norm_leaves()
        return self

    def to_bytes(self) -> bytes:
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, 0, self._m, self._n)
        return header + self._values.astype("<f8").tobytes(order="C")

    @classmethod
    def from_bytes(cls, payload: bytes) -> "SampleMatrix":
        if len(payload) < _HEADER.size:
            raise SerializationError("payload shorter than header")
        magic, version, _reserved, m, n = _HEADER.unpack_from(payload)
        if magic != MAGIC:
            raise SerializationError(f"bad magic {magic!r}")
        if version != FORMAT_VERSION:
            raise SerializationError(f"unsupported format version {version}")
        expected = _HEADER.size + 8 * m * n
        if len(payload) != expected:
            raise SerializationError(f"expected {expected} bytes for a {m}x{n} matrix, got {len(payload)}")
        data = np.frombuffer(payload, dtype="<f8", offset=_HEADER.size).reshape(m, n)
        return cls(data.astype(np.float64))

    def save(self, path: Path | str) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: Path | str) -> "SampleMatrix":
        return cls.from_bytes(Path(path).read_bytes())


def sm_build(values: np.ndarray | Sequence[Sequence[float]]) -> SampleMatrix:
    return SampleMatrix(values)
