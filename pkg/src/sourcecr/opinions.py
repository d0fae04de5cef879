"""Sparse user-by-claim opinion matrix with entries in {+1, -1}."""

from __future__ import annotations

from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp


class OpinionMatrix:
    """Opinions ``x_ij`` of users ``i`` on claims ``j``; silence is absence.

    Parameters
    ----------
    entries : mapping or iterable
        ``{(user, claim): value}`` or an iterable of ``(user, claim, value)``.
    users, claims : iterable of int, optional
        Extra ids to include even if they hold / receive no opinion.
    """

    def __init__(
        self,
        entries: Mapping[tuple[int, int], int] | Iterable[tuple[int, int, int]] = (),
        users: Iterable[int] = (),
        claims: Iterable[int] = (),
    ):
        if isinstance(entries, Mapping):
            triples = [(u, c, x) for (u, c), x in entries.items()]
        else:
            triples = list(entries)
        data: dict[tuple[int, int], int] = {}
        for u, c, x in triples:
            x = int(x)
            if x not in (1, -1):
                raise ValueError(f"opinion must be +1 or -1, got {x} for user {u} claim {c}")
            key = (int(u), int(c))
            if key in data:
                raise ValueError(f"duplicate opinion for user {u} claim {c}")
            data[key] = x
        self._data = data
        self._users = tuple(sorted({u for u, _ in data} | {int(u) for u in users}))
        self._claims = tuple(sorted({c for _, c in data} | {int(c) for c in claims}))
        self._uidx = {u: i for i, u in enumerate(self._users)}
        self._cidx = {c: j for j, c in enumerate(self._claims)}
        self._matrix = None

    @classmethod
    def from_columns(cls, columns: Mapping[int, Mapping[int, int]], users: Iterable[int] = ()):
        """Build from ``{claim: {user: opinion}}``; empty columns are kept."""
        triples = [(u, c, x) for c, col in columns.items() for u, x in col.items()]
        return cls(triples, users=users, claims=columns.keys())

    # -- shape ---------------------------------------------------------

    @property
    def users(self) -> tuple[int, ...]:
        return self._users

    @property
    def claims(self) -> tuple[int, ...]:
        return self._claims

    @property
    def n_users(self) -> int:
        return len(self._users)

    @property
    def n_claims(self) -> int:
        return len(self._claims)

    @property
    def nnz(self) -> int:
        return len(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __getitem__(self, key: tuple[int, int]) -> int:
        return self._data[key]

    def get(self, user: int, claim: int, default=None):
        return self._data.get((user, claim), default)

    def __eq__(self, other) -> bool:
        if not isinstance(other, OpinionMatrix):
            return NotImplemented
        return (self._data, self._users, self._claims) == (other._data, other._users, other._claims)

    def __repr__(self) -> str:
        return f"OpinionMatrix(n_users={self.n_users}, n_claims={self.n_claims}, nnz={self.nnz})"

    def entries(self) -> list[tuple[int, int, int]]:
        """``(user, claim, value)`` sorted by claim then user."""
        return sorted(((u, c, x) for (u, c), x in self._data.items()), key=lambda t: (t[1], t[0]))

    # -- views ---------------------------------------------------------

    def column(self, claim: int) -> dict[int, int]:
        """``X_j``: user -> opinion for one claim."""
        if claim not in self._cidx:
            raise KeyError(f"claim {claim} not in matrix")
        m = self.matrix().tocsc()
        j = self._cidx[claim]
        lo, hi = m.indptr[j], m.indptr[j + 1]
        return {self._users[i]: int(x) for i, x in zip(m.indices[lo:hi], m.data[lo:hi])}

    def columns(self) -> dict[int, dict[int, int]]:
        cols: dict[int, dict[int, int]] = {c: {} for c in self._claims}
        for (u, c), x in self._data.items():
            cols[c][u] = x
        return cols

    def positive_claims(self, user: int) -> set[int]:
        """``C^1_i``: claims the user marked true."""
        return {c for (u, c), x in self._data.items() if u == user and x == 1}

    def negative_claims(self, user: int) -> set[int]:
        """``C^-1_i``: claims the user marked false."""
        return {c for (u, c), x in self._data.items() if u == user and x == -1}

    def matrix(self) -> sp.csr_matrix:
        """Users x claims CSR matrix of int8 opinions (rows/cols follow ids order)."""
        if self._matrix is None:
            n = len(self._data)
            rows = np.empty(n, dtype=np.int64)
            cols = np.empty(n, dtype=np.int64)
            vals = np.empty(n, dtype=np.int8)
            for k, ((u, c), x) in enumerate(self._data.items()):
                rows[k] = self._uidx[u]
                cols[k] = self._cidx[c]
                vals[k] = x
            self._matrix = sp.csr_matrix(
                (vals, (rows, cols)), shape=(len(self._users), len(self._claims))
            )
        return self._matrix

    def user_index(self) -> dict[int, int]:
        return self._uidx

    def claim_index(self) -> dict[int, int]:
        return self._cidx

    # -- transforms ----------------------------------------------------

    def negated(self) -> "OpinionMatrix":
        return OpinionMatrix(
            {k: -x for k, x in self._data.items()}, users=self._users, claims=self._claims
        )

    def restrict(self, users: Iterable[int] | None = None, claims: Iterable[int] | None = None):
        us = set(self._users) if users is None else set(users)
        cs = set(self._claims) if claims is None else set(claims)
        kept = {k: x for k, x in self._data.items() if k[0] in us and k[1] in cs}
        return OpinionMatrix(kept, users=us & set(self._users), claims=cs & set(self._claims))

    def with_users(self, users: Iterable[int]) -> "OpinionMatrix":
        """Same opinions over a wider user universe."""
        return OpinionMatrix(self._data, users=set(self._users) | set(users), claims=self._claims)
