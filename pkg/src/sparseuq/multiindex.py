"""Multi-index combinatorics for sparse grids.

Multi-indices are plain tuples of non-negative ints of a fixed length M.
A set Lambda is downward closed (monotone) when removing one unit from
any positive component of a member lands back in the set.  The margin of
Lambda collects the indices just outside it that are reachable by one
forward unit step; the reduced margin keeps only those whose every
backward neighbour lies in Lambda (these can be added one at a time
without breaking closedness).  The monotone envelope of a margin index k
is the smallest margin subset whose union with Lambda is monotone and
contains k.

The module-level functions are direct transcriptions of the definitions
and serve as cross-checking oracles.  MonotoneIndexSet maintains the
margin and reduced margin incrementally and is what the adaptive loop
uses; its caches are asserted against the definitional versions in the
test suite.
"""

import json


def _check_dims(indices):
    """Return the common length of the given index tuples.

    Raises ValueError on an empty collection or mixed lengths.
    """
    it = iter(indices)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("empty index collection has no dimension")
    m = len(first)
    for k in it:
        if len(k) != m:
            raise ValueError(
                "dimension mismatch: %r has length %d, expected %d" % (k, len(k), m)
            )
    return m


def is_monotone(indices):
    """True iff the set of index tuples is downward closed."""
    members = set(indices)
    if not members:
        return True
    _check_dims(members)
    for k in members:
        for m, km in enumerate(k):
            if km > 0:
                pred = k[:m] + (km - 1,) + k[m + 1 :]
                if pred not in members:
                    return False
    return True


def margin(indices):
    """All indices outside the set with at least one backward neighbour inside."""
    members = set(indices)
    if not members:
        raise ValueError("margin of an empty set is undefined")
    dim = _check_dims(members)
    out = set()
    for k in members:
        for m in range(dim):
            nxt = k[:m] + (k[m] + 1,) + k[m + 1 :]
            if nxt not in members:
                out.add(nxt)
    return out


def reduced_margin(indices):
    """Margin indices whose every backward neighbour lies inside the set."""
    members = set(indices)
    out = set()
    for k in margin(members):
        ok = True
        for m, km in enumerate(k):
            if km > 0:
                pred = k[:m] + (km - 1,) + k[m + 1 :]
                if pred not in members:
                    ok = False
                    break
        if ok:
            out.add(k)
    return out


def monotone_envelope(indices, k):
    """Smallest margin subset containing k whose union with the set is monotone.

    Equals the ancestors of k (componentwise <= k) that are missing from
    the set; k must lie in the margin.
    """
    members = set(indices)
    if k not in margin(members):
        raise ValueError("index %r is not in the margin" % (k,))
    out = set()
    stack = [k]
    while stack:
        j = stack.pop()
        if j in out:
            continue
        out.add(j)
        for m, jm in enumerate(j):
            if jm > 0:
                pred = j[:m] + (jm - 1,) + j[m + 1 :]
                if pred not in members and pred not in out:
                    stack.append(pred)
    return out


class MonotoneIndexSet:
    """A downward-closed index set with cached margin and reduced margin.

    Mutation happens only through add(), which requires the new index to
    keep the set downward closed, and updates both caches in O(M^2) time.
    All enumeration methods return lexicographically sorted lists so that
    iteration order is deterministic.
    """

    def __init__(self, dim, members=()):
        if dim < 1:
            raise ValueError("dimension must be at least 1")
        self.dim = dim
        self.members = set()
        self._margin = set()
        self._reduced = set()
        for k in sorted(members):
            self.add(tuple(k))

    def __contains__(self, k):
        return tuple(k) in self.members

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(sorted(self.members))

    def members_sorted(self):
        return sorted(self.members)

    def _forward(self, k, m):
        return k[:m] + (k[m] + 1,) + k[m + 1 :]

    def _backward(self, k, m):
        return k[:m] + (k[m] - 1,) + k[m + 1 :]

    def _is_reduced(self, k):
        for m, km in enumerate(k):
            if km > 0 and self._backward(k, m) not in self.members:
                return False
        return True

    def is_admissible(self, k):
        """True iff add(k) would succeed."""
        k = tuple(int(v) for v in k)
        if len(k) != self.dim or any(v < 0 for v in k) or k in self.members:
            return False
        if not self.members:
            return not any(k)
        return k in self._reduced

    def add(self, k):
        """Insert k; it must be the root (on an empty set) or reduced-margin."""
        k = tuple(int(v) for v in k)
        if len(k) != self.dim:
            raise ValueError(
                "dimension mismatch: %r has length %d, expected %d"
                % (k, len(k), self.dim)
            )
        if any(v < 0 for v in k):
            raise ValueError("negative entry in %r" % (k,))
        if k in self.members:
            raise ValueError("index %r already present" % (k,))
        if not self.members:
            if any(k):
                raise ValueError("first index must be the zero index, got %r" % (k,))
        elif k not in self._reduced:
            raise ValueError(
                "adding %r would break downward closedness" % (k,)
            )
        self.members.add(k)
        self._margin.discard(k)
        self._reduced.discard(k)
        for m in range(self.dim):
            nxt = self._forward(k, m)
            if nxt not in self.members:
                self._margin.add(nxt)
                # k was possibly the last missing backward neighbour
                if self._is_reduced(nxt):
                    self._reduced.add(nxt)
                else:
                    self._reduced.discard(nxt)

    def margin(self):
        if not self.members:
            raise ValueError("margin of an empty set is undefined")
        return sorted(self._margin)

    def reduced_margin(self):
        if not self.members:
            raise ValueError("reduced margin of an empty set is undefined")
        return sorted(self._reduced)

    def monotone_envelope(self, k):
        """Ancestors of k missing from the set, sorted; k must be in the margin."""
        k = tuple(k)
        if k not in self._margin:
            raise ValueError("index %r is not in the margin" % (k,))
        out = set()
        stack = [k]
        while stack:
            j = stack.pop()
            if j in out:
                continue
            out.add(j)
            for m, jm in enumerate(j):
                if jm > 0:
                    pred = self._backward(j, m)
                    if pred not in self.members and pred not in out:
                        stack.append(pred)
        return sorted(out)

    def copy(self):
        other = MonotoneIndexSet(self.dim)
        other.members = set(self.members)
        other._margin = set(self._margin)
        other._reduced = set(self._reduced)
        return other

    def validate_caches(self):
        """Recompute margin and reduced margin from scratch and compare."""
        if not self.members:
            return self._margin == set() and self._reduced == set()
        return self._margin == margin(self.members) and self._reduced == reduced_margin(
            self.members
        )

    def max_level(self, m):
        """Largest value of component m over the members."""
        return max(k[m] for k in self.members)

    def to_jsonable(self):
        return [list(k) for k in sorted(self.members)]

    @classmethod
    def from_jsonable(cls, data, dim=None):
        members = [tuple(int(v) for v in row) for row in data]
        if dim is None:
            dim = _check_dims(members)
        return cls(dim, members)

    def to_json(self):
        return json.dumps(self.to_jsonable())

    @classmethod
    def from_json(cls, text, dim=None):
        return cls.from_jsonable(json.loads(text), dim=dim)
