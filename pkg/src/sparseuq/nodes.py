"""Nested univariate collocation node families.

Three families on [-1, 1], all nested so that the level-k node set is a
prefix of one fixed hierarchical sequence y_(0), y_(1), ...:

* ``leja``: greedy points maximizing the product of distances to the
  points already placed, anchored at y_(0) = -1.  Unit growth, the level
  k set holds the first k+1 points.
* ``rleja``: projection of the analogous greedy sequence on the complex
  unit circle anchored at 1.  The circle sequence has the closed form
  angle recursion theta_0 = 0, theta_1 = pi, theta_{2m} = theta_m / 2,
  theta_{2m+1} = theta_{2m} + pi; projecting with cos and dropping
  repeated values yields the real sequence 1, -1, 0, ...  Unit growth.
* ``clenshaw_curtis``: extrema of Chebyshev polynomials with the
  doubling rule m(0) = 0, m(k) = 2^k; level k holds the 2^k + 1 points
  -cos(pi i / 2^k).  The hierarchical order is level-major with odd
  numerators increasing inside each level.

The growth function m(k) gives the largest sequence position in level k,
so level sets have m(k) + 1 points.  Node values are computed once and
cached, which makes nestedness exact in floating point.
"""

import math
import threading
from fractions import Fraction

import numpy as np

from . import kernels

LEJA = "leja"
RLEJA = "rleja"
CLENSHAW_CURTIS = "clenshaw_curtis"

_ALIASES = {
    "leja": LEJA,
    "rleja": RLEJA,
    "r-leja": RLEJA,
    "r_leja": RLEJA,
    "clenshaw_curtis": CLENSHAW_CURTIS,
    "clenshaw-curtis": CLENSHAW_CURTIS,
    "cc": CLENSHAW_CURTIS,
}

_LEJA_CANDIDATES = 100001
_GOLDEN_ITERS = 90


def normalize_kind(kind):
    try:
        return _ALIASES[str(kind).strip().lower()]
    except KeyError:
        raise ValueError("unknown node family %r" % (kind,))


def growth(kind, k):
    """Largest sequence position of level k: identity, or doubling for CC."""
    if k < 0:
        raise ValueError("level must be non-negative")
    if normalize_kind(kind) == CLENSHAW_CURTIS:
        return 0 if k == 0 else 2 ** k
    return k


def growth_inverse(kind, i):
    """Smallest level whose node set contains sequence position i."""
    if i < 0:
        raise ValueError("node index must be non-negative")
    if normalize_kind(kind) == CLENSHAW_CURTIS:
        if i == 0:
            return 0
        if i == 1:
            return 1
        return (i - 1).bit_length()
    return i


def _golden_max(f, a, b, iters=_GOLDEN_ITERS):
    """Golden-section maximization of a unimodal f on [a, b]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc = f(c)
    fd = f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


class NodeFamily:
    """One nested node family with cached sequence and basis data."""

    _registry = {}
    _registry_lock = threading.Lock()

    def __init__(self, kind):
        self.kind = normalize_kind(kind)
        self._lock = threading.RLock()
        self._nodes = []
        self._nodes_arr = np.empty(0)
        self._mks = []
        self._mks_arr = np.empty(0, dtype=np.int64)
        self._denoms = []
        self._denoms_arr = np.empty(0)
        self._level_denom_cache = {}
        if self.kind == RLEJA:
            self._rleja_qs = [Fraction(0), Fraction(1)]
            self._rleja_seen = set()
            self._rleja_next = 0
        if self.kind == CLENSHAW_CURTIS:
            self._cc_next = (1, 0)

    @classmethod
    def get(cls, kind):
        """Shared per-kind instance so caches are reused across callers."""
        kind = normalize_kind(kind)
        with cls._registry_lock:
            fam = cls._registry.get(kind)
            if fam is None:
                fam = cls(kind)
                cls._registry[kind] = fam
            return fam

    def growth(self, k):
        return growth(self.kind, k)

    def growth_inverse(self, i):
        return growth_inverse(self.kind, i)

    # -- sequence generation ------------------------------------------------

    def _extend_leja(self, n):
        nodes = self._nodes
        if not nodes:
            nodes.append(-1.0)
        t = np.linspace(0.0, 1.0, _LEJA_CANDIDATES)
        cand = -np.cos(np.pi * t)
        while len(nodes) < n:
            arr = np.asarray(nodes)

            def objective(y):
                d = np.abs(y - arr)
                if np.any(d == 0.0):
                    return -np.inf
                return float(np.sum(np.log(d)))

            vals = kernels.log_product(cand, arr)
            best = float(np.max(vals))
            # leftmost candidate within tolerance of the best value, so a
            # symmetric tie resolves to the smaller point
            pos = int(np.argmax(vals >= best - 1e-9))
            y0 = float(cand[pos])
            srt = np.sort(arr)
            below = srt[srt < y0]
            above = srt[srt > y0]
            lo = float(below[-1]) if below.size else -1.0
            hi = float(above[0]) if above.size else 1.0
            y = _golden_max(objective, lo, hi)
            # a domain endpoint attaining the max is the real argsup; the
            # polish can only approach it from inside, so snap to it
            for endpoint in (lo, hi):
                if endpoint in (-1.0, 1.0) and objective(endpoint) >= objective(y) - 1e-12:
                    y = endpoint
                    break
            # symmetric configurations put the true argmax exactly at 0;
            # the polish stalls within ~1e-10 there, so snap when 0 wins
            if lo < 0.0 < hi and objective(0.0) >= objective(y) - 1e-12:
                y = 0.0
            nodes.append(float(y))

    def _extend_rleja(self, n):
        nodes = self._nodes
        qs = self._rleja_qs
        seen = self._rleja_seen
        idx = self._rleja_next
        half = Fraction(1, 2)
        while len(nodes) < n:
            if idx >= len(qs):
                m = len(qs) // 2
                q = qs[m] / 2
                qs.append(q)
                qs.append(q + 1)
            q = qs[idx]
            idx += 1
            r = q if q <= 1 else 2 - q
            if r in seen:
                continue
            seen.add(r)
            # cos(pi r) written as sin(pi (1/2 - r)); the argument is an
            # exact dyadic float, so symmetric pairs project to exactly
            # opposite values and the centre projects to exactly 0.0
            nodes.append(math.sin(math.pi * float(half - r)))
        self._rleja_next = idx

    def _extend_cc(self, n):
        nodes = self._nodes
        if not nodes:
            nodes.append(0.0)
        k, i = self._cc_next
        while len(nodes) < n:
            nodes.append(math.sin(math.pi * (i / float(2 ** k) - 0.5)))
            if k == 1:
                if i == 0:
                    i = 2
                else:
                    k, i = 2, 1
            else:
                i += 2
                if i > 2 ** k - 1:
                    k, i = k + 1, 1
        self._cc_next = (k, i)

    def ensure_nodes(self, n):
        with self._lock:
            if len(self._nodes) >= n:
                return
            if self.kind == LEJA:
                self._extend_leja(n)
            elif self.kind == RLEJA:
                self._extend_rleja(n)
            else:
                self._extend_cc(n)
            self._nodes_arr = np.asarray(self._nodes)

    def nodes(self, n):
        """First n entries of the hierarchical sequence."""
        self.ensure_nodes(n)
        return self._nodes_arr[:n].copy()

    def point(self, i):
        self.ensure_nodes(i + 1)
        return self._nodes[i]

    def level_nodes(self, k):
        """The level-k set, in hierarchical sequence order."""
        return self.nodes(self.growth(k) + 1)

    # -- basis data ---------------------------------------------------------

    def ensure_basis(self, n):
        """Precompute level sizes and denominators for sequence positions < n."""
        with self._lock:
            if len(self._mks) >= n:
                return
            while len(self._mks) < n:
                i = len(self._mks)
                mk = self.growth(self.growth_inverse(i))
                self.ensure_nodes(mk + 1)
                yi = self._nodes[i]
                d = 1.0
                for j in range(mk + 1):
                    if j != i:
                        d *= yi - self._nodes[j]
                self._mks.append(mk)
                self._denoms.append(d)
            self._mks_arr = np.asarray(self._mks, dtype=np.int64)
            self._denoms_arr = np.asarray(self._denoms)

    def basis_matrix(self, ys, n):
        """Hierarchical basis table: column i is h_i(ys), i < n."""
        self.ensure_basis(n)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        need = int(self._mks_arr[:n].max()) + 1 if n else 0
        return kernels.basis_table(
            ys, self._nodes_arr[:need], self._mks_arr[:n], self._denoms_arr[:n]
        )

    def _level_denoms(self, k):
        denoms = self._level_denom_cache.get(k)
        if denoms is None:
            mk = self.growth(k)
            self.ensure_nodes(mk + 1)
            arr = self._nodes_arr[: mk + 1]
            denoms = np.empty(mk + 1)
            for i in range(mk + 1):
                d = 1.0
                for j in range(mk + 1):
                    if j != i:
                        d *= arr[i] - arr[j]
                denoms[i] = d
            self._level_denom_cache[k] = denoms
        return denoms

    def lagrange_matrix(self, ys, k):
        """Full Lagrange basis table on the level-k set (sequence order)."""
        mk = self.growth(k)
        denoms = self._level_denoms(k)
        ys = np.ascontiguousarray(ys, dtype=np.float64)
        mks = np.full(mk + 1, mk, dtype=np.int64)
        return kernels.basis_table(ys, self._nodes_arr[: mk + 1], mks, denoms)

    def hierarchical_basis_eval(self, i, y):
        """Value of the single hierarchical basis function h_i at y."""
        return float(self.basis_matrix(np.atleast_1d(float(y)), i + 1)[0, i])


def get_family(kind_or_family):
    if isinstance(kind_or_family, NodeFamily):
        return kind_or_family
    return NodeFamily.get(kind_or_family)


def hierarchical_basis_eval(kind, i, y):
    """Value of the hierarchical basis function of node i at scalar y."""
    return get_family(kind).hierarchical_basis_eval(int(i), y)


def leja_nodes(n):
    """First n Leja points on [-1, 1], starting at -1."""
    return get_family(LEJA).nodes(n)


def rleja_nodes(n):
    """First n projected circle-Leja points, starting at 1, -1, 0."""
    return get_family(RLEJA).nodes(n)


def clenshaw_curtis_nodes(k):
    """The level-k Clenshaw-Curtis set in hierarchical sequence order."""
    return get_family(CLENSHAW_CURTIS).level_nodes(k)


def rleja_circle_fractions(n):
    """First n circle angles as exact multiples of pi (diagnostic helper).

    These are the angles of the greedy sequence on the full unit circle
    whose projection gives the rleja family.
    """
    fam = get_family(RLEJA)
    with fam._lock:
        qs = fam._rleja_qs
        while len(qs) < n:
            m = len(qs) // 2
            q = qs[m] / 2
            qs.append(q)
            qs.append(q + 1)
        return list(qs[:n])


def lebesgue_constant(kind, k, samples=2001):
    """Max of the level-k Lebesgue function over an equispaced grid."""
    if samples < 2:
        raise ValueError("need at least two sample points")
    fam = get_family(kind)
    ys = np.linspace(-1.0, 1.0, samples)
    table = fam.lagrange_matrix(ys, k)
    return float(np.abs(table).sum(axis=1).max())


def detail_operator_values(kind, k, ys):
    """Pointwise sum of absolute detail coefficient functions at level k.

    The detail operator at level k sends f to the difference of its
    level-k and level-(k-1) interpolants; the returned vector holds, for
    each sample, the l1 norm of the coefficient functions, whose max
    estimates the sup operator norm.
    """
    fam = get_family(kind)
    ys = np.asarray(ys, dtype=np.float64)
    if k == 0:
        return np.ones(ys.shape[0])
    cur = fam.lagrange_matrix(ys, k)
    prev = fam.lagrange_matrix(ys, k - 1)
    diff = cur.copy()
    diff[:, : prev.shape[1]] -= prev
    return np.abs(diff).sum(axis=1)


def detail_sup_norm(kind, k, samples=2001):
    """Sample-grid estimate of the sup operator norm of the level-k detail."""
    ys = np.linspace(-1.0, 1.0, samples)
    return float(detail_operator_values(kind, k, ys).max())


def lebesgue_report(kind, kmax, samples=2001):
    """Per-level interpolation and detail norm estimates plus a growth fit.

    The fit returns the smallest theta such that every detail norm up to
    kmax is bounded by (1 + k)^theta, reported with c fixed to 1.
    """
    interp = [lebesgue_constant(kind, k, samples) for k in range(kmax + 1)]
    detail = [detail_sup_norm(kind, k, samples) for k in range(kmax + 1)]
    theta = 0.0
    for k in range(1, kmax + 1):
        if detail[k] > 1.0:
            theta = max(theta, math.log(detail[k]) / math.log(1.0 + k))
    return {
        "kind": normalize_kind(kind),
        "interp_norms": interp,
        "detail_norms": detail,
        "c": 1.0,
        "theta": theta,
    }


def node_table(kind, n):
    """Rows (i, y_i) of the first n sequence entries, for CSV export."""
    vals = get_family(kind).nodes(n)
    return [(i, float(vals[i])) for i in range(n)]
