"""Buchberger's algorithm over prime fields, with the two classical
pair-skipping criteria, a degree ceiling, and combinatorial dimension
readers on the leading-term ideal.

Monomials are packed into single integers (7 bits per variable plus a top
degree chunk) so comparison, divisibility and multiplication are a few
machine-int operations.  That keeps the inner reduction loop fast enough
for the 9-variable Jacobian ideals the certification layer feeds in.

Soundness convention used by callers: an empty projective fiber modulo one
good prime certifies emptiness over the rationals for the screened data
(specialization can only enlarge the fiber).  `projective_empty` is
monotone in the generating set, so a basis truncated by the early-stop
flag may prove emptiness but can never fake it.
"""

from __future__ import annotations

import heapq

from .exactcore import PrimeField
from .mpoly import MPoly

CHUNK = 7
_CHUNK_MAX = (1 << (CHUNK - 1)) - 1  # 63, the largest exponent we can pack


class DegreeCeilingExceeded(RuntimeError):
    def __init__(self, degree, ceiling):
        super().__init__(
            "S-pair of degree %d exceeds the ceiling %d" % (degree, ceiling)
        )
        self.degree = degree
        self.ceiling = ceiling


class _Ring:
    """Packed-exponent helpers for a fixed variable count."""

    def __init__(self, nvars):
        self.nvars = nvars
        self.shift_deg = CHUNK * nvars
        self.low_mask = (1 << self.shift_deg) - 1
        g = 0
        for i in range(nvars + 1):
            g |= 1 << (CHUNK * i + CHUNK - 1)
        self.guard = g

    def pack(self, exp):
        e = 0
        deg = 0
        for i, v in enumerate(exp):
            if v > _CHUNK_MAX:
                raise OverflowError("exponent %d too large to pack" % v)
            e |= v << (CHUNK * i)
            deg += v
        return e | (deg << self.shift_deg)

    def unpack(self, packed):
        return tuple(
            (packed >> (CHUNK * i)) & ((1 << CHUNK) - 1) for i in range(self.nvars)
        )

    def degree(self, packed):
        return packed >> self.shift_deg

    def key(self, packed):
        """Single-integer grevlex key; larger key = larger monomial."""
        d = packed >> self.shift_deg
        return ((d + 1) << self.shift_deg) - (packed & self.low_mask)

    def divides(self, a, b):
        return ((b | self.guard) - a) & self.guard == self.guard

    def lcm(self, a, b):
        out = 0
        deg = 0
        for i in range(self.nvars):
            m = max(
                (a >> (CHUNK * i)) & ((1 << CHUNK) - 1),
                (b >> (CHUNK * i)) & ((1 << CHUNK) - 1),
            )
            out |= m << (CHUNK * i)
            deg += m
        return out | (deg << self.shift_deg)


def _to_internal(p: MPoly, ring: _Ring):
    return {ring.pack(e): c.r for e, c in p.terms.items() if c.r}


def _normal_form(terms, lts, tails, ring, p):
    """Fully reduced normal form of `terms` against the monic basis."""
    acc = dict(terms)
    heap = [(-ring.key(e), e) for e in acc]
    heapq.heapify(heap)
    out = {}
    guard = ring.guard
    while heap:
        _, e = heapq.heappop(heap)
        c = acc.get(e)
        if c is None:
            continue
        del acc[e]
        reducer = -1
        eg = e | guard
        for idx in range(len(lts)):
            lt = lts[idx]
            if (eg - lt) & guard == guard:
                reducer = idx
                break
        if reducer < 0:
            out[e] = c
            continue
        q = e - lts[reducer]
        for et, ct in tails[reducer]:
            e2 = et + q
            prev = acc.get(e2)
            if prev is None:
                v = (-c * ct) % p
                if v:
                    acc[e2] = v
                    heapq.heappush(heap, (-ring.key(e2), e2))
            else:
                v = (prev - c * ct) % p
                if v:
                    acc[e2] = v
                else:
                    del acc[e2]
    return out


def _sorted_terms(terms, ring):
    return sorted(terms.items(), key=lambda t: ring.key(t[0]), reverse=True)


class GroebnerBasis:
    """Reduced basis plus run statistics.

    When stats["early_stop"] is true the element list is a sound subset of
    the ideal whose leading terms already witnessed a zero-dimensional
    quotient; it is not inter-complete and must only feed the monotone
    readers below.
    """

    def __init__(self, field, nvars, polys, leading_exps, stats):
        self.field = field
        self.nvars = nvars
        self.polys = polys
        self._leading_exps = leading_exps
        self.stats = stats

    def leading_exponents(self):
        return list(self._leading_exps)

    def __len__(self):
        return len(self.polys)


def buchberger(
    gens,
    degree_ceiling: int = 20,
    stop_when_zero_dimensional: bool = False,
) -> GroebnerBasis:
    """Reduced Groebner basis of homogeneous generators over GF(p), grevlex.

    Pairs are processed degree first with a deterministic tiebreak, the
    product and chain criteria prune the queue, and any S-pair whose lcm
    degree exceeds `degree_ceiling` aborts the run with
    DegreeCeilingExceeded.  Identical inputs yield identical bases.
    """
    gens = [g for g in gens if not g.is_zero()]
    if not gens:
        raise ValueError("no nonzero generators")
    field = gens[0].field
    if not isinstance(field, PrimeField):
        raise TypeError("buchberger runs over prime fields only")
    nvars = gens[0].nvars
    for g in gens:
        if g.field != field or g.nvars != nvars:
            raise TypeError("generators from different rings")
    if degree_ceiling > _CHUNK_MAX - 3:
        raise ValueError("degree ceiling too large for packed exponents")
    p = field.p
    ring = _Ring(nvars)

    raw = [_to_internal(g, ring) for g in gens]
    raw = [t for t in raw if t]
    # canonical input order: by leading key then term count
    raw.sort(key=lambda t: (max(ring.key(e) for e in t), len(t)))

    lts = []  # leading packed exponents, parallel to tails
    tails = []  # list of (packed, coeff) below the leading term, monic scale
    alive = []  # redundant elements stay as reducers but spawn no pairs

    pure_power_vars = {}
    stats = {
        "s_pairs_processed": 0,
        "s_pairs_skipped": 0,
        "reductions_to_zero": 0,
        "max_degree": 0,
        "early_stop": False,
    }

    pending = {}  # (i, j) -> heap entry marker
    heap = []

    def note_pure_power(lt):
        exp = ring.unpack(lt)
        support = [i for i, e in enumerate(exp) if e]
        if len(support) == 1:
            v = support[0]
            d = exp[v]
            if v not in pure_power_vars or d < pure_power_vars[v]:
                pure_power_vars[v] = d

    def insert(terms):
        items = _sorted_terms(terms, ring)
        lt, lc = items[0]
        inv = pow(lc, p - 2, p)
        tail = [(e, c * inv % p) for e, c in items[1:]]
        idx = len(lts)
        for i in range(len(lts)):
            if alive[i] and ring.divides(lt, lts[i]):
                alive[i] = False
        lts.append(lt)
        tails.append(tail)
        alive.append(True)
        note_pure_power(lt)
        for i in range(idx):
            if not alive[i]:
                continue
            l = ring.lcm(lts[i], lt)
            entry = (ring.degree(l), ring.key(l), i, idx)
            pending[(i, idx)] = l
            heapq.heappush(heap, entry)
        return idx

    for terms in raw:
        nf = _normal_form(terms, lts, tails, ring, p)
        if nf:
            insert(nf)

    def zero_dimensional():
        return len(pure_power_vars) == nvars

    while heap:
        if stop_when_zero_dimensional and zero_dimensional():
            stats["early_stop"] = True
            break
        deg, _, i, j = heapq.heappop(heap)
        if (i, j) not in pending:
            continue
        l = pending.pop((i, j))
        if deg > degree_ceiling:
            raise DegreeCeilingExceeded(deg, degree_ceiling)
        # product criterion: coprime leading terms reduce to zero
        if l == lts[i] + lts[j]:
            stats["s_pairs_skipped"] += 1
            continue
        # chain criterion: some third element divides the lcm and both
        # side pairs were already handled
        skipped = False
        for k in range(len(lts)):
            if k == i or k == j or not alive[k]:
                continue
            if ring.divides(lts[k], l):
                a = (min(i, k), max(i, k))
                b = (min(j, k), max(j, k))
                if a not in pending and b not in pending:
                    skipped = True
                    break
        if skipped:
            stats["s_pairs_skipped"] += 1
            continue
        stats["s_pairs_processed"] += 1
        stats["max_degree"] = max(stats["max_degree"], deg)
        # S-polynomial of the monic pair
        qi = l - lts[i]
        qj = l - lts[j]
        terms = {}
        for e, c in tails[i]:
            terms[e + qi] = c
        for e, c in tails[j]:
            e2 = e + qj
            v = (terms.get(e2, 0) - c) % p
            if v:
                terms[e2] = v
            else:
                terms.pop(e2, None)
        nf = _normal_form(terms, lts, tails, ring, p)
        if nf:
            insert(nf)
        else:
            stats["reductions_to_zero"] += 1

    # final inter-reduction: keep minimal leading terms, reduce tails, monic
    order = sorted(
        (k for k in range(len(lts)) if alive[k]), key=lambda k: ring.key(lts[k])
    )
    minimal = []
    for k in order:
        if not any(ring.divides(lts[m], lts[k]) for m in minimal):
            minimal.append(k)
    red_lts = [lts[k] for k in minimal]
    red_tails = []
    for pos, k in enumerate(minimal):
        sub_lts = [red_lts[m] for m in range(len(minimal)) if m != pos]
        sub_tails = [tails[minimal[m]] for m in range(len(minimal)) if m != pos]
        nf = _normal_form(dict(tails[k]), sub_lts, sub_tails, ring, p)
        red_tails.append(_sorted_terms(nf, ring))

    polys = []
    leading = []
    for lt, tail in zip(red_lts, red_tails):
        exp_lt = ring.unpack(lt)
        leading.append(exp_lt)
        pairs = [(exp_lt, field.coerce(1))] + [
            (ring.unpack(e), field.coerce(c)) for e, c in tail
        ]
        polys.append(MPoly.from_terms(nvars, pairs, field))
    stats["basis_size"] = len(polys)
    stats["pure_power_degrees"] = dict(sorted(pure_power_vars.items()))
    return GroebnerBasis(field, nvars, polys, leading, stats)


def projective_empty(gb: GroebnerBasis) -> bool:
    """True when every variable shows a pure power among the leading terms.

    Monotone: enlarging the generating set can only switch False to True,
    so a verdict of True from a truncated basis stands.
    """
    found = set()
    for exp in gb.leading_exponents():
        support = [i for i, e in enumerate(exp) if e]
        if len(support) == 1:
            found.add(support[0])
    return len(found) == gb.nvars


def homogeneous_dimension(gb: GroebnerBasis) -> int:
    """Krull dimension of the quotient by the leading-term ideal.

    This is the size of the largest variable subset S such that no leading
    term is supported inside S.  For the affine cone of a projectively
    empty locus the answer is 0.
    """
    n = gb.nvars
    masks = []
    for exp in gb.leading_exponents():
        m = 0
        for i, e in enumerate(exp):
            if e:
                m |= 1 << i
        if m == 0:
            return -1  # unit ideal, nothing survives
        masks.append(m)
    best = -1
    for s in range(1 << n):
        ok = True
        for m in masks:
            if m & ~s == 0:
                ok = False
                break
        if ok:
            c = bin(s).count("1")
            if c > best:
                best = c
    return best


def projective_dimension(gb: GroebnerBasis) -> int:
    """Projective dimension of the zero locus; -1 means empty."""
    return homogeneous_dimension(gb) - 1
