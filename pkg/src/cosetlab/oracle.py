"""Brute-force double cosets H \\ G / K for small explicit groups.

This is the ground truth the three family modules are checked against: the
law a uniform element of G induces on double cosets, computed by listing them.
Elements are any hashable values; the group supplies ``compose`` and ``invert``.
"""

from __future__ import annotations

import itertools
from collections.abc import Callable, Hashable, Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from cosetlab import ctab, glnq, hyperoct
from cosetlab.combinat import Partition, Permutation, enumerate_permutations
from cosetlab.config import LIMITS
from cosetlab.errors import CosetlabError, LimitExceeded


class SmallGroup:
    """A finite group listed element by element.

    Closure is checked on every pair when |G| <= ``LIMITS.full_closure_check``
    and on a fixed random sample of pairs otherwise.
    """

    def __init__(
        self,
        elements: Iterable[Hashable],
        compose: Callable,
        invert: Callable,
        identity: Hashable,
        name: str = "G",
        check: bool = True,
    ):
        self.elements = list(elements)
        if len(self.elements) > LIMITS.max_group_order:
            raise LimitExceeded(f"|{name}| = {len(self.elements)} exceeds cap {LIMITS.max_group_order}")
        self.index = {g: i for i, g in enumerate(self.elements)}
        if len(self.index) != len(self.elements):
            raise CosetlabError(f"{name}: repeated elements")
        self.compose = compose
        self.invert = invert
        self.identity = identity
        self.name = name
        if check:
            self._check()

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, g) -> bool:
        return g in self.index

    def __iter__(self):
        return iter(self.elements)

    def _check(self) -> None:
        if self.identity not in self.index:
            raise CosetlabError(f"{self.name}: identity missing")
        for g in self.elements:
            if self.invert(g) not in self.index:
                raise CosetlabError(f"{self.name}: not closed under inverses")
            if self.compose(g, self.identity) != g or self.compose(self.identity, g) != g:
                raise CosetlabError(f"{self.name}: identity law fails")
        if len(self) <= LIMITS.full_closure_check:
            pairs: Iterable = itertools.product(self.elements, repeat=2)
        else:
            rng = np.random.default_rng(0)
            idx = rng.integers(0, len(self), size=(20_000, 2))
            pairs = ((self.elements[a], self.elements[b]) for a, b in idx)
        for a, b in pairs:
            if self.compose(a, b) not in self.index:
                raise CosetlabError(f"{self.name}: not closed under composition")

    def subgroup(self, elements: Iterable[Hashable], name: str = "H") -> SmallGroup:
        elements = list(elements)
        missing = [g for g in elements if g not in self.index]
        if missing:
            raise CosetlabError(f"{name} is not contained in {self.name}")
        return SmallGroup(elements, self.compose, self.invert, self.identity, name)

    def conjugate(self, sub: SmallGroup, g) -> SmallGroup:
        """g^{-1} sub g."""
        gi = self.invert(g)
        return SmallGroup(
            [self.compose(self.compose(gi, h), g) for h in sub], self.compose, self.invert, self.identity,
            f"{sub.name}^g",
        )


# ---------------------------------------------------------------- factories


def _perm_compose(a, b):
    return a.compose(b)


def _perm_invert(a):
    return a.inverse()


def symmetric_group(n: int) -> SmallGroup:
    return SmallGroup(enumerate_permutations(n), _perm_compose, _perm_invert, Permutation.identity(n), f"S_{n}")


def permutation_group(elements: Iterable[Sequence[int]], n: int, name: str = "H") -> SmallGroup:
    return SmallGroup(
        (Permutation(e) for e in elements), _perm_compose, _perm_invert, Permutation.identity(n), name
    )


def young_subgroup(parts: Sequence[int]) -> SmallGroup:
    """S_λ: permutations preserving each consecutive block of sizes λ_1, λ_2, ..."""
    blocks = []
    start = 1
    for p in parts:
        blocks.append(list(range(start, start + p)))
        start += p
    n = start - 1
    elements = []
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        elements.append(Permutation._trusted(x for block in choice for x in block))
    return permutation_group(elements, n, "S_(" + ",".join(map(str, parts)) + ")")


def hyperoctahedral_subgroup(n: int, pairing: str = "central") -> SmallGroup:
    return permutation_group(hyperoct.hyperoctahedral_group(n, pairing), 2 * n, f"B_{n}")


def gl_group(n: int, q: int) -> SmallGroup:
    return SmallGroup(
        glnq.enumerate_gl(n, q),
        lambda a, b: a @ b,
        glnq.inverse,
        glnq.FqMatrix.identity(n, q),
        f"GL_{n}(F_{q})",
    )


def borel_subgroup(G: SmallGroup) -> SmallGroup:
    return G.subgroup((g for g in G if g.is_lower_triangular()), "B")


# ---------------------------------------------------------------- double cosets


def double_cosets(G: SmallGroup, H: SmallGroup, K: SmallGroup) -> list[frozenset[int]]:
    """H\\G/K as sets of element indices of G, ordered by their smallest index."""
    for sub in (H, K):
        if any(g not in G for g in sub):
            raise CosetlabError(f"{sub.name} is not a subgroup of {G.name}")
    label = [-1] * len(G)
    cosets = []
    for i, s in enumerate(G.elements):
        if label[i] >= 0:
            continue
        hs = [G.compose(h, s) for h in H]
        members = frozenset(G.index[G.compose(x, k)] for x in hs for k in K)
        for j in members:
            label[j] = len(cosets)
        cosets.append(members)
    return cosets


@dataclass
class IdentityCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class IdentityReport:
    group: str
    coset_sizes: list[int]
    checks: list[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "coset_sizes": self.coset_sizes,
            "passed": self.passed,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
        }


def _intersection_size(G: SmallGroup, A: SmallGroup, B: SmallGroup, s, s_inv) -> int:
    # |A ∩ s B s^{-1}|
    return sum(1 for b in B if G.compose(G.compose(s, b), s_inv) in A)


def burnside_count_naive(G: SmallGroup, H: SmallGroup, K: SmallGroup) -> Fraction:
    """(1/|H||K|) sum_{h,k} |{g : h^{-1} g k = g}| by the literal triple loop."""
    total = 0
    for h in H:
        hi = G.invert(h)
        for k in K:
            total += sum(1 for g in G if G.compose(G.compose(hi, g), k) == g)
    return Fraction(total, len(H) * len(K))


def burnside_count(G: SmallGroup, H: SmallGroup, K: SmallGroup) -> Fraction:
    """Same sum regrouped: h^{-1} g k = g iff k = g^{-1} h g, so count (g, h) with g^{-1} h g in K."""
    total = 0
    for g in G:
        gi = G.invert(g)
        total += sum(1 for h in H if G.compose(G.compose(gi, h), g) in K)
    return Fraction(total, len(H) * len(K))


def verify_identities(G: SmallGroup, H: SmallGroup, K: SmallGroup, naive_limit: int = 200_000) -> IdentityReport:
    cosets = double_cosets(G, H, K)
    sizes = [len(c) for c in cosets]
    report = IdentityReport(f"{H.name}\\{G.name}/{K.name}", sizes)

    bad = []
    for c in cosets:
        s = G.elements[min(c)]
        si = G.invert(s)
        left = len(H) * len(K) // _intersection_size(G, H, K, s, si)
        right = len(H) * len(K) // _intersection_size(G, K, H, si, s)
        if not (len(c) == left == right and len(H) * len(K) % len(c) == 0):
            bad.append((str(s), len(c), left, right))
    report.checks.append(IdentityCheck("coset size via stabilizers", not bad, f"failures: {bad[:3]}" if bad else ""))

    index = Fraction(len(G), len(H))
    total = sum((Fraction(x, len(H)) for x in sizes), Fraction(0))
    report.checks.append(IdentityCheck("index as sum of coset sizes", total == index, f"{total} vs {index}"))

    fast = burnside_count(G, H, K)
    ok = fast == len(cosets)
    detail = f"{fast} vs {len(cosets)} cosets"
    if len(G) * len(H) * len(K) <= naive_limit:
        naive = burnside_count_naive(G, H, K)
        ok = ok and naive == fast
        detail += f"; naive sum {naive}"
    report.checks.append(IdentityCheck("coset count via fixed points", ok, detail))
    return report


def induced_distribution(
    G: SmallGroup, H: SmallGroup, K: SmallGroup, labeler: Callable[[Hashable], Hashable]
) -> dict[Hashable, Fraction]:
    """Mass |HsK|/|G| per label; the labeler must be constant on each double coset."""
    out: dict[Hashable, Fraction] = {}
    for c in double_cosets(G, H, K):
        labels = {labeler(G.elements[i]) for i in c}
        if len(labels) != 1:
            raise CosetlabError(f"labeler is not constant on a double coset: {sorted(map(str, labels))[:4]}")
        (lab,) = labels
        if lab in out:
            raise CosetlabError(f"label {lab} is shared by two double cosets")
        out[lab] = Fraction(len(c), len(G))
    return out


def conjugate_counterexample(G: SmallGroup, H: SmallGroup):
    """Find g ∉ H so that, with K = g^{-1}Hg, the coset HgK has size |H| and misses the identity."""
    for g in G:
        if g in H:
            continue
        K = G.conjugate(H, g)
        coset = {G.compose(G.compose(h, g), k) for h in H for k in K}
        if len(coset) == len(H) and G.identity not in coset:
            return g, K, coset
    return None


# ---------------------------------------------------------------- per-family reports


def verify_family(family: str, **params) -> dict:
    """Identity checks plus induced law vs closed form for one family at desk scale."""
    if family == "mallows":
        from cosetlab import mallows

        n, q = int(params.get("n", 2)), int(params.get("q", 2))
        G = gl_group(n, q)
        H = K = borel_subgroup(G)
        induced = induced_distribution(G, H, K, glnq.bruhat_cell)
        model = mallows.MallowsModel(n, q)
        expected = {w: mallows.pmf(model, w) for w in enumerate_permutations(n)}
        sizes = {str(w): len(G) * p for w, p in induced.items()}
    elif family == "ewens":
        n = int(params.get("n", 2))
        G = symmetric_group(2 * n)
        H = K = hyperoctahedral_subgroup(n, "central")
        induced = induced_distribution(G, H, K, lambda s: hyperoct.coset_partition(s, "central"))
        model = hyperoct.EwensModel(n, Fraction(1, 2))
        expected = hyperoct.ewens_distribution(model)
        sizes = {str(lam): len(G) * p for lam, p in induced.items()}
    elif family == "fisher-yates":
        rows = tuple(params.get("rows", (3, 2)))
        cols = tuple(params.get("cols", (2, 2, 1)))
        margins = ctab.MarginSpec(rows, cols)
        G = symmetric_group(margins.n)
        H = young_subgroup(cols)  # acts on values, from the left
        K = young_subgroup(rows)  # acts on positions, from the right
        induced = induced_distribution(G, H, K, lambda s: ctab.table_of_permutation(s, margins))
        expected = {t: ctab.fisher_yates_pmf(t) for t in ctab.enumerate_tables(margins)}
        sizes = {str(list(map(list, t.entries))): len(G) * p for t, p in induced.items()}
    else:
        raise CosetlabError(f"unknown family {family!r}; expected mallows, ewens or fisher-yates")

    report = verify_identities(G, H, K)
    match = induced == expected
    report.checks.append(IdentityCheck("induced law equals closed form", match))
    out = report.to_dict()
    out["family"] = family
    out["sizes"] = {k: int(v) for k, v in sizes.items()}
    return out

