"""Molecular graph model and the sanitization step shared by the parser and editors."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from enum import IntEnum
from functools import cached_property

from .elements import ATOMIC_WEIGHT, allowed_valences, is_element
from .errors import ChemError, KekulizationFailure, UnknownElement, ValenceViolation


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def symbol(self) -> str:
        return _BOND_SYMBOLS[self]


_BOND_SYMBOLS = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


@dataclass(frozen=True, slots=True)
class Atom:
    """A graph node.

    ``bracket`` atoms carry a fixed hydrogen count (``explicit_h``) and never
    receive implicit hydrogens; other atoms are filled up to the lowest
    allowed valence.
    """

    element: str
    formal_charge: int = 0
    explicit_h: int = 0
    implicit_h: int = 0
    aromatic: bool = False
    isotope: int | None = None
    in_ring: bool = False
    bracket: bool = False

    @property
    def total_h(self) -> int:
        return self.explicit_h + self.implicit_h

    @property
    def is_heavy(self) -> bool:
        return self.element != "H"


@dataclass(frozen=True, slots=True)
class Bond:
    begin: int
    end: int
    order: BondOrder

    def other(self, idx: int) -> int:
        return self.end if idx == self.begin else self.begin


class Molecule:
    """Immutable, sanitized molecular graph.

    Construct through :func:`build_molecule` (or the SMILES parser); the
    constructor itself trusts its inputs.
    """

    __slots__ = ("atoms", "bonds", "kekule", "stereo_count", "__dict__")

    def __init__(
        self,
        atoms: Sequence[Atom],
        bonds: Sequence[Bond],
        kekule: Sequence[int],
        stereo_count: int = 0,
    ):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.kekule: tuple[int, ...] = tuple(kekule)
        self.stereo_count = stereo_count

    def __repr__(self) -> str:
        from .smiles import write_smiles

        return f"Molecule({write_smiles(self)!r})"

    def __len__(self) -> int:
        return len(self.atoms)

    # -- topology -------------------------------------------------------
    @cached_property
    def adjacency(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """Per atom: ``(neighbor, bond index)`` pairs in bond order."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.atoms]
        for bi, b in enumerate(self.bonds):
            adj[b.begin].append((b.end, bi))
            adj[b.end].append((b.begin, bi))
        return tuple(tuple(x) for x in adj)

    def neighbors(self, idx: int) -> list[int]:
        return [n for n, _ in self.adjacency[idx]]

    def degree(self, idx: int) -> int:
        return len(self.adjacency[idx])

    def bond_between(self, i: int, j: int) -> int | None:
        for n, bi in self.adjacency[i]:
            if n == j:
                return bi
        return None

    def valence(self, idx: int) -> int:
        """Kekulé bond-order sum plus hydrogens."""
        return sum(self.kekule[bi] for _, bi in self.adjacency[idx]) + self.atoms[idx].total_h

    @cached_property
    def ring_bond_flags(self) -> tuple[bool, ...]:
        return tuple(not b for b in _bridge_flags(len(self.atoms), self.bonds, self.adjacency))

    @cached_property
    def fragments(self) -> tuple[tuple[int, ...], ...]:
        """Connected components as sorted atom-index tuples, ordered by lowest index."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            stack, comp = [start], []
            seen[start] = True
            while stack:
                a = stack.pop()
                comp.append(a)
                for n, _ in self.adjacency[a]:
                    if not seen[n]:
                        seen[n] = True
                        stack.append(n)
            out.append(tuple(sorted(comp)))
        return tuple(out)

    @cached_property
    def rings(self) -> tuple[tuple[int, ...], ...]:
        """Smallest set of smallest rings, each as an ordered atom cycle."""
        return _sssr(len(self.atoms), self.bonds, self.adjacency, self.ring_bond_flags)

    # -- composition ----------------------------------------------------
    @property
    def heavy_atom_count(self) -> int:
        return sum(1 for a in self.atoms if a.element != "H")

    @property
    def molecular_weight(self) -> float:
        mw = 0.0
        for a in self.atoms:
            mw += ATOMIC_WEIGHT[a.element] + a.total_h * ATOMIC_WEIGHT["H"]
        return mw

    @property
    def formal_charge(self) -> int:
        return sum(a.formal_charge for a in self.atoms)

    def elements(self) -> set[str]:
        out = {a.element for a in self.atoms}
        if any(a.total_h for a in self.atoms):
            out.add("H")
        return out

    # -- derived molecules ----------------------------------------------
    def subgraph(self, indices: Iterable[int]) -> Molecule:
        """Induced subgraph on ``indices`` (kept in ascending order)."""
        keep = sorted(set(indices))
        remap = {old: new for new, old in enumerate(keep)}
        atoms = [self.atoms[i] for i in keep]
        bonds, kek = [], []
        for bi, b in enumerate(self.bonds):
            if b.begin in remap and b.end in remap:
                bonds.append(Bond(remap[b.begin], remap[b.end], b.order))
                kek.append(self.kekule[bi])
        # ring flags and implicit H of a full fragment are unchanged
        return Molecule(atoms, bonds, kek, self.stereo_count)

    def renumbered(self, order: Sequence[int]) -> Molecule:
        """Same graph with atom ``order[k]`` moved to position ``k``."""
        remap = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[i] for i in order]
        bonds = [Bond(remap[b.begin], remap[b.end], b.order) for b in self.bonds]
        return Molecule(atoms, bonds, self.kekule, self.stereo_count)


# ---------------------------------------------------------------------------
# sanitization


def build_molecule(
    atoms: Sequence[Atom],
    bonds: Sequence[Bond],
    stereo_count: int = 0,
    positions: Sequence[int | None] | None = None,
) -> Molecule:
    """Validate a raw graph and return a sanitized :class:`Molecule`.

    Merges plain hydrogen nodes into their parents, perceives ring bonds,
    kekulizes aromatic systems and fills implicit hydrogens. Raises
    :class:`ValenceViolation` or :class:`KekulizationFailure` (with the
    offending atom's source position when ``positions`` is given).
    """
    atoms = list(atoms)
    bonds = list(bonds)
    pos = list(positions) if positions is not None else [None] * len(atoms)

    seen_pairs = set()
    for b in bonds:
        if b.begin == b.end:
            raise ChemError("self-loop bond", pos[b.begin])
        key = (min(b.begin, b.end), max(b.begin, b.end))
        if key in seen_pairs:
            raise ChemError("duplicate bond between the same atom pair", pos[b.end])
        seen_pairs.add(key)
    for i, a in enumerate(atoms):
        if not is_element(a.element):
            raise UnknownElement(f"unknown element {a.element!r}", pos[i])

    atoms, bonds, pos = _merge_hydrogens(atoms, bonds, pos)

    n = len(atoms)
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, b in enumerate(bonds):
        adj[b.begin].append((b.end, bi))
        adj[b.end].append((b.begin, bi))
    bridge = _bridge_flags(n, bonds, adj)
    in_ring = [False] * n
    for bi, b in enumerate(bonds):
        if not bridge[bi]:
            in_ring[b.begin] = in_ring[b.end] = True

    # aromatic bonds must sit inside rings between aromatic atoms
    for bi, b in enumerate(bonds):
        if b.order == BondOrder.AROMATIC:
            if not (atoms[b.begin].aromatic and atoms[b.end].aromatic):
                raise KekulizationFailure("aromatic bond to a non-aromatic atom", pos[b.end])
            if bridge[bi]:
                bonds[bi] = Bond(b.begin, b.end, BondOrder.SINGLE)
    for i, a in enumerate(atoms):
        if a.aromatic:
            if not in_ring[i]:
                raise KekulizationFailure("aromatic atom outside a ring", pos[i])
            if not any(bonds[bi].order == BondOrder.AROMATIC for _, bi in adj[i]):
                raise KekulizationFailure("aromatic atom without aromatic bonds", pos[i])

    kekule = _kekulize(atoms, bonds, adj, pos)

    final = []
    for i, a in enumerate(atoms):
        bond_sum = sum(kekule[bi] for _, bi in adj[i]) + a.explicit_h
        allowed = allowed_valences(a.element, a.formal_charge)
        implicit = 0
        if a.bracket:
            # a lone bracket atom with nothing attached ("[Se]") is a bare atom
            if allowed is not None and bond_sum not in allowed and (bond_sum or adj[i]):
                raise ValenceViolation(
                    f"{a.element} with charge {a.formal_charge} has valence {bond_sum}", pos[i]
                )
        elif allowed is not None:
            fits = [v for v in allowed if v >= bond_sum]
            if not fits:
                raise ValenceViolation(
                    f"{a.element} with charge {a.formal_charge} has valence {bond_sum}", pos[i]
                )
            implicit = fits[0] - bond_sum
        final.append(replace(a, implicit_h=implicit, in_ring=in_ring[i]))
    return Molecule(final, bonds, kekule, stereo_count)


def _merge_hydrogens(atoms, bonds, pos):
    """Fold plain ``[H]`` nodes bonded to one heavy atom into its hydrogen count."""
    drop = set()
    extra = [0] * len(atoms)
    degree = [0] * len(atoms)
    for b in bonds:
        degree[b.begin] += 1
        degree[b.end] += 1
    for b in bonds:
        for h, parent in ((b.begin, b.end), (b.end, b.begin)):
            ha = atoms[h]
            if (
                ha.element == "H"
                and ha.isotope is None
                and ha.formal_charge == 0
                and ha.explicit_h == 0
                and degree[h] == 1
                and b.order == BondOrder.SINGLE
                and atoms[parent].element != "H"
            ):
                drop.add(h)
                extra[parent] += 1
    if not drop:
        return atoms, bonds, pos
    remap, new_atoms, new_pos = {}, [], []
    for i, a in enumerate(atoms):
        if i in drop:
            continue
        remap[i] = len(new_atoms)
        if extra[i]:
            a = replace(a, explicit_h=a.explicit_h + extra[i])
        new_atoms.append(a)
        new_pos.append(pos[i])
    new_bonds = [
        Bond(remap[b.begin], remap[b.end], b.order)
        for b in bonds
        if b.begin not in drop and b.end not in drop
    ]
    return new_atoms, new_bonds, new_pos


def _needs_pi(atom: Atom, bonds, adj_i) -> bool:
    current = atom.explicit_h
    for _, bi in adj_i:
        order = bonds[bi].order
        current += 1 if order == BondOrder.AROMATIC else int(order)
    allowed = allowed_valences(atom.element, atom.formal_charge)
    if allowed is None:
        return False
    return current not in allowed and any(v >= current + 1 for v in allowed)


def _kekulize(atoms, bonds, adj, pos) -> list[int]:
    kekule = [1 if b.order == BondOrder.AROMATIC else int(b.order) for b in bonds]
    needy = [i for i, a in enumerate(atoms) if a.aromatic and _needs_pi(a, bonds, adj[i])]
    if not needy:
        return kekule
    needy_set = set(needy)
    options: dict[int, list[tuple[int, int]]] = {
        i: [(j, bi) for j, bi in adj[i] if j in needy_set and bonds[bi].order == BondOrder.AROMATIC]
        for i in needy
    }
    mate: dict[int, int] = {}

    def pick():
        best, best_opts = None, None
        for a in needy:
            if a in mate:
                continue
            opts = [(b, bi) for b, bi in options[a] if b not in mate]
            if len(opts) <= 1:
                return a, opts
            if best is None or len(opts) < len(best_opts):
                best, best_opts = a, opts
        return best, best_opts

    def solve() -> bool:
        a, opts = pick()
        if a is None:
            return True
        for b, bi in opts:
            mate[a] = bi
            mate[b] = bi
            if solve():
                return True
            del mate[a], mate[b]
        return False

    if not solve():
        unmatched = next((i for i in needy if not options[i]), needy[0])
        raise KekulizationFailure("cannot kekulize aromatic system", pos[unmatched])
    for bi in set(mate.values()):
        kekule[bi] = 2
    return kekule


def _bridge_flags(n: int, bonds, adj) -> list[bool]:
    """Tarjan bridge detection (iterative)."""
    disc = [-1] * n
    low = [0] * n
    flags = [False] * len(bonds)
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(adj[root]))]
        while stack:
            v, via, it = stack[-1]
            advanced = False
            for w, bi in it:
                if bi == via:
                    continue
                if disc[w] == -1:
                    disc[w] = low[w] = t
                    t += 1
                    stack.append((w, bi, iter(adj[w])))
                    advanced = True
                    break
                low[v] = min(low[v], disc[w])
            if advanced:
                continue
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    flags[via] = True
    return flags


def _sssr(n, bonds, adj, ring_flags) -> tuple[tuple[int, ...], ...]:
    ring_adj: list[list[tuple[int, int]]] = [
        [(w, bi) for w, bi in adj[v] if ring_flags[bi]] for v in range(n)
    ]
    ring_atoms = [v for v in range(n) if ring_adj[v]]
    n_ring_bonds = sum(1 for f in ring_flags if f)
    if not n_ring_bonds:
        return ()
    # cyclomatic number of the ring subgraph
    seen, comps = set(), 0
    for v in ring_atoms:
        if v in seen:
            continue
        comps += 1
        stack = [v]
        seen.add(v)
        while stack:
            x = stack.pop()
            for w, _ in ring_adj[x]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
    target = n_ring_bonds - len(ring_atoms) + comps

    candidates: dict[frozenset, tuple[int, ...]] = {}
    for root in ring_atoms:
        parent = {root: (-1, -1)}
        dist = {root: 0}
        order = [root]
        head = 0
        while head < len(order):
            x = order[head]
            head += 1
            for w, bi in sorted(ring_adj[x]):
                if w not in dist:
                    dist[w] = dist[x] + 1
                    parent[w] = (x, bi)
                    order.append(w)

        def path(v):
            atoms_, edges_ = [v], []
            while parent[v][0] != -1:
                edges_.append(parent[v][1])
                v = parent[v][0]
                atoms_.append(v)
            return atoms_, edges_

        for x in order:
            for y, bi in ring_adj[x]:
                if parent[x][1] == bi or parent[y][1] == bi or x > y:
                    continue
                px, ex = path(x)
                py, ey = path(y)
                if set(px) & set(py) != {root}:
                    continue
                edges = frozenset(ex + ey + [bi])
                if edges in candidates:
                    continue
                cycle = tuple(reversed(px)) + tuple(py[:-1])
                candidates[edges] = cycle

    ordered = sorted(candidates.items(), key=lambda kv: (len(kv[0]), sorted(kv[1])))
    basis: dict[int, int] = {}
    rings = []
    for edges, cycle in ordered:
        vec = 0
        for bi in edges:
            vec |= 1 << bi
        while vec:
            top = vec.bit_length() - 1
            if top not in basis:
                basis[top] = vec
                break
            vec ^= basis[top]
        if vec:
            rings.append(cycle)
            if len(rings) == target:
                break
    return tuple(rings)
