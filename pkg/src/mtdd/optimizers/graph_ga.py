"""Graph-based genetic algorithm: bond-cut crossover and local graph mutations."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..chem import Atom, Bond, BondOrder, ChemError, Molecule, build_molecule, write_smiles
from ..chem.elements import allowed_valences
from .base import GAConfig, GenerationState, Oracle, ScoringFn, evolve, initial_population

MAX_TRIES = 10
MUTATION_ELEMENTS = ("C", "N", "O", "F", "S", "Cl", "Br")
AROMATIC_SWAP = ("C", "N")
MUTATIONS = ("append_atom", "delete_terminal", "change_bond_order", "change_element")
EXTENDED_MUTATIONS = ("insert_atom", "close_ring", "open_ring")


def _raw(mol: Molecule) -> tuple[list[Atom], list[Bond]]:
    """Editable copies of the atom and bond lists (cached on the molecule)."""
    cached = mol.__dict__.get("_ga_raw")
    if cached is None:
        cached = mol.__dict__["_ga_raw"] = (
            tuple(replace(a, implicit_h=0, in_ring=False) for a in mol.atoms),
            tuple(mol.bonds),
        )
    return list(cached[0]), list(cached[1])


def _build(atoms, bonds, max_heavy: int) -> Molecule | None:
    heavy = sum(1 for a in atoms if a.element != "H")
    if heavy == 0 or heavy > max_heavy:
        return None
    try:
        mol = build_molecule(atoms, bonds)
    except ChemError:
        return None
    if len(mol.fragments) != 1:
        return None
    return mol


def _component(n: int, bonds, start: int) -> set[int]:
    adj = [[] for _ in range(n)]
    for b in bonds:
        adj[b.begin].append(b.end)
        adj[b.end].append(b.begin)
    seen, stack = {start}, [start]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _extract(atoms, bonds, keep: set[int]):
    order = sorted(keep)
    remap = {old: new for new, old in enumerate(order)}
    sub_atoms = [atoms[i] for i in order]
    sub_bonds = [Bond(remap[b.begin], remap[b.end], b.order) for b in bonds if b.begin in keep and b.end in keep]
    return sub_atoms, sub_bonds, remap


# ---------------------------------------------------------------------------
# crossover


def acyclic_cuts(mol: Molecule) -> list[int]:
    cached = mol.__dict__.get("_ga_cuts")
    if cached is None:
        ring = mol.ring_bond_flags
        cached = mol.__dict__["_ga_cuts"] = [
            i for i, b in enumerate(mol.bonds) if not ring[i] and b.order == BondOrder.SINGLE
        ]
    return cached


def _half(mol: Molecule, bi: int, flip: bool):
    """Side of ``mol`` cut at bond ``bi`` keeping the bond's begin (or end) atom."""
    atoms, bonds = _raw(mol)
    b = bonds[bi]
    keep_atom = b.end if flip else b.begin
    rest = bonds[:bi] + bonds[bi + 1 :]
    side = _component(len(atoms), rest, keep_atom)
    sub_atoms, sub_bonds, remap = _extract(atoms, rest, side)
    return sub_atoms, sub_bonds, remap[keep_atom]


def _join(frag_a, frag_b, links):
    atoms_a, bonds_a = frag_a
    atoms_b, bonds_b = frag_b
    off = len(atoms_a)
    bonds = list(bonds_a) + [Bond(b.begin + off, b.end + off, b.order) for b in bonds_b]
    bonds += [Bond(i, j + off, BondOrder.SINGLE) for i, j in links]
    return list(atoms_a) + list(atoms_b), bonds


def crossover_acyclic(p1: Molecule, p2: Molecule, rng: np.random.Generator, same: bool, max_heavy: int):
    cuts1, cuts2 = acyclic_cuts(p1), acyclic_cuts(p2)
    if not cuts1 or not cuts2:
        return None
    i = cuts1[rng.integers(len(cuts1))]
    flip = bool(rng.integers(2))
    if same:
        j, flip2 = i, flip
    else:
        j = cuts2[rng.integers(len(cuts2))]
        flip2 = bool(rng.integers(2))
    a_atoms, a_bonds, a_end = _half(p1, i, flip)
    b_atoms, b_bonds, b_end = _half(p2, j, not flip2)
    atoms, bonds = _join((a_atoms, a_bonds), (b_atoms, b_bonds), [(a_end, b_end)])
    return _build(atoms, bonds, max_heavy)


def _ring_cut_pairs(mol: Molecule) -> list[tuple[int, int, int, int]]:
    """Pairs of single, non-aromatic ring bonds whose removal splits ``mol`` in two.

    Returned as ``(bond_i, bond_j, x1, x2)`` where ``x1``/``x2`` are the atoms of
    bond ``i``/``j`` lying on the same side of the cut.
    """
    out = []
    n = len(mol.atoms)
    for ring in mol.rings:
        k = len(ring)
        edges = []
        for p in range(k):
            u, v = ring[p], ring[(p + 1) % k]
            bi = mol.bond_between(u, v)
            if bi is not None and mol.bonds[bi].order == BondOrder.SINGLE:
                edges.append((p, bi))
        for s in range(len(edges)):
            for t in range(s + 1, len(edges)):
                (p, bi), (q, bj) = edges[s], edges[t]
                if q == p + 1 or (p == 0 and q == k - 1):
                    continue
                rest = [b for x, b in enumerate(mol.bonds) if x not in (bi, bj)]
                x1, x2 = ring[(p + 1) % k], ring[q]
                side = _component(n, rest, x1)
                if x2 in side and ring[p] not in side and ring[(q + 1) % k] not in side:
                    out.append((bi, bj, x1, x2))
    return sorted(set(out))


def _ring_half(mol: Molecule, cut, flip: bool):
    bi, bj, x1, x2 = cut
    atoms, bonds = _raw(mol)
    b1, b2 = bonds[bi], bonds[bj]
    if flip:
        x1, x2 = b1.other(x1), b2.other(x2)
    rest = [b for x, b in enumerate(bonds) if x not in (bi, bj)]
    side = _component(len(atoms), rest, x1)
    sub_atoms, sub_bonds, remap = _extract(atoms, rest, side)
    return sub_atoms, sub_bonds, (remap[x1], remap[x2])


def crossover_ring(p1: Molecule, p2: Molecule, rng: np.random.Generator, same: bool, max_heavy: int):
    cuts1, cuts2 = _ring_cut_pairs(p1), _ring_cut_pairs(p2)
    if not cuts1 or not cuts2:
        return None
    c1 = cuts1[rng.integers(len(cuts1))]
    flip = bool(rng.integers(2))
    if same:
        c2, flip2 = c1, flip
    else:
        c2 = cuts2[rng.integers(len(cuts2))]
        flip2 = bool(rng.integers(2))
    a_atoms, a_bonds, (a1, a2) = _ring_half(p1, c1, flip)
    b_atoms, b_bonds, (b1, b2) = _ring_half(p2, c2, not flip2)
    atoms, bonds = _join((a_atoms, a_bonds), (b_atoms, b_bonds), [(a1, b1), (a2, b2)])
    return _build(atoms, bonds, max_heavy)


def crossover(
    p1: Molecule, p2: Molecule, rng: np.random.Generator, max_heavy: int = 60, same: bool | None = None
) -> Molecule | None:
    """Recombine two parents; ``None`` when no valid child appears in ``MAX_TRIES`` attempts.

    Identical parents are cut at the same bond, which reproduces the parent.
    """
    if same is None:
        same = p1 is p2 or write_smiles(p1) == write_smiles(p2)
    ring_mode = not acyclic_cuts(p1) or not acyclic_cuts(p2)
    for _ in range(MAX_TRIES):
        if ring_mode:
            child = crossover_ring(p1, p2, rng, same, max_heavy)
        else:
            child = crossover_acyclic(p1, p2, rng, same, max_heavy)
        if child is not None:
            return child
    return None


# ---------------------------------------------------------------------------
# mutation


def _free_h(mol: Molecule, i: int) -> int:
    a = mol.atoms[i]
    return 0 if a.bracket else a.implicit_h


def mutate(mol: Molecule, rng: np.random.Generator, max_heavy: int = 60, extended: bool = False) -> Molecule | None:
    ops = MUTATIONS + (EXTENDED_MUTATIONS if extended else ())
    for _ in range(MAX_TRIES):
        op = ops[rng.integers(len(ops))]
        child = _MUTATORS[op](mol, rng, max_heavy)
        if child is not None:
            return child
    return None


def _append_atom(mol, rng, max_heavy):
    sites = [i for i in range(len(mol.atoms)) if _free_h(mol, i) > 0]
    if not sites:
        return None
    i = sites[rng.integers(len(sites))]
    el = MUTATION_ELEMENTS[rng.integers(len(MUTATION_ELEMENTS))]
    order = BondOrder(int(rng.integers(1, min(3, _free_h(mol, i)) + 1)))
    atoms, bonds = _raw(mol)
    atoms.append(Atom(el))
    bonds.append(Bond(i, len(atoms) - 1, order))
    return _build(atoms, bonds, max_heavy)


def _delete_terminal(mol, rng, max_heavy):
    if len(mol.atoms) < 2:
        return None
    sites = [i for i in range(len(mol.atoms)) if mol.degree(i) == 1]
    if not sites:
        return None
    i = sites[rng.integers(len(sites))]
    atoms, bonds = _raw(mol)
    keep = set(range(len(atoms))) - {i}
    sub_atoms, sub_bonds, _ = _extract(atoms, bonds, keep)
    return _build(sub_atoms, sub_bonds, max_heavy)


def _change_bond_order(mol, rng, max_heavy):
    sites = [i for i, b in enumerate(mol.bonds) if b.order != BondOrder.AROMATIC]
    if not sites:
        return None
    bi = sites[rng.integers(len(sites))]
    current = mol.bonds[bi].order
    choices = [o for o in (BondOrder.SINGLE, BondOrder.DOUBLE, BondOrder.TRIPLE) if o != current]
    atoms, bonds = _raw(mol)
    b = bonds[bi]
    bonds[bi] = Bond(b.begin, b.end, choices[rng.integers(len(choices))])
    return _build(atoms, bonds, max_heavy)


def _change_element(mol, rng, max_heavy):
    sites = [i for i, a in enumerate(mol.atoms) if not a.bracket]
    if not sites:
        return None
    i = sites[rng.integers(len(sites))]
    a = mol.atoms[i]
    pool = AROMATIC_SWAP if a.aromatic else MUTATION_ELEMENTS
    choices = [e for e in pool if e != a.element]
    if not choices:
        return None
    atoms, bonds = _raw(mol)
    atoms[i] = replace(atoms[i], element=choices[rng.integers(len(choices))])
    return _build(atoms, bonds, max_heavy)


def _insert_atom(mol, rng, max_heavy):
    sites = [i for i, b in enumerate(mol.bonds) if b.order == BondOrder.SINGLE]
    if not sites:
        return None
    bi = sites[rng.integers(len(sites))]
    el = MUTATION_ELEMENTS[rng.integers(3)]
    atoms, bonds = _raw(mol)
    b = bonds[bi]
    atoms.append(Atom(el))
    new = len(atoms) - 1
    bonds[bi] = Bond(b.begin, new, BondOrder.SINGLE)
    bonds.append(Bond(new, b.end, BondOrder.SINGLE))
    return _build(atoms, bonds, max_heavy)


def _close_ring(mol, rng, max_heavy):
    n = len(mol.atoms)
    sites = [i for i in range(n) if _free_h(mol, i) > 0]
    pairs = [
        (i, j)
        for x, i in enumerate(sites)
        for j in sites[x + 1 :]
        if mol.bond_between(i, j) is None and _distance(mol, i, j) in (4, 5)
    ]
    if not pairs:
        return None
    i, j = pairs[rng.integers(len(pairs))]
    atoms, bonds = _raw(mol)
    bonds.append(Bond(i, j, BondOrder.SINGLE))
    return _build(atoms, bonds, max_heavy)


def _open_ring(mol, rng, max_heavy):
    sites = [
        i
        for i, b in enumerate(mol.bonds)
        if mol.ring_bond_flags[i] and b.order == BondOrder.SINGLE
    ]
    if not sites:
        return None
    bi = sites[rng.integers(len(sites))]
    atoms, bonds = _raw(mol)
    del bonds[bi]
    return _build(atoms, bonds, max_heavy)


def _distance(mol: Molecule, i: int, j: int) -> int:
    dist = {i: 0}
    frontier = [i]
    while frontier:
        nxt = []
        for u in frontier:
            for v in mol.neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    if v == j:
                        return dist[v]
                    nxt.append(v)
        frontier = nxt
    return -1


_MUTATORS = {
    "append_atom": _append_atom,
    "delete_terminal": _delete_terminal,
    "change_bond_order": _change_bond_order,
    "change_element": _change_element,
    "insert_atom": _insert_atom,
    "close_ring": _close_ring,
    "open_ring": _open_ring,
}


def _valence_ok(mol: Molecule) -> bool:
    for i, a in enumerate(mol.atoms):
        allowed = allowed_valences(a.element, a.formal_charge)
        if allowed is not None and mol.valence(i) not in allowed:
            return False
    return True


# ---------------------------------------------------------------------------
# optimizer


def _selection_weights(scores: list[float], scheme: str) -> np.ndarray | None:
    if scheme == "uniform":
        return None
    w = np.asarray(scores, dtype=np.float64)
    lo = w.min()
    if lo < 0:
        w = w - lo
    total = w.sum()
    if total <= 0:
        return None
    return w / total


def graph_ga_optimize(scoring: ScoringFn, pool, cfg: GAConfig = GAConfig()) -> GenerationState:
    """Evolve molecular graphs against ``scoring`` starting from ``pool``.

    Each child comes from fitness-proportional parent selection, crossover and,
    with probability ``mutation_rate``, one mutation. A failed mutation keeps
    the crossover child; a failed crossover yields no child.
    """
    rng = np.random.default_rng(cfg.seed)
    oracle = scoring if isinstance(scoring, Oracle) else Oracle(scoring, cfg.oracle_budget, cfg.threads)
    population = initial_population(oracle, pool, cfg)

    def make_children(pop, rng):
        p = _selection_weights([x[2] for x in pop], cfg.selection)
        children = []
        for _ in range(cfg.offspring_size):
            i, j = rng.choice(len(pop), size=2, p=p)
            child = crossover(pop[i][1], pop[j][1], rng, cfg.max_heavy_atoms, pop[i][0] == pop[j][0])
            if child is None:
                continue
            if rng.random() < cfg.mutation_rate:
                mutated = mutate(child, rng, cfg.max_heavy_atoms, cfg.extended_mutations)
                if mutated is not None:
                    child = mutated
            if _valence_ok(child):
                children.append((write_smiles(child), child))
        return children

    return evolve(oracle, population, cfg, rng, make_children)
