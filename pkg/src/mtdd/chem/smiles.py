"""SMILES reading and canonical writing.

Supported grammar: organic-subset and bracket atoms (isotope, element,
chirality, hydrogen count, charge, atom class), bonds ``- = # :`` plus the
directional ``/ \\``, branches, ring closures (digits and ``%nn``), the
fragment separator ``.`` and lowercase aromatic atoms. Chirality and bond
direction are accepted and ignored; their token count is kept on the
molecule as ``stereo_count``.
"""

from __future__ import annotations

from collections.abc import Iterator
from pathlib import Path

from .canon import canonical_ranks
from .elements import ORGANIC_SUBSET, allowed_valences, is_element
from .errors import SmilesSyntaxError, UnbalancedParenthesis, UnclosedRingBond, UnknownElement
from .mol import Atom, Bond, BondOrder, Molecule, build_molecule

_ORGANIC_AROMATIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
_BRACKET_AROMATIC = {
    "b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S",
    "se": "Se", "as": "As", "te": "Te", "si": "Si",
}
_BOND_TOKENS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a sanitized :class:`Molecule`."""
    if not text:
        raise SmilesSyntaxError("empty SMILES")
    if not text.isascii():
        raise SmilesSyntaxError("non-ASCII SMILES")

    atoms: list[Atom] = []
    positions: list[int] = []
    raw_bonds: list[tuple[int, int, BondOrder | None]] = []
    branches: list[tuple[int, int]] = []
    rings: dict[int, tuple[int, BondOrder | None, int]] = {}
    prev: int | None = None
    pending: BondOrder | None = None
    pending_pos = -1
    stereo = 0
    i, n = 0, len(text)

    def add_atom(atom: Atom, at: int) -> None:
        nonlocal prev, pending
        atoms.append(atom)
        positions.append(at)
        idx = len(atoms) - 1
        if prev is not None:
            raw_bonds.append((prev, idx, pending))
        elif pending is not None:
            raise SmilesSyntaxError("bond symbol without a preceding atom", pending_pos)
        prev = idx
        pending = None

    while i < n:
        ch = text[i]
        if ch == "(":
            if prev is None:
                raise SmilesSyntaxError("branch without a preceding atom", i)
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before branch", i)
            branches.append((prev, i))
            i += 1
        elif ch == ")":
            if not branches:
                raise UnbalancedParenthesis("unmatched ')'", i)
            if pending is not None:
                raise SmilesSyntaxError("dangling bond symbol", pending_pos)
            if prev == branches[-1][0]:
                raise SmilesSyntaxError("empty branch", i)
            prev = branches.pop()[0]
            i += 1
        elif ch in _BOND_TOKENS:
            if pending is not None:
                raise SmilesSyntaxError("consecutive bond symbols", i)
            if ch in "/\\":
                stereo += 1
            pending, pending_pos = _BOND_TOKENS[ch], i
            i += 1
        elif ch == ".":
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before '.'", pending_pos)
            if branches:
                raise SmilesSyntaxError("'.' inside a branch", i)
            prev = None
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev is None:
                raise SmilesSyntaxError("ring closure without a preceding atom", i)
            start = i
            if ch == "%":
                digits = text[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesSyntaxError("malformed %nn ring closure", i)
                num = int(digits)
                i += 3
            else:
                num = int(ch)
                i += 1
            if num in rings:
                other, order, _ = rings.pop(num)
                if other == prev:
                    raise SmilesSyntaxError("ring closure to the same atom", start)
                if order is not None and pending is not None and order != pending:
                    raise SmilesSyntaxError("conflicting ring-closure bond orders", start)
                raw_bonds.append((other, prev, pending if pending is not None else order))
            else:
                rings[num] = (prev, pending, start)
            pending = None
        elif ch == "[":
            end = text.find("]", i)
            if end == -1:
                raise SmilesSyntaxError("unterminated bracket atom", i)
            atom, chiral = _parse_bracket(text[i + 1 : end], i)
            stereo += chiral
            add_atom(atom, i)
            i = end + 1
        else:
            two = text[i : i + 2]
            if two in ("Cl", "Br"):
                add_atom(Atom(two), i)
                i += 2
            elif ch in ORGANIC_SUBSET:
                add_atom(Atom(ch), i)
                i += 1
            elif ch in _ORGANIC_AROMATIC:
                add_atom(Atom(_ORGANIC_AROMATIC[ch], aromatic=True), i)
                i += 1
            elif ch.isalpha() or ch == "*":
                raise UnknownElement(f"unsupported atom symbol {ch!r}", i)
            else:
                raise SmilesSyntaxError(f"unexpected character {ch!r}", i)

    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol", pending_pos)
    if branches:
        raise UnbalancedParenthesis("unclosed '('", branches[-1][1])
    if rings:
        num, (_, _, at) = min(rings.items(), key=lambda kv: kv[1][2])
        raise UnclosedRingBond(f"ring bond {num} never closed", at)
    if not atoms:
        raise SmilesSyntaxError("no atoms", 0)

    bonds = []
    for a, b, order in raw_bonds:
        if order is None:
            both = atoms[a].aromatic and atoms[b].aromatic
            order = BondOrder.AROMATIC if both else BondOrder.SINGLE
        bonds.append(Bond(a, b, order))
    return build_molecule(atoms, bonds, stereo_count=stereo, positions=positions)


def _parse_bracket(body: str, offset: int) -> tuple[Atom, int]:
    at = offset + 1
    j = 0
    k = len(body)
    while j < k and body[j].isdigit():
        j += 1
    isotope = int(body[:j]) if j else None
    if j >= k:
        raise SmilesSyntaxError("bracket atom without element", offset)

    aromatic = False
    element = None
    for width in (2, 1):
        sym = body[j : j + width]
        if len(sym) != width:
            continue
        if sym in _BRACKET_AROMATIC:
            element, aromatic = _BRACKET_AROMATIC[sym], True
            j += width
            break
        if sym[0].isupper() and is_element(sym):
            element = sym
            j += width
            break
    if element is None:
        raise UnknownElement(f"unknown element in [{body}]", at + j)

    chiral = 0
    if j < k and body[j] == "@":
        chiral = 1
        j += 1
        if j < k and body[j] == "@":
            j += 1
        while j < k and (body[j].isupper() and body[j] != "H" or body[j].isdigit()):
            j += 1

    hcount = 0
    if j < k and body[j] == "H":
        j += 1
        hcount = 1
        if j < k and body[j].isdigit():
            hcount = int(body[j])
            j += 1

    charge = 0
    if j < k and body[j] in "+-":
        sign = 1 if body[j] == "+" else -1
        j += 1
        if j < k and body[j].isdigit():
            charge = sign * int(body[j])
            j += 1
        else:
            charge = sign
            while j < k and body[j] == ("+" if sign > 0 else "-"):
                charge += sign
                j += 1

    if j < k and body[j] == ":":
        j += 1
        while j < k and body[j].isdigit():
            j += 1
    if j != k:
        raise SmilesSyntaxError(f"malformed bracket atom [{body}]", at + j)
    atom = Atom(
        element,
        formal_charge=charge,
        explicit_h=hcount,
        aromatic=aromatic,
        isotope=isotope,
        bracket=True,
    )
    return atom, chiral


# ---------------------------------------------------------------------------
# writing


def _needs_bracket(mol: Molecule, idx: int) -> bool:
    a = mol.atoms[idx]
    if a.formal_charge or a.isotope is not None or a.element not in ORGANIC_SUBSET:
        return True
    if a.aromatic and a.element.lower() not in _ORGANIC_AROMATIC:
        return True
    allowed = allowed_valences(a.element, 0)
    adj = mol.adjacency[idx]
    if a.aromatic:
        current = 0
        has_pi = False
        for _, bi in adj:
            order = mol.bonds[bi].order
            if order == BondOrder.AROMATIC:
                current += 1
                has_pi = has_pi or mol.kekule[bi] == 2
            else:
                current += int(order)
        bare_pi = current not in allowed and any(v >= current + 1 for v in allowed)
        if bare_pi != has_pi:
            return True
    bond_sum = sum(mol.kekule[bi] for _, bi in adj)
    fits = [v for v in allowed if v >= bond_sum]
    return not fits or fits[0] - bond_sum != a.total_h


def _atom_token(mol: Molecule, idx: int) -> str:
    a = mol.atoms[idx]
    sym = a.element.lower() if a.aromatic else a.element
    if not _needs_bracket(mol, idx):
        return sym
    out = ["["]
    if a.isotope is not None:
        out.append(str(a.isotope))
    out.append(sym)
    if a.total_h:
        out.append("H" if a.total_h == 1 else f"H{a.total_h}")
    if a.formal_charge:
        sign = "+" if a.formal_charge > 0 else "-"
        mag = abs(a.formal_charge)
        out.append(sign if mag == 1 else f"{sign}{mag}")
    out.append("]")
    return "".join(out)


def _bond_token(mol: Molecule, bi: int) -> str:
    b = mol.bonds[bi]
    if b.order == BondOrder.AROMATIC:
        return ""
    if b.order == BondOrder.SINGLE:
        both_aromatic = mol.atoms[b.begin].aromatic and mol.atoms[b.end].aromatic
        return "-" if both_aromatic else ""
    return b.order.symbol


def _ring_label(num: int) -> str:
    return str(num) if num < 10 else f"%{num:02d}"


def write_smiles(mol: Molecule, ranks: list[int] | None = None) -> str:
    """Canonical SMILES (aromatic form, no stereo).

    Deterministic for a given graph: atoms are visited in canonical-rank
    order, fragments are joined with ``.`` in rank order of their roots.
    """
    if not mol.atoms:
        return ""
    if ranks is None:
        ranks = canonical_ranks(mol)
    adj = mol.adjacency
    n = len(mol.atoms)

    # pass 1: spanning forest and ring-closure bonds
    visited = [False] * n
    children: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    closures: list[list[tuple[int, int]]] = [[] for _ in range(n)]  # (partner, bond)
    tree_bond = [False] * len(mol.bonds)
    roots = []
    order_index = [0] * n
    counter = 0
    for frag in sorted(mol.fragments, key=lambda f: min(ranks[i] for i in f)):
        root = min(frag, key=lambda i: ranks[i])
        roots.append(root)
        visited[root] = True
        order_index[root] = counter
        counter += 1
        stack = [(root, iter(sorted(adj[root], key=lambda x: ranks[x[0]])))]
        closed = set()
        while stack:
            v, it = stack[-1]
            for w, bi in it:
                if tree_bond[bi] or bi in closed:
                    continue
                if visited[w]:
                    closed.add(bi)
                    closures[w].append((v, bi))
                    closures[v].append((w, bi))
                    continue
                visited[w] = True
                order_index[w] = counter
                counter += 1
                tree_bond[bi] = True
                children[v].append((w, bi))
                stack.append((w, iter(sorted(adj[w], key=lambda x: ranks[x[0]]))))
                break
            else:
                stack.pop()

    # pass 2: emit
    out: list[str] = []
    free_digits: list[int] = []
    next_digit = [1]
    open_labels: dict[int, int] = {}

    def take_digit() -> int:
        if free_digits:
            free_digits.sort()
            return free_digits.pop(0)
        d = next_digit[0]
        next_digit[0] += 1
        return d

    def emit(root: int) -> None:
        stack: list = [("atom", root, -1)]
        while stack:
            kind, v, bi_in = stack.pop()
            if kind == "text":
                out.append(v)
                continue
            if bi_in >= 0:
                out.append(_bond_token(mol, bi_in))
            out.append(_atom_token(mol, v))
            ring_parts = sorted(closures[v], key=lambda x: ranks[x[0]])
            released = []
            for w, bi in ring_parts:
                if order_index[w] < order_index[v]:
                    d = open_labels.pop(bi)
                    out.append(_ring_label(d))
                    released.append(d)
            for w, bi in ring_parts:
                if order_index[w] > order_index[v]:
                    d = take_digit()
                    open_labels[bi] = d
                    out.append(_bond_token(mol, bi) + _ring_label(d))
            free_digits.extend(released)
            kids = children[v]
            if not kids:
                continue
            # last child continues the chain; others become branches
            stack.append(("atom", kids[-1][0], kids[-1][1]))
            for w, bi in reversed(kids[:-1]):
                stack.append(("text", ")", -1))
                stack.append(("atom", w, bi))
                stack.append(("text", "(", -1))

    for k, root in enumerate(roots):
        if k:
            out.append(".")
        emit(root)
    return "".join(out)


def canonical_smiles(text: str) -> str:
    return write_smiles(parse_smiles(text))


def read_smiles_file(path: str | Path) -> Iterator[tuple[str, str | None]]:
    """Yield ``(smiles, id)`` records from a ``<smiles>[TAB<id>]`` text file.

    Blank lines and ``#`` comments are skipped. Whitespace other than a tab
    also separates the identifier, for compatibility with space-delimited files.
    """
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t", 1) if "\t" in line else line.split(None, 1)
            yield parts[0], (parts[1].strip() if len(parts) > 1 else None)


def write_smiles_file(path: str | Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for smi, ident in records:
            fh.write(smi if ident is None else f"{smi}\t{ident}")
            fh.write("\n")
