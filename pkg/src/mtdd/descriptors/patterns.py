"""A small atom-environment pattern language for contribution tables.

A pattern is a ``;``-separated list of predicates, all of which must hold:

``el=<class>``
    element class of the atom itself (see below)
``chg=<n>|+|-|!0``
    formal charge: exact value, any positive, any negative, or non-zero
``h=<range>``
    total hydrogen count
``deg=<range>``
    heavy-atom degree
``x=<range>``
    total connections (degree plus hydrogens)
``single=<range>`` ``double=<range>`` ``triple=<range>`` ``arom=<range>``
    number of bonds of each type (``arom`` counts aromatic bonds)
``ring=0|1`` ``ring3=0|1``
    ring membership / membership in a three-membered ring
``ringsize=<n>``
    member of a smallest-set ring of exactly ``n`` atoms
``nb<bond><class>[{<pattern>}]<op><n>``
    number of neighbors reached through ``<bond>`` (``-`` ``=`` ``#`` ``:``,
    ``_`` for single-or-aromatic, ``~`` for any) that match ``<class>`` and, optionally, the nested
    ``<pattern>``; ``<op>`` is ``=``, ``>=`` or ``<=``

A range is ``n``, ``n-m`` or ``n+``. An element class is a single token or a
bracketed comma list of tokens. Tokens: ``C`` aliphatic carbon, ``c``
aromatic carbon, ``#C`` carbon of either kind, ``A`` any aliphatic heavy
atom, ``a`` any aromatic atom, ``*`` any heavy atom. A token prefixed with
``!`` excludes matches. A class matches when some positive token matches
(or there are none) and no excluded token matches.
"""

from __future__ import annotations

import re
from collections.abc import Callable
from pathlib import Path

from ..chem.mol import BondOrder, Molecule

Predicate = Callable[[Molecule, int], bool]

_BOND_CHARS = {
    "-": (BondOrder.SINGLE,),
    "=": (BondOrder.DOUBLE,),
    "#": (BondOrder.TRIPLE,),
    ":": (BondOrder.AROMATIC,),
    "_": (BondOrder.SINGLE, BondOrder.AROMATIC),
    "~": tuple(BondOrder),
}
_AROMATIC_SYMBOLS = {"b", "c", "n", "o", "p", "s", "se", "as", "te", "si"}


class PatternError(ValueError):
    pass


def _split_top(text: str, sep: str = ";") -> list[str]:
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch in "{[":
            depth += 1
        elif ch in "}]":
            depth -= 1
        if ch == sep and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if depth:
        raise PatternError(f"unbalanced brackets in {text!r}")
    parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _range(text: str) -> Callable[[int], bool]:
    if text.endswith("+"):
        lo = int(text[:-1])
        return lambda v: v >= lo
    if "-" in text:
        lo, hi = (int(x) for x in text.split("-"))
        return lambda v: lo <= v <= hi
    val = int(text)
    return lambda v: v == val


def _token(tok: str) -> Callable[[Molecule, int], bool]:
    if tok == "*":
        return lambda m, i: m.atoms[i].element != "H"
    if tok == "A":
        return lambda m, i: m.atoms[i].element != "H" and not m.atoms[i].aromatic
    if tok == "a":
        return lambda m, i: m.atoms[i].aromatic
    if tok.startswith("#"):
        el = tok[1:]
        return lambda m, i: m.atoms[i].element == el
    if tok in _AROMATIC_SYMBOLS:
        el = tok.capitalize()
        return lambda m, i: m.atoms[i].element == el and m.atoms[i].aromatic
    if tok[:1].isupper():
        return lambda m, i: m.atoms[i].element == tok and not m.atoms[i].aromatic
    raise PatternError(f"bad element token {tok!r}")


def element_class(text: str) -> Predicate:
    body = text[1:-1] if text.startswith("[") and text.endswith("]") else text
    pos, neg = [], []
    for tok in (t.strip() for t in body.split(",")):
        if not tok:
            continue
        (neg if tok.startswith("!") else pos).append(_token(tok.lstrip("!")))

    def match(m: Molecule, i: int) -> bool:
        if pos and not any(p(m, i) for p in pos):
            return False
        return not any(n(m, i) for n in neg)

    return match


def _charge(spec: str) -> Callable[[int], bool]:
    if spec == "+":
        return lambda c: c > 0
    if spec == "-":
        return lambda c: c < 0
    if spec == "!0":
        return lambda c: c != 0
    val = int(spec)
    return lambda c: c == val


_NB_RE = re.compile(r"^nb([-=#:_~])(\[[^\]]*\]|[^{<>=]+)(\{.*\})?(>=|<=|=)(\d+)$")


def _bond_count(kind: BondOrder) -> Callable[[Molecule, int], int]:
    def count(m: Molecule, i: int) -> int:
        return sum(1 for _, bi in m.adjacency[i] if m.bonds[bi].order == kind)

    return count


def _in_ring3(m: Molecule, i: int) -> bool:
    return any(len(r) == 3 and i in r for r in m.rings)


def compile_pattern(text: str) -> Predicate:
    preds: list[Predicate] = []
    for part in _split_top(text):
        if part.startswith("nb"):
            mt = _NB_RE.match(part)
            if not mt:
                raise PatternError(f"bad neighbor predicate {part!r}")
            orders = _BOND_CHARS[mt.group(1)]
            cls = element_class(mt.group(2))
            nested = compile_pattern(mt.group(3)[1:-1]) if mt.group(3) else None
            op, n = mt.group(4), int(mt.group(5))
            test = {"=": lambda v, n=n: v == n, ">=": lambda v, n=n: v >= n, "<=": lambda v, n=n: v <= n}[op]

            def nb_pred(m, i, orders=orders, cls=cls, nested=nested, test=test):
                count = 0
                for j, bi in m.adjacency[i]:
                    if m.bonds[bi].order in orders and cls(m, j) and (nested is None or nested(m, j)):
                        count += 1
                return test(count)

            preds.append(nb_pred)
            continue
        key, _, val = part.partition("=")
        if key == "el":
            preds.append(element_class(val))
        elif key == "chg":
            f = _charge(val)
            preds.append(lambda m, i, f=f: f(m.atoms[i].formal_charge))
        elif key == "h":
            f = _range(val)
            preds.append(lambda m, i, f=f: f(m.atoms[i].total_h))
        elif key == "deg":
            f = _range(val)
            preds.append(lambda m, i, f=f: f(m.degree(i)))
        elif key == "x":
            f = _range(val)
            preds.append(lambda m, i, f=f: f(m.degree(i) + m.atoms[i].total_h))
        elif key in ("single", "double", "triple", "arom"):
            kind = {
                "single": BondOrder.SINGLE,
                "double": BondOrder.DOUBLE,
                "triple": BondOrder.TRIPLE,
                "arom": BondOrder.AROMATIC,
            }[key]
            f, cnt = _range(val), _bond_count(kind)
            preds.append(lambda m, i, f=f, cnt=cnt: f(cnt(m, i)))
        elif key == "ring":
            want = val == "1"
            preds.append(lambda m, i, want=want: m.atoms[i].in_ring == want)
        elif key == "ring3":
            want = val == "1"
            preds.append(lambda m, i, want=want: _in_ring3(m, i) == want)
        elif key == "ringsize":
            size = int(val)
            preds.append(lambda m, i, size=size: any(len(r) == size and i in r for r in m.rings))
        else:
            raise PatternError(f"unknown predicate {part!r}")

    def match(m: Molecule, i: int) -> bool:
        return all(p(m, i) for p in preds)

    return match


class ContributionTable:
    """Ordered ``(label, pattern, value)`` rules; the first matching rule wins.

    File format: tab-separated ``label  pattern  value`` lines; ``#`` starts a
    comment line. Header comments beginning ``#@ key: value`` are kept as
    metadata.
    """

    def __init__(self, rules: list[tuple[str, str, float]], meta: dict[str, str] | None = None):
        self.rules = rules
        self.meta = meta or {}
        self._compiled = [(label, compile_pattern(pat), value) for label, pat, value in rules]

    @classmethod
    def load(cls, path: str | Path) -> ContributionTable:
        rules, meta = [], {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            if line.startswith("#@"):
                key, _, val = line[2:].partition(":")
                meta[key.strip()] = val.strip()
                continue
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise PatternError(f"{path}:{lineno}: expected 3 tab-separated fields")
            rules.append((fields[0].strip(), fields[1].strip(), float(fields[2])))
        return cls(rules, meta)

    def classify(self, mol: Molecule, idx: int) -> tuple[str, float] | None:
        for label, pred, value in self._compiled:
            if pred(mol, idx):
                return label, value
        return None

    def matches(self, mol: Molecule, idx: int):
        """Every matching ``(label, value)``, in table order."""
        for label, pred, value in self._compiled:
            if pred(mol, idx):
                yield label, value
