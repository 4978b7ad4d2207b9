"""A fixed context-free SMILES grammar with encode/decode of production sequences.

A genome is the list of rule indices of the leftmost derivation of a SMILES
string. Any contiguous run of the genome that derives one nonterminal can be
swapped for another derivation of that nonterminal.
"""

from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .base import EncodingFailure

ORGANIC = ("B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I")
AROMATIC = ("b", "c", "n", "o", "p", "s")
BRACKET_SYMBOLS = ORGANIC + ("H", "Si", "Se") + AROMATIC + ("se",)
HCOUNTS = ("", "H", "H2", "H3")
CHARGES = ("", "+", "-", "+2", "-2")
BONDS = ("-", "=", "#")
DIGITS = tuple(str(d) for d in range(1, 10))


@dataclass(frozen=True)
class Rule:
    lhs: str
    rhs: tuple[str, ...]  # nonterminals are bare names, terminals start with "'"


def _t(tok: str) -> str:
    return "'" + tok


def _rules() -> tuple[Rule, ...]:
    r = [
        Rule("smiles", ("chain",)),
        Rule("chain", ("branched_atom",)),
        Rule("chain", ("branched_atom", "chain")),
        Rule("chain", ("branched_atom", "bond", "chain")),
        Rule("branched_atom", ("atom",)),
        Rule("branched_atom", ("atom", "ringbonds")),
        Rule("branched_atom", ("atom", "branches")),
        Rule("branched_atom", ("atom", "ringbonds", "branches")),
        Rule("ringbonds", ("ringbond",)),
        Rule("ringbonds", ("ringbond", "ringbonds")),
        Rule("ringbond", ("digit",)),
        Rule("ringbond", ("bond", "digit")),
        Rule("branches", ("branch",)),
        Rule("branches", ("branch", "branches")),
        Rule("branch", (_t("("), "chain", _t(")"))),
        Rule("branch", (_t("("), "bond", "chain", _t(")"))),
        Rule("atom", ("organic",)),
        Rule("atom", ("aromatic",)),
        Rule("atom", ("bracket_atom",)),
        Rule("bracket_atom", (_t("["), "bsymbol", "hcount", "charge", _t("]"))),
    ]
    r += [Rule("organic", (_t(s),)) for s in ORGANIC]
    r += [Rule("aromatic", (_t(s),)) for s in AROMATIC]
    r += [Rule("bsymbol", (_t(s),)) for s in BRACKET_SYMBOLS]
    r += [Rule("hcount", (_t(h),) if h else ()) for h in HCOUNTS]
    r += [Rule("charge", (_t(c),) if c else ()) for c in CHARGES]
    r += [Rule("bond", (_t(b),)) for b in BONDS]
    r += [Rule("digit", (_t(d),)) for d in DIGITS]
    return tuple(r)


RULES = _rules()
START = "smiles"
NONTERMINALS = tuple(dict.fromkeys(r.lhs for r in RULES))
BY_LHS: dict[str, tuple[int, ...]] = {
    nt: tuple(i for i, r in enumerate(RULES) if r.lhs == nt) for nt in NONTERMINALS
}
_RULE_INDEX = {(r.lhs, r.rhs): i for i, r in enumerate(RULES)}


def _min_depths() -> dict[str, int]:
    depth = {nt: 10**9 for nt in NONTERMINALS}
    changed = True
    while changed:
        changed = False
        for r in RULES:
            d = 1 + max((depth[s] for s in r.rhs if not s.startswith("'")), default=0)
            if d < depth[r.lhs]:
                depth[r.lhs] = d
                changed = True
    return depth


MIN_DEPTH = _min_depths()


def _rule(lhs: str, *rhs: str) -> int:
    return _RULE_INDEX[(lhs, tuple(rhs))]


# ---------------------------------------------------------------------------
# tokenizing and encoding

_BRACKET = re.compile(r"\[(se|[A-Z][a-z]?|[bcnops])(H\d?)?([+-]\d?)?\]")
_TOKEN = re.compile(r"\[[^\]]*\]|Cl|Br|[BCNOPSFI]|[bcnops]|[()=#\-]|\d|.")


def tokenize(smiles: str) -> list[str]:
    return _TOKEN.findall(smiles)


class _Encoder:
    def __init__(self, smiles: str):
        self.toks = tokenize(smiles)
        self.pos = 0
        self.out: list[int] = []
        self.smiles = smiles

    def peek(self, k: int = 0) -> str | None:
        i = self.pos + k
        return self.toks[i] if i < len(self.toks) else None

    def fail(self, why: str):
        raise EncodingFailure(f"cannot encode {self.smiles!r}: {why} at token {self.pos}")

    def take(self, tok: str):
        if self.peek() != tok:
            self.fail(f"expected {tok!r}")
        self.pos += 1

    def is_atom(self, tok) -> bool:
        return tok is not None and (tok in ORGANIC or tok in AROMATIC or tok.startswith("["))

    def smiles_(self):
        self.out.append(_rule("smiles", "chain"))
        self.chain()
        if self.peek() is not None:
            self.fail("trailing tokens")

    def chain(self):
        at = len(self.out)
        self.out.append(-1)
        self.branched_atom()
        nxt = self.peek()
        if nxt in BONDS and self.is_atom(self.peek(1)):
            self.out[at] = _rule("chain", "branched_atom", "bond", "chain")
            self.bond()
            self.chain()
        elif self.is_atom(nxt):
            self.out[at] = _rule("chain", "branched_atom", "chain")
            self.chain()
        else:
            self.out[at] = _rule("chain", "branched_atom")

    def starts_ringbond(self) -> bool:
        t = self.peek()
        return t in DIGITS or (t in BONDS and self.peek(1) in DIGITS)

    def branched_atom(self):
        at = len(self.out)
        self.out.append(-1)
        self.atom()
        rings = self.starts_ringbond()
        if rings:
            self.ringbonds()
        branches = self.peek() == "("
        if branches:
            self.branches()
        rhs = ("atom",) + (("ringbonds",) if rings else ()) + (("branches",) if branches else ())
        self.out[at] = _rule("branched_atom", *rhs)

    def ringbonds(self):
        at = len(self.out)
        self.out.append(-1)
        self.ringbond()
        if self.starts_ringbond():
            self.out[at] = _rule("ringbonds", "ringbond", "ringbonds")
            self.ringbonds()
        else:
            self.out[at] = _rule("ringbonds", "ringbond")

    def ringbond(self):
        if self.peek() in BONDS:
            self.out.append(_rule("ringbond", "bond", "digit"))
            self.bond()
        else:
            self.out.append(_rule("ringbond", "digit"))
        t = self.peek()
        if t not in DIGITS:
            self.fail("expected ring digit")
        self.out.append(_rule("digit", _t(t)))
        self.pos += 1

    def branches(self):
        at = len(self.out)
        self.out.append(-1)
        self.branch()
        if self.peek() == "(":
            self.out[at] = _rule("branches", "branch", "branches")
            self.branches()
        else:
            self.out[at] = _rule("branches", "branch")

    def branch(self):
        self.take("(")
        if self.peek() in BONDS:
            self.out.append(_rule("branch", _t("("), "bond", "chain", _t(")")))
            self.bond()
        else:
            self.out.append(_rule("branch", _t("("), "chain", _t(")")))
        self.chain()
        self.take(")")

    def bond(self):
        t = self.peek()
        if t not in BONDS:
            self.fail("expected bond")
        self.out.append(_rule("bond", _t(t)))
        self.pos += 1

    def atom(self):
        t = self.peek()
        if t in ORGANIC:
            self.out += [_rule("atom", "organic"), _rule("organic", _t(t))]
        elif t in AROMATIC:
            self.out += [_rule("atom", "aromatic"), _rule("aromatic", _t(t))]
        elif t is not None and t.startswith("["):
            m = _BRACKET.fullmatch(t)
            if m is None:
                self.fail(f"unsupported bracket atom {t}")
            sym, h, chg = m.group(1), m.group(2) or "", m.group(3) or ""
            if sym not in BRACKET_SYMBOLS or h not in HCOUNTS or chg not in CHARGES:
                self.fail(f"bracket atom {t} outside the grammar")
            self.out += [
                _rule("atom", "bracket_atom"),
                _rule("bracket_atom", _t("["), "bsymbol", "hcount", "charge", _t("]")),
                _rule("bsymbol", _t(sym)),
                _rule("hcount", *((_t(h),) if h else ())),
                _rule("charge", *((_t(chg),) if chg else ())),
            ]
        else:
            self.fail("expected atom")
        self.pos += 1


def encode(smiles: str) -> list[int]:
    """Leftmost-derivation rule indices for ``smiles``; raises :class:`EncodingFailure`."""
    enc = _Encoder(smiles)
    enc.smiles_()
    return enc.out


def decode(genome: Sequence[int]) -> str:
    """Terminal string derived by ``genome``; raises ``ValueError`` if it is not a full derivation."""
    out: list[str] = []
    stack = [START]
    i = 0
    while stack:
        sym = stack.pop()
        if sym.startswith("'"):
            out.append(sym[1:])
            continue
        if i >= len(genome):
            raise ValueError("genome ends before the derivation is complete")
        rule = RULES[genome[i]]
        if rule.lhs != sym:
            raise ValueError(f"rule {genome[i]} does not expand {sym}")
        i += 1
        stack.extend(reversed(rule.rhs))
    if i != len(genome):
        raise ValueError("genome has unused rules")
    return "".join(out)


def subtree_end(genome: Sequence[int], start: int) -> int:
    """Index one past the derivation rooted at ``genome[start]``."""
    pending = 1
    i = start
    while pending:
        pending -= 1
        pending += sum(1 for s in RULES[genome[i]].rhs if not s.startswith("'"))
        i += 1
    return i


def sample(nt: str, rng: np.random.Generator, max_depth: int = 8) -> list[int]:
    """Random derivation of ``nt``; rules are drawn uniformly until the depth
    bound forces the shallowest completion."""
    out: list[int] = []
    stack = [(nt, 0)]
    while stack:
        sym, depth = stack.pop()
        options = BY_LHS[sym]
        if depth >= max_depth:
            best = min(
                1 + max((MIN_DEPTH[s] for s in RULES[i].rhs if not s.startswith("'")), default=0)
                for i in options
            )
            options = tuple(
                i
                for i in options
                if 1 + max((MIN_DEPTH[s] for s in RULES[i].rhs if not s.startswith("'")), default=0) == best
            )
        choice = options[rng.integers(len(options))]
        out.append(choice)
        for s in reversed(RULES[choice].rhs):
            if not s.startswith("'"):
                stack.append((s, depth + 1))
    return out


def mutate_genome(genome: Sequence[int], rng: np.random.Generator, max_depth: int = 8) -> list[int]:
    """Replace the subtree at a random position with a fresh derivation of its nonterminal."""
    start = int(rng.integers(len(genome)))
    end = subtree_end(genome, start)
    nt = RULES[genome[start]].lhs
    return list(genome[:start]) + sample(nt, rng, max_depth) + list(genome[end:])
