"""A small expression language for modulation networks.

Grammar (whitespace-insensitive, keywords case-sensitive)::

    expr := term (('+' | '-') term)*
    term := atom ('*' atom)*
    atom := 'base' | 'swap' '(' expr ')' | 'cav' '(' ('s'|'i') ',' number ')'
          | 'phase' '(' number ')' | number | '(' expr ')'

``number`` is a decimal float literal or ``pi``; inside ``phase(...)`` and
``cav(...)`` it may carry a leading sign. Multiplication is pointwise,
so ``base * (phase(pi) + cav(i, 1))`` reads as the amplitude times a bracket.
"""
from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConfigError, DSLError
from .grid import FrequencyGrid, PhysicalParams, SpectralField, base_spectral
from .modulation import SchemePreset, cavity_transfer, phase_factor

MAX_DEPTH = 200


@dataclass(frozen=True)
class Base:
    pass


@dataclass(frozen=True)
class Swap:
    expr: "Expr"


@dataclass(frozen=True)
class Cav:
    target: str
    gamma_c: float


@dataclass(frozen=True)
class Phase:
    phi: float


@dataclass(frozen=True)
class Scalar:
    re: float
    im: float = 0.0


@dataclass(frozen=True)
class Sum:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Diff:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Prod:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Paren:
    expr: "Expr"


Expr = Union[Base, Swap, Cav, Phase, Scalar, Sum, Diff, Prod, Paren]


# ---------------------------------------------------------------------------
# tokenizer

_NUMBER = re.compile(rb"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_WORD = re.compile(rb"[A-Za-z_][A-Za-z0-9_]*")
_KEYWORDS = {"base", "swap", "cav", "phase", "pi", "s", "i"}
_PUNCT = {ord(c): c for c in "+-*(),"}
_SPACE = b" \t\r\n\f\v"


@dataclass(frozen=True)
class Token:
    kind: str  # 'number', a keyword, a punctuation char, or 'end'
    offset: int
    value: float = 0.0
    text: str = ""


def tokenize(source) -> list:
    """Split ``source`` (str or bytes) into tokens with byte offsets."""
    if isinstance(source, str):
        data = source.encode("utf-8")
    elif isinstance(source, (bytes, bytearray, memoryview)):
        data = bytes(source)
    else:
        raise DSLError(f"expression must be text, got {type(source).__name__}", 0)
    tokens = []
    pos = 0
    n = len(data)
    while pos < n:
        ch = data[pos]
        if ch in _SPACE:
            pos += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token(_PUNCT[ch], pos, text=_PUNCT[ch]))
            pos += 1
            continue
        m = _NUMBER.match(data, pos)
        if m:
            text = m.group().decode("ascii")
            value = float(text)
            if not math.isfinite(value):
                raise DSLError(f"number literal {text!r} overflows", pos)
            tokens.append(Token("number", pos, value, text))
            pos = m.end()
            continue
        m = _WORD.match(data, pos)
        if m:
            word = m.group().decode("ascii")
            if word not in _KEYWORDS:
                raise DSLError(f"unknown identifier {word!r}", pos,
                               expected=_KEYWORDS, found=word)
            if word == "pi":
                tokens.append(Token("number", pos, math.pi, "pi"))
            else:
                tokens.append(Token(word, pos, text=word))
            pos = m.end()
            continue
        shown = chr(ch) if 32 <= ch < 127 else f"\\x{ch:02x}"
        raise DSLError(f"unexpected character {shown!r}", pos)
    tokens.append(Token("end", n, text="<end>"))
    return tokens


# ---------------------------------------------------------------------------
# parser

_ATOM_START = ("base", "swap", "cav", "phase", "number", "(")


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def expect(self, *kinds) -> Token:
        tok = self.tok
        if tok.kind not in kinds:
            raise DSLError("syntax error", tok.offset, expected=kinds, found=tok.text)
        self.pos += 1
        return tok

    def expr(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DSLError(f"expression nested deeper than {MAX_DEPTH}", self.tok.offset)
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.expect("+", "-").kind
            right = self.term()
            node = Sum(node, right) if op == "+" else Diff(node, right)
        self.depth -= 1
        return node

    def term(self):
        node = self.atom()
        while self.tok.kind == "*":
            self.pos += 1
            node = Prod(node, self.atom())
        return node

    def signed_number(self) -> Token:
        sign = 1.0
        if self.tok.kind in ("+", "-"):
            sign = -1.0 if self.expect("+", "-").kind == "-" else 1.0
        num = self.expect("number")
        if sign < 0:
            return Token("number", num.offset, -num.value, "-" + num.text)
        return num

    def atom(self):
        tok = self.expect(*_ATOM_START)
        kind = tok.kind
        if kind == "base":
            return Base()
        if kind == "number":
            return Scalar(tok.value)
        if kind == "(":
            inner = self.expr()
            self.expect(")")
            return Paren(inner)
        self.expect("(")
        if kind == "swap":
            inner = self.expr()
            self.expect(")")
            return Swap(inner)
        if kind == "phase":
            phi = self.signed_number().value
            self.expect(")")
            return Phase(phi)
        # cav
        target = self.expect("s", "i").kind
        self.expect(",")
        num = self.signed_number()
        if not num.value > 0:
            raise DSLError(f"cavity linewidth must be positive, got {num.text}", num.offset)
        self.expect(")")
        return Cav(target, num.value)


def parse(source) -> Expr:
    """Parse a modulation expression; raises :class:`DSLError` on bad input."""
    parser = _Parser(tokenize(source))
    tree = parser.expr()
    parser.expect("end")
    return tree


# ---------------------------------------------------------------------------
# printing

def _num(value: float) -> str:
    return "pi" if value == math.pi else repr(float(value))


_PREC = {Sum: 1, Diff: 1, Prod: 2}


def to_text(node: Expr) -> str:
    """Render an AST back to source; ``parse(to_text(t)) == t`` for parsed trees."""
    if isinstance(node, Base):
        return "base"
    if isinstance(node, Swap):
        return f"swap({to_text(node.expr)})"
    if isinstance(node, Cav):
        return f"cav({node.target}, {_num(node.gamma_c)})"
    if isinstance(node, Phase):
        return f"phase({_num(node.phi)})"
    if isinstance(node, Scalar):
        if node.im == 0:
            return _num(node.re)
        # no imaginary literal in the grammar; spell it with a phase
        return f"({_num(node.re)} + {_num(node.im)} * phase({_num(math.pi / 2)}))"
    if isinstance(node, Paren):
        return f"({to_text(node.expr)})"
    prec = _PREC[type(node)]
    op = {Sum: " + ", Diff: " - ", Prod: " * "}[type(node)]
    left = to_text(node.left)
    right = to_text(node.right)
    if type(node.left) in _PREC and _PREC[type(node.left)] < prec:
        left = f"({left})"
    if type(node.right) in _PREC and _PREC[type(node.right)] <= prec:
        right = f"({right})"
    return left + op + right


def contains_base(node: Expr) -> bool:
    if isinstance(node, Base):
        return True
    if isinstance(node, (Swap, Paren)):
        return contains_base(node.expr)
    if isinstance(node, (Sum, Diff, Prod)):
        return contains_base(node.left) or contains_base(node.right)
    return False


# ---------------------------------------------------------------------------
# evaluation

def evaluate(expr, params: PhysicalParams, grid_s: FrequencyGrid, grid_i: FrequencyGrid) -> SpectralField:
    """Evaluate an expression (AST or source text) to a spectral field.

    Intermediate values stay scalars or single-axis arrays until they meet a
    full field, so constant brackets cost nothing extra.
    """
    if isinstance(expr, (str, bytes)):
        expr = parse(expr)
    if not contains_base(expr):
        warnings.warn("modulation expression has no 'base' term; result is a constant field",
                      stacklevel=2)
    x = grid_s.nodes[:, None]
    y = grid_i.nodes[None, :]
    cache = {}

    def base():
        if "base" not in cache:
            cache["base"] = base_spectral(params, grid_s, grid_i).amplitude
        return cache["base"]

    def ev(node):
        if isinstance(node, Base):
            return base()
        if isinstance(node, Paren):
            return ev(node.expr)
        if isinstance(node, Cav):
            return cavity_transfer(x if node.target == "s" else y, node.gamma_c)
        if isinstance(node, Phase):
            return phase_factor(node.phi)
        if isinstance(node, Scalar):
            return complex(node.re, node.im)
        if isinstance(node, Swap):
            if not grid_s.same_as(grid_i):
                raise ConfigError("symmetrization requires a shared detector axis (signal and idler grids differ)")
            inner = ev(node.expr)
            return inner.T if isinstance(inner, np.ndarray) else inner
        left = ev(node.left)
        right = ev(node.right)
        if isinstance(node, Sum):
            return left + right
        if isinstance(node, Diff):
            return left - right
        return left * right

    value = np.broadcast_to(np.asarray(ev(expr), dtype=complex), (grid_s.points, grid_i.points))
    return SpectralField(grid_s, grid_i, np.array(value))


def preset_expr(preset: SchemePreset) -> str:
    """Canonical expression text that evaluates to the same field as ``build_preset``."""
    p = preset.get
    name = preset.name
    if name == "FA":
        return f"base * (cav(s, {_num(p('gamma_c_s1'))}) + cav(i, {_num(p('gamma_c_i2'))}))"
    if name == "FB":
        return f"base * (cav(i, {_num(p('gamma_c_i1'))}) + cav(i, {_num(p('gamma_c_i2'))}))"
    if name == "FC":
        return f"base * (phase({_num(p('phi'))}) + cav({p('target')}, {_num(p('gamma_c'))}))"
    if name == "FD":
        return f"base * (phase(pi) + cav(i, {_num(p('gamma_c_i2'))}) * cav(s, {_num(p('gamma_c_s2'))}))"
    if name == "FE":
        g = _num(p("gamma_c"))
        return f"base * (1.0 - cav(i, {g}) - cav(s, {g}) + cav(i, {g}) * cav(s, {g}))"
    if name == "FS":
        return f"base + phase({_num(p('phi'))}) * swap(base)"
    parts = ["base"]
    for stage in range(1, p("stages") + 1):
        if stage % 2:
            parts.append(f"(phase(pi) + cav(i, {_num(p('gamma_c_i'))}))")
        else:
            parts.append(f"(phase(pi) + cav(s, {_num(p('gamma_c_s'))}))")
    return " * ".join(parts)
