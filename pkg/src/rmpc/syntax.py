"""
Terms of the reversible Markovian process calculus.

A term is an immutable tree built from four node kinds:

    Nil                          the terminated process, written ``0``
    Prefix(action, rate, key, continuation)
                                 ``<a,2.5>.P`` or, once executed, ``<a,2.5>[3].P``
    Choice(left, right)          ``P + Q``
    Parallel(left, right, sync)  ``P |[a,b]| Q``

Executed prefixes carry a positive integer key. The tree shape never changes
under transitions, only keys are added and removed, so an AST path (a tuple
of child indices) names the same prefix in every state of a computation.
Child index 0 is the continuation of a prefix or the left operand, 1 the
right operand.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

__all__ = [
    "Nil", "Prefix", "Choice", "Parallel", "Term", "NIL",
    "RmpcSyntaxError", "IllFormedTermError", "Diagnostic",
    "parse_term", "parse_model", "format_term",
    "is_standard", "keys_of", "check_well_formed", "canonicalize_keys",
    "subterm", "prefix_paths", "rename_keys", "has_parallel",
]


@dataclass(frozen=True)
class Nil:
    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Prefix:
    action: str
    rate: float
    key: Optional[int]
    continuation: "Term"

    def __post_init__(self):
        if not self.rate > 0:
            raise ValueError(f"rate of <{self.action},{self.rate}> must be positive")
        if self.key is not None and self.key < 1:
            raise ValueError(f"key {self.key} must be a positive integer")

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Choice:
    left: "Term"
    right: "Term"

    def __str__(self) -> str:
        return format_term(self)


@dataclass(frozen=True)
class Parallel:
    left: "Term"
    right: "Term"
    sync: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if not isinstance(self.sync, frozenset):
            object.__setattr__(self, "sync", frozenset(self.sync))

    def __str__(self) -> str:
        return format_term(self)


Term = Union[Nil, Prefix, Choice, Parallel]
NIL = Nil()


class RmpcSyntaxError(ValueError):
    """Raised on malformed source text; carries a 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{line}:{column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class IllFormedTermError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Diagnostic:
    rule: str          # "duplicate key" | "both branches selected" | "future precedes past"
    path: tuple
    subterm: str
    detail: str = ""

    def __str__(self) -> str:
        where = "/".join(map(str, self.path)) or "root"
        extra = f" ({self.detail})" if self.detail else ""
        return f"{self.rule} at {where}: {self.subterm}{extra}"


# --------------------------------------------------------------------------
# Tokenizer and recursive-descent parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<number>-?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_']*)
  | (?P<sync_open>\|\[)
  | (?P<sync_close>\]\|)
  | (?P<punct>[<>,.\[\]()+=])
""", re.VERBOSE)

_KEYWORDS = {"def", "system"}


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise RmpcSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        chunk = m.group()
        if kind not in ("ws", "comment"):
            if kind == "punct" or kind in ("sync_open", "sync_close"):
                kind = chunk
            tokens.append(_Token(kind, chunk, line, pos - line_start + 1))
        newlines = chunk.count("\n")
        if newlines:
            line += newlines
            line_start = pos + chunk.rindex("\n") + 1
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, definitions: Optional[dict] = None):
        self.tokens = _tokenize(text)
        self.pos = 0
        # name -> (token list start index, resolved Term or None)
        self.definitions = dict(definitions or {})
        self._raw_defs = {}
        self._resolving = []

    # token helpers
    def peek(self, offset=0) -> _Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        raise RmpcSyntaxError(message, tok.line, tok.column)

    def expect(self, kind) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            shown = tok.text or "end of input"
            self.error(f"expected {kind!r}, found {shown!r}")
        return self.advance()

    # grammar: parallel > choice > prefix (loosest to tightest)
    def term(self) -> Term:
        left = self.choice()
        while self.peek().kind == "|[":
            self.advance()
            names = []
            if self.peek().kind != "]|":
                names.append(self.expect("name").text)
                while self.peek().kind == ",":
                    self.advance()
                    names.append(self.expect("name").text)
            self.expect("]|")
            right = self.choice()
            left = Parallel(left, right, frozenset(names))
        return left

    def choice(self) -> Term:
        left = self.unary()
        while self.peek().kind == "+":
            self.advance()
            left = Choice(left, self.unary())
        return left

    def unary(self) -> Term:
        tok = self.peek()
        if tok.kind == "number" and tok.text == "0":
            self.advance()
            return NIL
        if tok.kind == "<":
            return self.prefix()
        if tok.kind == "(":
            self.advance()
            inner = self.term()
            self.expect(")")
            return inner
        if tok.kind == "name" and tok.text not in _KEYWORDS:
            self.advance()
            return self.lookup(tok)
        shown = tok.text or "end of input"
        self.error(f"expected a term, found {shown!r}")

    def prefix(self) -> Term:
        self.expect("<")
        action = self.expect("name").text
        self.expect(",")
        rate_tok = self.expect("number")
        rate = float(rate_tok.text)
        if not rate > 0:
            self.error(f"nonpositive rate {rate_tok.text}", rate_tok)
        self.expect(">")
        key = None
        if self.peek().kind == "[":
            self.advance()
            key_tok = self.expect("number")
            if not re.fullmatch(r"\d+", key_tok.text) or int(key_tok.text) < 1:
                self.error(f"key must be a positive integer, found {key_tok.text!r}", key_tok)
            key = int(key_tok.text)
            self.expect("]")
        self.expect(".")
        return Prefix(action, rate, key, self.unary())

    def lookup(self, tok: _Token) -> Term:
        name = tok.text
        if name in self.definitions:
            return self.definitions[name]
        if name not in self._raw_defs:
            self.error(f"undefined name {name!r}", tok)
        if name in self._resolving:
            cycle = " -> ".join(self._resolving + [name])
            self.error(f"recursive definition {cycle}", tok)
        # parse the body of the definition at its own token position
        saved = self.pos
        self._resolving.append(name)
        self.pos = self._raw_defs[name]
        body = self.term()
        self._resolving.pop()
        self.pos = saved
        self.definitions[name] = body
        return body

    def model(self) -> tuple:
        """file := ("def" NAME "=" term)* "system" "=" term"""
        # first pass: record where each definition body starts
        entries = []
        while self.peek().kind == "name" and self.peek().text == "def":
            self.advance()
            name_tok = self.expect("name")
            if name_tok.text in _KEYWORDS:
                self.error(f"{name_tok.text!r} is reserved", name_tok)
            if name_tok.text in self._raw_defs:
                self.error(f"duplicate definition of {name_tok.text!r}", name_tok)
            self.expect("=")
            self._raw_defs[name_tok.text] = self.pos
            entries.append(name_tok.text)
            self._skip_term()
        tok = self.peek()
        if not (tok.kind == "name" and tok.text == "system"):
            self.error("expected 'def' or 'system'")
        self.advance()
        self.expect("=")
        system = self.term()
        self.expect("eof")
        for name in entries:
            if name not in self.definitions:
                saved = self.pos
                self.pos = self._raw_defs[name]
                self._resolving.append(name)
                self.definitions[name] = self.term()
                self._resolving.pop()
                self.pos = saved
        return system, dict(self.definitions)

    def _skip_term(self):
        # a definition body ends at the next top-level 'def' or 'system'
        depth = 0
        start = self.pos
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                self.error("unexpected end of input in definition")
            if tok.kind == "(":
                depth += 1
            elif tok.kind == ")":
                depth -= 1
            elif depth == 0 and tok.kind == "name" and tok.text in _KEYWORDS:
                if self.pos == start:
                    self.error("empty definition body")
                return
            self.advance()


def parse_term(text: str, definitions: Optional[dict] = None) -> Term:
    """Parse a single term. Names refer to ``definitions`` (name -> Term)."""
    p = _Parser(text, definitions)
    t = p.term()
    p.expect("eof")
    return t


def parse_model(text: str) -> tuple:
    """Parse a model file; returns ``(system_term, definitions)``.

    Definitions are non-recursive abbreviations expanded at parse time.
    """
    return _Parser(text).model()


# --------------------------------------------------------------------------
# Pretty printer
# --------------------------------------------------------------------------

def _format_rate(rate: float) -> str:
    if float(rate).is_integer() and abs(rate) < 1e15:
        return str(int(rate))
    return repr(float(rate))


_LEVEL = {Parallel: 0, Choice: 1, Prefix: 2, Nil: 2}


def format_term(t: Term) -> str:
    """Render ``t`` in the concrete grammar; ``parse_term`` inverts it."""
    return _fmt(t)


def _fmt(t: Term) -> str:
    if isinstance(t, Nil):
        return "0"
    if isinstance(t, Prefix):
        key = f"[{t.key}]" if t.key is not None else ""
        return f"<{t.action},{_format_rate(t.rate)}>{key}.{_wrap(t.continuation, 2)}"
    if isinstance(t, Choice):
        return f"{_wrap(t.left, 1)} + {_wrap(t.right, 2)}"
    if isinstance(t, Parallel):
        names = ",".join(sorted(t.sync))
        return f"{_wrap(t.left, 0)} |[{names}]| {_wrap(t.right, 1)}"
    raise TypeError(f"not a term: {t!r}")


def _wrap(t: Term, min_level: int) -> str:
    s = _fmt(t)
    return s if _LEVEL[type(t)] >= min_level else f"({s})"


# --------------------------------------------------------------------------
# Structural queries
# --------------------------------------------------------------------------

def is_standard(t: Term) -> bool:
    """True iff no prefix of ``t`` carries a key."""
    if isinstance(t, Nil):
        return True
    if isinstance(t, Prefix):
        return t.key is None and is_standard(t.continuation)
    return is_standard(t.left) and is_standard(t.right)


def keys_of(t: Term) -> frozenset:
    if isinstance(t, Nil):
        return frozenset()
    if isinstance(t, Prefix):
        inner = keys_of(t.continuation)
        return inner | {t.key} if t.key is not None else inner
    return keys_of(t.left) | keys_of(t.right)


def has_parallel(t: Term) -> bool:
    if isinstance(t, Nil):
        return False
    if isinstance(t, Prefix):
        return has_parallel(t.continuation)
    return isinstance(t, Parallel) or has_parallel(t.left) or has_parallel(t.right)


def subterm(t: Term, path) -> Term:
    for step in path:
        if isinstance(t, Prefix) and step == 0:
            t = t.continuation
        elif isinstance(t, (Choice, Parallel)):
            t = t.left if step == 0 else t.right
        else:
            raise IndexError(f"path {tuple(path)} leaves the term")
    return t


def prefix_paths(t: Term, path=()) -> Iterator[tuple]:
    """Yield ``(path, prefix)`` for every prefix in leftmost depth-first order."""
    if isinstance(t, Prefix):
        yield path, t
        yield from prefix_paths(t.continuation, path + (0,))
    elif isinstance(t, (Choice, Parallel)):
        yield from prefix_paths(t.left, path + (0,))
        yield from prefix_paths(t.right, path + (1,))


def _key_actions(t: Term) -> dict:
    """key -> set of actions labelling prefixes with that key."""
    out = {}
    for _, p in prefix_paths(t):
        if p.key is not None:
            out.setdefault(p.key, set()).add(p.action)
    return out


# --------------------------------------------------------------------------
# Well-formedness
# --------------------------------------------------------------------------

def check_well_formed(t: Term) -> list:
    """Return the list of well-formedness violations of ``t`` (empty if none)."""
    diags = []
    _check(t, (), diags)
    return diags


def _check(t: Term, path: tuple, diags: list) -> None:
    if isinstance(t, Nil):
        return
    if isinstance(t, Prefix):
        cont = t.continuation
        if t.key is None:
            if not is_standard(cont):
                diags.append(Diagnostic("future precedes past", path, format_term(t),
                                        f"unexecuted <{t.action},{_format_rate(t.rate)}> guards executed actions"))
        elif t.key in keys_of(cont):
            diags.append(Diagnostic("duplicate key", path, format_term(t), f"key {t.key} repeated in continuation"))
        _check(cont, path + (0,), diags)
        return
    _check(t.left, path + (0,), diags)
    _check(t.right, path + (1,), diags)
    if isinstance(t, Choice):
        if not is_standard(t.left) and not is_standard(t.right):
            diags.append(Diagnostic("both branches selected", path, format_term(t)))
        return
    left, right = _key_actions(t.left), _key_actions(t.right)
    for k in sorted(left.keys() & right.keys()):
        acts = left[k] | right[k]
        if len(acts) != 1 or not acts <= t.sync:
            diags.append(Diagnostic("duplicate key", path, format_term(t),
                                    f"key {k} shared across a parallel operator outside a synchronization"))


def _require_well_formed(t: Term) -> None:
    diags = check_well_formed(t)
    if diags:
        raise IllFormedTermError(diags)


# --------------------------------------------------------------------------
# Key renaming
# --------------------------------------------------------------------------

def rename_keys(t: Term, mapping) -> Term:
    """Apply ``mapping`` (key -> key) to every keyed prefix; unmapped keys stay."""
    if isinstance(t, Nil):
        return t
    if isinstance(t, Prefix):
        key = mapping.get(t.key, t.key) if t.key is not None else None
        return Prefix(t.action, t.rate, key, rename_keys(t.continuation, mapping))
    if isinstance(t, Choice):
        return Choice(rename_keys(t.left, mapping), rename_keys(t.right, mapping))
    return Parallel(rename_keys(t.left, mapping), rename_keys(t.right, mapping), t.sync)


def canonical_key_map(t: Term) -> dict:
    """Map each key to its rank of first occurrence in a leftmost traversal."""
    mapping = {}
    for _, p in prefix_paths(t):
        if p.key is not None and p.key not in mapping:
            mapping[p.key] = len(mapping) + 1
    return mapping


def canonicalize_keys(t: Term) -> Term:
    """Representative of the class of ``t`` under consistent key renaming.

    Keys become 1..m in order of first occurrence. Two well-formed terms get
    the same result iff they differ only by a bijective renaming of keys.
    """
    _require_well_formed(t)
    return rename_keys(t, canonical_key_map(t))
