"""Parser for the Turtle subset the importer understands.

Supported: ``@prefix`` directives, IRIs in angle brackets, prefixed names, the
``a`` keyword, ``;`` and ``,`` abbreviations, labelled (``_:x``) and bracketed
(``[ ... ]``) blank nodes, plain string literals (optionally language tagged)
and integers. Collections, datatyped literals, ``@base`` and relative IRI
resolution are not supported.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from rdflib.namespace import RDF

from .errors import TurtleSyntaxError


@dataclass(frozen=True)
class IRI:
    """Absolute IRI; ``text`` keeps the spelling used in the document."""

    value: str
    text: str = field(default="", compare=False)

    def local_name(self) -> str:
        """Return the part after the last '#' or '/'."""
        cut = max(self.value.rfind("#"), self.value.rfind("/"))
        return self.value[cut + 1 :] or self.value


@dataclass(frozen=True)
class BlankNode:
    """Blank node with a document-scoped label."""

    label: str


@dataclass(frozen=True)
class Literal:
    """Plain string or integer literal."""

    value: Union[str, int]
    language: Optional[str] = None


Term = Union[IRI, BlankNode, Literal]


@dataclass(frozen=True)
class Triple:
    """One statement plus the line/column of its object token."""

    subject: Term
    predicate: IRI
    object: Term
    line: int
    column: int


@dataclass(frozen=True)
class TurtleDocument:
    """Prefix table and triples of a parsed document, in document order."""

    prefixes: Dict[str, str]
    triples: Tuple[Triple, ...]


@dataclass(frozen=True)
class _Token:
    kind: str
    text: str
    line: int
    column: int


_NAME_TAIL = r"(?:[A-Za-z0-9_.-]*[A-Za-z0-9_-])?"

_TOKEN_PATTERNS = (
    ("NEWLINE", r"\n"),
    ("SPACE", r"[ \t\r]+"),
    ("COMMENT", r"#[^\n]*"),
    ("IRIREF", r"<[^<>\"{}|^`\\\s]*>"),
    ("PREFIX", r"@prefix\b"),
    ("DIRECTIVE", r"@[A-Za-z]+"),
    ("STRING", r"\"(?:[^\"\\\n]|\\.)*\"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?"
               r"|'(?:[^'\\\n]|\\.)*'(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*)?"),
    ("DATATYPE", r"\^\^"),
    ("BLANK", r"_:[A-Za-z0-9_]" + _NAME_TAIL),
    ("PNAME", r"(?:[A-Za-z]" + _NAME_TAIL + r")?:(?:[A-Za-z0-9_]" + _NAME_TAIL + r")?"),
    ("INTEGER", r"[+-]?[0-9]+"),
    ("KEYWORD", r"a(?![A-Za-z0-9_:-])"),
    ("PUNCT", r"[.;,\[\]]"),
)

_MASTER = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_PATTERNS))

_ESCAPES = {"t": "\t", "n": "\n", "r": "\r", "b": "\b", "f": "\f", '"': '"', "'": "'", "\\": "\\"}


def _tokenize(text: str) -> List[_Token]:
    tokens: List[_Token] = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _MASTER.match(text, pos)
        column = pos - line_start + 1
        if match is None:
            char = text[pos]
            if char in "\"'":
                raise TurtleSyntaxError("Unterminated string literal", line, column)
            raise TurtleSyntaxError(f"Unexpected character {char!r}", line, column)
        kind = match.lastgroup
        value = match.group()
        if kind == "NEWLINE":
            line += 1
            line_start = match.end()
        elif kind == "DIRECTIVE":
            raise TurtleSyntaxError(f"Unsupported directive {value}", line, column)
        elif kind == "DATATYPE":
            raise TurtleSyntaxError("Datatyped literals are not supported", line, column)
        elif kind not in ("SPACE", "COMMENT"):
            tokens.append(_Token(kind, value, line, column))
        pos = match.end()
    return tokens


def _unescape(body: str) -> str:
    return re.sub(r"\\(.)", lambda m: _ESCAPES.get(m.group(1), m.group(1)), body)


class _Parser:
    """Recursive-descent parser over the token list."""

    def __init__(self, tokens: List[_Token]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.prefixes: Dict[str, str] = {}
        self.triples: List[Triple] = []
        self._used_labels = {t.text[2:] for t in tokens if t.kind == "BLANK"}
        self._fresh = 0

    def parse(self) -> TurtleDocument:
        while self._peek() is not None:
            token = self._peek()
            if token.kind == "PREFIX":
                self._prefix_directive()
            else:
                self._triples_statement()
        return TurtleDocument(prefixes=dict(self.prefixes), triples=tuple(self.triples))

    def _peek(self) -> Optional[_Token]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def _next(self, expected: str) -> _Token:
        token = self._peek()
        if token is None:
            last = self.tokens[-1] if self.tokens else _Token("EOF", "", 1, 1)
            raise TurtleSyntaxError(f"Unexpected end of input, expected {expected}", last.line, last.column)
        self.pos += 1
        return token

    def _expect_punct(self, char: str) -> _Token:
        token = self._next(repr(char))
        if token.kind != "PUNCT" or token.text != char:
            raise TurtleSyntaxError(f"Expected {char!r}, found {token.text!r}", token.line, token.column)
        return token

    def _at_punct(self, char: str) -> bool:
        token = self._peek()
        return token is not None and token.kind == "PUNCT" and token.text == char

    def _prefix_directive(self) -> None:
        self._next("@prefix")
        name = self._next("prefix name")
        if name.kind != "PNAME" or not name.text.endswith(":") or name.text.count(":") != 1:
            raise TurtleSyntaxError(f"Invalid prefix name {name.text!r}", name.line, name.column)
        iri = self._next("IRI")
        if iri.kind != "IRIREF":
            raise TurtleSyntaxError(f"Expected an IRI, found {iri.text!r}", iri.line, iri.column)
        self.prefixes[name.text[:-1]] = iri.text[1:-1]
        self._expect_punct(".")

    def _triples_statement(self) -> None:
        if self._at_punct("["):
            subject = self._blank_node_property_list()
            if not self._at_punct("."):
                self._predicate_object_list(subject)
        else:
            subject = self._subject()
            self._predicate_object_list(subject)
        self._expect_punct(".")

    def _subject(self) -> Term:
        token = self._next("subject")
        if token.kind == "IRIREF":
            return IRI(token.text[1:-1], token.text)
        if token.kind == "PNAME":
            return self._expand(token)
        if token.kind == "BLANK":
            return BlankNode(token.text[2:])
        raise TurtleSyntaxError(f"Invalid subject {token.text!r}", token.line, token.column)

    def _predicate_object_list(self, subject: Term) -> None:
        self._verb_object_list(subject)
        while self._at_punct(";"):
            self._next("';'")
            token = self._peek()
            if token is None or (token.kind == "PUNCT" and token.text in ".]"):
                break
            if token.kind == "PUNCT" and token.text == ";":
                continue
            self._verb_object_list(subject)

    def _verb_object_list(self, subject: Term) -> None:
        token = self._next("predicate")
        if token.kind == "KEYWORD":
            predicate = IRI(str(RDF.type), "a")
        elif token.kind == "IRIREF":
            predicate = IRI(token.text[1:-1], token.text)
        elif token.kind == "PNAME":
            predicate = self._expand(token)
        else:
            raise TurtleSyntaxError(f"Invalid predicate {token.text!r}", token.line, token.column)
        self._object(subject, predicate)
        while self._at_punct(","):
            self._next("','")
            self._object(subject, predicate)

    def _object(self, subject: Term, predicate: IRI) -> None:
        token = self._peek()
        if token is None:
            self._next("object")
        if token.kind == "PUNCT" and token.text == "[":
            obj: Term = self._blank_node_property_list()
        else:
            self.pos += 1
            if token.kind == "IRIREF":
                obj = IRI(token.text[1:-1], token.text)
            elif token.kind == "PNAME":
                obj = self._expand(token)
            elif token.kind == "BLANK":
                obj = BlankNode(token.text[2:])
            elif token.kind == "STRING":
                obj = self._literal(token)
            elif token.kind == "INTEGER":
                obj = Literal(int(token.text))
            else:
                raise TurtleSyntaxError(f"Invalid object {token.text!r}", token.line, token.column)
        self.triples.append(Triple(subject, predicate, obj, token.line, token.column))

    def _blank_node_property_list(self) -> BlankNode:
        opening = self._expect_punct("[")
        node = BlankNode(self._fresh_label())
        if not self._at_punct("]"):
            self._predicate_object_list(node)
        token = self._peek()
        if token is None or token.kind != "PUNCT" or token.text != "]":
            raise TurtleSyntaxError("Unterminated '[' blank node", opening.line, opening.column)
        self.pos += 1
        return node

    def _fresh_label(self) -> str:
        while True:
            label = f"genid{self._fresh}"
            self._fresh += 1
            if label not in self._used_labels:
                return label

    def _literal(self, token: _Token) -> Literal:
        text = token.text
        quote = text[0]
        end = text.rindex(quote)
        language = text[end + 2 :] if len(text) > end + 1 else None
        return Literal(_unescape(text[1:end]), language)

    def _expand(self, token: _Token) -> IRI:
        prefix, _, local = token.text.partition(":")
        if prefix not in self.prefixes:
            raise TurtleSyntaxError(f"Undeclared prefix '{prefix}'", token.line, token.column)
        return IRI(self.prefixes[prefix] + local, token.text)


def parse_turtle(text: Union[str, bytes]) -> TurtleDocument:
    """Parse a Turtle-subset document into prefixes and triples.

    Raises:
        TurtleSyntaxError: On lexical errors, undeclared prefixes and
            unterminated brackets, with line and column.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return _Parser(_tokenize(text)).parse()
