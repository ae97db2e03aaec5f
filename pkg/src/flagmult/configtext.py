"""Tiny flat config-text format: ``dotted.key = value`` lines.

Values are numbers, booleans, quoted strings, comma-free bracket lists
``[1, 2.5, "x"]``, or brace blocks ``{ key = value, ... }``.  No embedded
code, no general expressions.  Used both for experiment configs and for
symbol blocks like::

    symbol.m2 = { builder = "smooth_ratio", params = { weights = [1.0, 0.5] } }
"""

from __future__ import annotations

from .errors import ConfigError

__all__ = ["parse_config_text", "format_value", "parse_value"]


def _tokenize(text):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "{}[],=":
            tokens.append(c)
            i += 1
        elif c == '"':
            j = text.find('"', i + 1)
            if j < 0:
                raise ConfigError("unterminated string")
            tokens.append(('str', text[i + 1:j]))
            i = j + 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "{}[],=":
                j += 1
            tokens.append(('atom', text[i:j]))
            i = j
    return tokens


def _atom_value(s):
    if len(s) >= 2 and s[0] == s[-1] and s[0] in ("'", '"'):
        return s[1:-1]
    low = s.lower()
    if low == "true":
        return True
    if low == "false":
        return False
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ConfigError("unexpected end of value")
        self.pos += 1
        return tok

    def parse_value(self):
        tok = self.next()
        if tok == '{':
            out = {}
            while True:
                nxt = self.peek()
                if nxt == '}':
                    self.next()
                    return out
                key = self.next()
                if not (isinstance(key, tuple) and key[0] == 'atom'):
                    raise ConfigError(f"expected key in brace block, got {key!r}")
                if self.next() != '=':
                    raise ConfigError("expected '=' in brace block")
                out[key[1]] = self.parse_value()
                if self.peek() == ',':
                    self.next()
        elif tok == '[':
            out = []
            while True:
                nxt = self.peek()
                if nxt == ']':
                    self.next()
                    return out
                out.append(self.parse_value())
                if self.peek() == ',':
                    self.next()
        elif isinstance(tok, tuple):
            kind, val = tok
            return val if kind == 'str' else _atom_value(val)
        else:
            raise ConfigError(f"unexpected token {tok!r}")


def parse_value(text):
    """Parse a single right-hand-side value."""
    parser = _Parser(_tokenize(text))
    value = parser.parse_value()
    if parser.peek() is not None:
        raise ConfigError(f"trailing tokens after value: {text!r}")
    return value


def parse_config_text(text):
    """Parse full config text into a flat ``{dotted.key: value}`` dict.

    A key's value may continue over multiple lines when brackets or braces
    remain open.  Lines starting with ``#`` are comments.
    """
    entries = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = lines[i].strip()
        i += 1
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, rhs = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        # Pull in continuation lines while brackets are unbalanced.
        depth = rhs.count("{") + rhs.count("[") - rhs.count("}") - rhs.count("]")
        while depth > 0 and i < len(lines):
            rhs += "\n" + lines[i]
            depth = rhs.count("{") + rhs.count("[") - rhs.count("}") - rhs.count("]")
            i += 1
        try:
            value = parse_value(rhs.strip())
        except ConfigError as exc:
            raise ConfigError(str(exc), line=lineno) from None
        if key in entries:
            raise ConfigError(f"duplicate key {key!r}", line=lineno)
        entries[key] = value
    return entries


def format_value(value):
    """Inverse of :func:`parse_value` for the supported value types."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(format_value(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{k} = {format_value(v)}" for k, v in value.items())
        return "{ " + inner + " }"
    raise ConfigError(f"unsupported config value type {type(value).__name__}")
