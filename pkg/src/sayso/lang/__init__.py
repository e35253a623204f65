"""Constrained-language front end: grammar, parser, digest, compilers."""

from .grammar import Grammar, GrammarError
from .parser import ParseError, Tree, parse
from .alist import AList, Token, digest, tokenize

__all__ = [
    "Grammar",
    "GrammarError",
    "ParseError",
    "Tree",
    "parse",
    "AList",
    "Token",
    "digest",
    "tokenize",
]
