"""Synthesis of geometric labelled rules and frame correspondents from modal axioms."""

from .formula import parse, to_nnf, to_ascii, to_unicode
from .classify import classify

__all__ = ["parse", "to_nnf", "to_ascii", "to_unicode", "classify"]
