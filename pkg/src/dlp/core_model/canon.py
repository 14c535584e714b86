"""Canonical hashable keys: structure is compared syntactically, arithmetic
modulo polynomial normal form."""
from dataclasses import fields, is_dataclass

from .expr import Expr


def canon(obj):
    if isinstance(obj, Expr):
        return ("E", obj.poly.key)
    if is_dataclass(obj):
        return (type(obj).__name__,) + tuple(canon(getattr(obj, f.name)) for f in fields(obj))
    if isinstance(obj, tuple):
        return tuple(canon(x) for x in obj)
    return obj


def same(a, b) -> bool:
    return canon(a) == canon(b)
