"""Initial data from the ``datum`` block of an experiment config."""
from __future__ import annotations

import ast

import numpy as np

from . import reference as ref
from .config import ExperimentConfig, box_center
from .mesh import Field, project_function

_FUNCS = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "sinh", "cosh", "sign", "maximum", "minimum", "where")
}
_CONSTS = {"pi": np.pi, "e": np.e}
_ALLOWED = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod,
    ast.Compare, ast.Lt, ast.Gt, ast.LtE, ast.GtE,
)


def compile_expression(expr: str, dim: int):
    """Vectorised callable for an arithmetic expression in x (and y).

    Only numbers, + - * / ** %, comparisons, the names x, y, pi, e and a small
    set of numpy functions are accepted.
    """
    tree = ast.parse(expr, mode="eval")
    names = {"x", "y"} if dim == 2 else {"x"}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ValueError(f"disallowed syntax in expression: {type(node).__name__}")
        if isinstance(node, ast.Name) and node.id not in names | set(_FUNCS) | set(_CONSTS):
            raise ValueError(f"unknown name {node.id!r} in expression")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS):
            raise ValueError("only whitelisted functions may be called")
    code = compile(tree, "<datum.expr>", "eval")
    scope = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def func(*coords):
        env = dict(zip(("x", "y"), coords))
        return eval(code, scope, env)  # noqa: S307 - AST whitelisted above

    return func


def build_datum(cfg: ExperimentConfig, seed_values=None) -> Field:
    mesh, d = cfg.mesh, cfg.datum
    center = d.center if d.center is not None else box_center(mesh)
    width = d.width if d.width is not None else 4.0 * mesh.max_h

    if d.kind == "constant":
        return project_function(mesh, lambda *x: d.value)
    if d.kind == "cosine-perturbation":
        o, L = mesh.origins[0], mesh.extents[0]
        return project_function(
            mesh, lambda *x: d.value + d.amplitude * np.cos(d.mode * np.pi * (x[0] - o) / L)
        )
    if d.kind == "delta-like":
        return ref.delta_like(mesh, center, width, d.mass, d.shape)
    if d.kind == "odd-bump":
        return ref.odd_bump(mesh, center, width, d.mass, d.shape)
    if d.kind == "zkb":
        m = d.m if d.m is not None else cfg.nl.large_exponent
        p = ref.make_zkb(m, mesh.dim, d.mass, center)
        return ref.zkb_field(mesh, p, d.t)
    if d.kind == "glued":
        p_star = ref.make_zkb(cfg.nl.large_exponent, mesh.dim, d.mass, center)
        p_ell = ref.make_zkb(cfg.nl.small_exponent, mesh.dim, d.ell_mass, center)
        t0 = ref.zkb_time_for_peak(p_ell, d.ell_peak)
        return ref.glued_datum(mesh, p_star, p_ell, d.tau, t0)
    if d.kind == "custom-expression":
        return project_function(mesh, compile_expression(d.expr, mesh.dim))
    raise ValueError(f"unknown datum kind {d.kind!r}")
