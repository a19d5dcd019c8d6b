"""Expression front end: parsing, forward-mode derivatives, function catalog.

Grammar (whitespace-insensitive, explicit '*' required):

    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | power
    power    := atom ['^' factor]        # rhs must fold to an integer
    atom     := NUMBER | 'z' | 'i' | 'pi' | 'e' | NAME '(' expr ')' | '(' expr ')'

'^' binds tighter than unary minus and is right-associative; its exponent is
restricted to constant integer values so every expression stays single
valued (write exp(w*log(v)) for general powers).  log and sqrt use principal
branches: roots of branch-dependent expressions are only meaningful where
the expression is analytic on the queried square.

Evaluation is dual-number forward AD seeded with dz = 1, elementwise over
numpy arrays.  Poles surface as non-finite values in the result; the public
evaluators raise EvaluationError when the final value or derivative is not
finite.
"""

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError, ExprSyntaxError, UnknownIdentifier

FUNCTIONS = ("sin", "cos", "tan", "sinh", "cosh", "tanh", "exp", "log", "sqrt")
CONSTANTS = {"i": 1j, "pi": np.pi, "e": np.e}
MAX_SOURCE_BYTES = 64 * 1024


# --- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Lit:
    value: complex
    text: str


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    a: object


@dataclass(frozen=True)
class Bin:
    op: str
    a: object
    b: object


@dataclass(frozen=True)
class Pow:
    base: object
    expo: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


# --- tokenizer / parser ----------------------------------------------------

_OPS = set("+-*/^()")


def _tokenize(text):
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in _OPS:
            toks.append((ch, ch, pos))
            pos += 1
            continue
        if ch.isdigit() or ch == ".":
            start = pos
            while pos < n and (text[pos].isdigit() or text[pos] == "."):
                pos += 1
            if pos < n and text[pos] in "eE":
                look = pos + 1
                if look < n and text[look] in "+-":
                    look += 1
                if look < n and text[look].isdigit():
                    pos = look
                    while pos < n and text[pos].isdigit():
                        pos += 1
            lit = text[start:pos]
            try:
                value = complex(float(lit))
            except ValueError:
                raise ExprSyntaxError(start, ("number",), f"malformed number {lit!r} at offset {start}")
            toks.append(("num", (value, lit), start))
            continue
        if ch.isalpha() or ch == "_":
            start = pos
            while pos < n and (text[pos].isalnum() or text[pos] == "_"):
                pos += 1
            toks.append(("name", text[start:pos], start))
            continue
        raise ExprSyntaxError(pos, ("operator", "number", "name"), f"unexpected character {ch!r} at offset {pos}")
    toks.append(("end", None, n))
    return toks


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ExprSyntaxError(tok[2], (kind,))
        return tok

    def expr(self):
        node = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.next()[0]
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[0] == "-":
            self.next()
            return Neg(self.factor())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "^":
            self.next()
            off = self.peek()[2]
            rhs = self.factor()
            expo = _fold_int(rhs, off)
            return Pow(base, expo)
        return base

    def atom(self):
        kind, val, off = self.next()
        if kind == "num":
            return Lit(val[0], val[1])
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if val == "z":
                return Var()
            if val in CONSTANTS:
                return Const(val)
            if val in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            raise UnknownIdentifier(val, off)
        raise ExprSyntaxError(off, ("number", "name", "(", "-"))


def _fold_int(node, offset):
    """Constant-fold an exponent; only integer values are legal."""
    try:
        v = _fold_const(node)
    except ValueError:
        raise ExprSyntaxError(offset, ("integer exponent",),
                              f"exponent at offset {offset} must be a constant integer")
    if v.imag != 0.0 or v.real != round(v.real):
        raise ExprSyntaxError(offset, ("integer exponent",),
                              f"exponent at offset {offset} must be a constant integer")
    return int(round(v.real))


def _fold_const(node):
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Const):
        return complex(CONSTANTS[node.name])
    if isinstance(node, Neg):
        return -_fold_const(node.a)
    if isinstance(node, Bin):
        a, b = _fold_const(node.a), _fold_const(node.b)
        return {"+": a + b, "-": a - b, "*": a * b, "/": a / b}[node.op]
    if isinstance(node, Pow):
        return _fold_const(node.base) ** node.expo
    raise ValueError("not constant")


def parse_expression(text):
    """Parse source text into an expression tree.

    Raises ExprSyntaxError (with byte offset and expected-token set) or
    UnknownIdentifier.
    """
    if len(text.encode()) > MAX_SOURCE_BYTES:
        raise ExprSyntaxError(MAX_SOURCE_BYTES, ("end",), "expression exceeds 64 KiB")
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    tok = parser.peek()
    if tok[0] != "end":
        raise ExprSyntaxError(tok[2], ("operator", "end"))
    return node


# --- pretty printer ---------------------------------------------------------

_PREC = {"+": 10, "-": 10, "*": 20, "/": 20}


def _print(node, minprec):
    if isinstance(node, Lit):
        return node.text
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Var):
        return "z"
    if isinstance(node, Neg):
        s = "-" + _print(node.a, 30)
        return f"({s})" if minprec > 30 else s
    if isinstance(node, Bin):
        prec = _PREC[node.op]
        s = _print(node.a, prec) + node.op + _print(node.b, prec + 1)
        return f"({s})" if minprec > prec else s
    if isinstance(node, Pow):
        s = _print(node.base, 41) + "^" + str(node.expo)
        return f"({s})" if minprec > 40 else s
    if isinstance(node, Call):
        return f"{node.name}({_print(node.arg, 0)})"
    raise TypeError(f"not an expression node: {node!r}")


def pretty(node):
    """Canonical text form; a fixed point of parse -> pretty on catalog formulas."""
    return _print(node, 0)


# --- dual-number evaluation --------------------------------------------------

@dataclass(frozen=True)
class Dual:
    """Value and derivative of an expression at one point."""

    value: complex
    deriv: complex


def _ev(node, z):
    """(value, derivative) arrays; chain rule at every node."""
    if isinstance(node, Lit):
        return node.value, 0.0
    if isinstance(node, Const):
        return complex(CONSTANTS[node.name]), 0.0
    if isinstance(node, Var):
        return z, 1.0
    if isinstance(node, Neg):
        v, dv = _ev(node.a, z)
        return -v, -dv
    if isinstance(node, Bin):
        va, da = _ev(node.a, z)
        vb, db = _ev(node.b, z)
        if node.op == "+":
            return va + vb, da + db
        if node.op == "-":
            return va - vb, da - db
        if node.op == "*":
            return va * vb, da * vb + va * db
        return va / vb, (da * vb - va * db) / (vb * vb)
    if isinstance(node, Pow):
        v, dv = _ev(node.base, z)
        k = node.expo
        if k == 0:
            return np.ones_like(v) if isinstance(v, np.ndarray) else 1.0 + 0j, 0.0
        return v ** k, k * v ** (k - 1) * dv
    if isinstance(node, Call):
        v, dv = _ev(node.arg, z)
        if node.name == "sin":
            return np.sin(v), np.cos(v) * dv
        if node.name == "cos":
            return np.cos(v), -np.sin(v) * dv
        if node.name == "tan":
            return np.tan(v), dv / np.cos(v) ** 2
        if node.name == "sinh":
            return np.sinh(v), np.cosh(v) * dv
        if node.name == "cosh":
            return np.cosh(v), np.sinh(v) * dv
        if node.name == "tanh":
            return np.tanh(v), dv / np.cosh(v) ** 2
        if node.name == "exp":
            ev = np.exp(v)
            return ev, ev * dv
        if node.name == "log":
            return np.log(v), dv / v
        sq = np.sqrt(v)
        return sq, dv / (2.0 * sq)
    raise TypeError(f"not an expression node: {node!r}")


def _val(node, z):
    """Value-only evaluation (hot path for boundary sampling)."""
    if isinstance(node, Lit):
        return node.value
    if isinstance(node, Const):
        return complex(CONSTANTS[node.name])
    if isinstance(node, Var):
        return z
    if isinstance(node, Neg):
        return -_val(node.a, z)
    if isinstance(node, Bin):
        va = _val(node.a, z)
        vb = _val(node.b, z)
        if node.op == "+":
            return va + vb
        if node.op == "-":
            return va - vb
        if node.op == "*":
            return va * vb
        return va / vb
    if isinstance(node, Pow):
        return _val(node.base, z) ** node.expo
    if isinstance(node, Call):
        return getattr(np, node.name)(_val(node.arg, z))
    raise TypeError(f"not an expression node: {node!r}")


def eval_dual(expr, z):
    """(f(z), f'(z)) as a Dual at a single point.

    Raises EvaluationError when the result is not finite (a pole of the
    expression or of its derivative).
    """
    v, dv = _ev(expr, complex(z))
    v = complex(v)
    dv = complex(dv)
    if not (np.isfinite(v.real) and np.isfinite(v.imag) and np.isfinite(dv.real) and np.isfinite(dv.imag)):
        raise EvaluationError(complex(z))
    return Dual(v, dv)


def eval_many(expr, z):
    """(values, derivatives) over an array of points; no finiteness check."""
    zz = np.asarray(z, dtype=np.complex128)
    v, dv = _ev(expr, zz)
    return np.broadcast_to(v, zz.shape).astype(np.complex128), np.broadcast_to(dv, zz.shape).astype(np.complex128)


def eval_values(expr, z):
    """Values only over an array of points; no finiteness check."""
    zz = np.asarray(z, dtype=np.complex128)
    return np.broadcast_to(_val(expr, zz), zz.shape).astype(np.complex128)


# --- catalog -----------------------------------------------------------------

CATALOG = {
    "f_cosh": "cosh(3*pi*z/2)/(z-2)",
    "f_poly": "(z-0.5)*(z-0.9)*(z+0.8)*(z-0.7*i)*(z+0.1*i)",
    "f_mult": "(z-0.5)^5*(z-0.9)^3*(z+0.8)*(z-0.7*i)*(z+0.1*i)^2",
    "f_clust": "sin(100/(exp(i*pi/4)*z-2))",
    "f_entire": "sin(3*pi*z)/(z-2)",
}


def analytic_fn(source, name=None):
    """Build an AnalyticFn from expression text or a catalog name."""
    from .rootfind import AnalyticFn

    if source in CATALOG:
        name = name or source
        source = CATALOG[source]
    expr = parse_expression(source)
    return AnalyticFn(
        eval_pair=lambda z, e=expr: eval_many(e, z),
        eval_value=lambda z, e=expr: eval_values(e, z),
        name=name or source,
    )
