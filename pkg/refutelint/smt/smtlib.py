"""SMT-LIB2 text emission."""

from .terms import SmtFormula, Term

LOGIC = "QF_BV"


def format_literal(value: int, width: int) -> str:
    if width % 4 == 0:
        return f"#x{value:0{width // 4}x}"
    return f"#b{value:0{width}b}"


def format_term(term: Term) -> str:
    op = term.op
    if op == "bv":
        return format_literal(term.params[0], term.width)
    if op == "var":
        return f"${term.params[0]}"
    if op in ("true", "false"):
        return op
    args = " ".join(format_term(arg) for arg in term.args)
    if op == "extract":
        high, low = term.params
        return f"((_ extract {high} {low}) {args})"
    if op in ("zero_extend", "sign_extend"):
        return f"((_ {op} {term.params[0]}) {args})"
    return f"({op} {args})"


def emit_smtlib(formula: SmtFormula) -> str:
    """Render `formula` as a complete SMT-LIB2 script ending in `(check-sat)`."""
    lines = [f"(set-logic {LOGIC})"]
    for symbol_id in sorted(formula.declarations):
        width = formula.declarations[symbol_id]
        lines.append(f"(declare-fun ${symbol_id} () (_ BitVec {width}))")
    for assertion in formula.assertions:
        lines.append(f"(assert {format_term(assertion)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"
