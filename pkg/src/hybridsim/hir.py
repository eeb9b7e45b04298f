"""Textual hybrid intermediate representation.

A program is a list of procedures, each a prologue of variable declarations
followed by labelled basic blocks.  Blocks mix quantum instructions,
classical register arithmetic and IO, and end in exactly one terminator
(`br`, `condbr`, or `ret`).  The grammar is line-oriented:

    # comment
    proc main qubits 2
      var fixed mu = 0.7951
      var int18 i = 0
      var bit d = 0
    entry:
      h q0
      rz(0.5) q0
      mz q0 -> d record(t, phi_inv)
      condbr d, took_one, took_zero
    ...
    endproc

Variable kinds are `bit`, `int18` and `fixed` (Q2.16).  Angles are written
in units of pi and may be a `fixed` variable or a decimal literal.  Qubit
operands are `q0`, `q1`, ... with static indices.  The first procedure is
the entry point.  `parse` and `emit` are exact inverses on valid programs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import IRSyntaxError, SemanticError

KINDS = ("bit", "int18", "fixed")

GATE_ARITY = {
    "h": 1, "x": 1, "sx": 1,
    "rz": 1, "crz": 2, "eswap": 2, "cnot": 2,
}
ANGLE_GATES = ("rz", "crz", "eswap")
CLASSICAL_OPS = {
    # op -> number of source operands
    "add": 2, "sub": 2, "mul": 2,
    "recip": 1, "div": 2, "neg": 1,
    "cmp_eq": 2, "cmp_lt": 2,
    "select": 3,
}

_KEYWORDS = frozenset(
    ("proc", "qubits", "param", "var", "endproc", "mz", "reset",
     "active_reset", "output", "br", "condbr", "ret", "record")
    + tuple(KINDS) + tuple(GATE_ARITY) + tuple(CLASSICAL_OPS)
)

_IDENT_RE = re.compile(r"[A-Za-z_]\w*$")
_QUBIT_RE = re.compile(r"q(\d+)$")
_INT_RE = re.compile(r"[+-]?\d+$")
_FLOAT_RE = re.compile(r"[+-]?(?:\d+\.\d*|\.\d+|\d+(?:\.\d*)?[eE][+-]?\d+)$")


# ---------------------------------------------------------------------------
# Object model.  `line` fields are source positions and never take part in
# structural equality, so parse(emit(p)) == p holds.

@dataclass(frozen=True, slots=True)
class Gate:
    name: str
    qubits: tuple[int, ...]
    angle: str | float | None = None     # variable name or literal, units of pi
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Measure:
    qubit: int
    dest: str
    record: tuple[str, str] | None = None  # (t-var, phi_inv-var) evidence tag
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Reset:
    qubit: int
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class ActiveReset:
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Classical:
    op: str
    dest: str
    srcs: tuple[str | float | int, ...]
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Output:
    name: str
    line: int | None = field(default=None, compare=False)


Instruction = Gate | Measure | Reset | ActiveReset | Classical | Output


@dataclass(frozen=True, slots=True)
class Br:
    target: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class CondBr:
    cond: str
    then_target: str
    else_target: str
    line: int | None = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class Ret:
    values: tuple[str, ...] = ()
    line: int | None = field(default=None, compare=False)


Terminator = Br | CondBr | Ret


@dataclass(frozen=True, slots=True)
class VarDecl:
    name: str
    kind: str
    init: float | int


@dataclass(frozen=True, slots=True)
class BasicBlock:
    label: str
    instructions: tuple[Instruction, ...]
    terminator: Terminator


@dataclass(frozen=True, slots=True)
class Procedure:
    name: str
    qubits: int
    params: tuple[tuple[str, str], ...]      # (name, kind)
    decls: tuple[VarDecl, ...]
    blocks: tuple[BasicBlock, ...]


@dataclass(frozen=True, slots=True)
class HybridProgram:
    procedures: tuple[Procedure, ...]
    entry: str

    def entry_procedure(self) -> Procedure:
        for p in self.procedures:
            if p.name == self.entry:
                return p
        raise SemanticError(f"entry procedure {self.entry!r} not found")


def make_program(*procedures: Procedure) -> HybridProgram:
    """Build a program whose entry is the first procedure, and check it."""
    prog = HybridProgram(tuple(procedures), procedures[0].name)
    check_semantics(prog)
    return prog


# ---------------------------------------------------------------------------
# Semantic checking over the object model (used by parse and by the
# interpreter's load step, so builder-made programs get the same scrutiny).

def _operand_kind(tok: str | float | int) -> str:
    if isinstance(tok, str):
        return "var"
    return "fixed" if isinstance(tok, float) else "int"


def _check_operand(kinds: dict[str, str], tok, want: str, line, what: str):
    if isinstance(tok, str):
        got = kinds.get(tok)
        if got is None:
            raise SemanticError(f"undeclared variable {tok!r} in {what}", line)
        if got != want:
            raise SemanticError(
                f"{what} expects {want}, got {got} variable {tok!r}", line)
    elif want == "fixed":
        if isinstance(tok, bool):
            raise SemanticError(f"bad literal in {what}", line)
        # int literals are accepted where a real is expected
    elif want == "int18":
        if not isinstance(tok, int):
            raise SemanticError(
                f"{what} expects an integer literal, got {tok!r}", line)
    elif want == "bit":
        if tok not in (0, 1):
            raise SemanticError(f"{what} expects a bit (0 or 1), got {tok!r}", line)


def _infer_cmp_kind(kinds: dict[str, str], srcs, line) -> str:
    for s in srcs:
        if isinstance(s, str):
            k = kinds.get(s)
            if k is None:
                raise SemanticError(f"undeclared variable {s!r} in compare", line)
            return k
    return "fixed" if any(isinstance(s, float) for s in srcs) else "int18"


def _check_instruction(instr: Instruction, kinds: dict[str, str], nqubits: int):
    line = instr.line
    if isinstance(instr, Gate):
        arity = GATE_ARITY.get(instr.name)
        if arity is None:
            raise SemanticError(f"unknown gate {instr.name!r}", line)
        if len(instr.qubits) != arity:
            raise SemanticError(f"{instr.name} takes {arity} qubit(s)", line)
        if len(set(instr.qubits)) != len(instr.qubits):
            raise SemanticError(f"{instr.name} qubits must be distinct", line)
        for q in instr.qubits:
            if not (0 <= q < nqubits):
                raise SemanticError(
                    f"qubit q{q} out of range for {nqubits}-qubit procedure", line)
        wants_angle = instr.name in ANGLE_GATES
        if wants_angle and instr.angle is None:
            raise SemanticError(f"{instr.name} requires an angle", line)
        if not wants_angle and instr.angle is not None:
            raise SemanticError(f"{instr.name} takes no angle", line)
        if wants_angle:
            _check_operand(kinds, instr.angle, "fixed", line, f"{instr.name} angle")
    elif isinstance(instr, Measure):
        if not (0 <= instr.qubit < nqubits):
            raise SemanticError(f"qubit q{instr.qubit} out of range", line)
        _check_operand(kinds, instr.dest, "bit", line, "mz destination")
        if instr.record is not None:
            for v in instr.record:
                _check_operand(kinds, v, "fixed", line, "mz record")
    elif isinstance(instr, Reset):
        if not (0 <= instr.qubit < nqubits):
            raise SemanticError(f"qubit q{instr.qubit} out of range", line)
    elif isinstance(instr, ActiveReset):
        pass  # always the full register
    elif isinstance(instr, Classical):
        op = instr.op
        if op not in CLASSICAL_OPS:
            raise SemanticError(f"unknown classical op {op!r}", line)
        if len(instr.srcs) != CLASSICAL_OPS[op]:
            raise SemanticError(
                f"{op} takes {CLASSICAL_OPS[op]} source operand(s)", line)
        dkind = kinds.get(instr.dest)
        if dkind is None:
            raise SemanticError(f"undeclared variable {instr.dest!r}", line)
        if op in ("add", "sub", "mul", "neg"):
            if dkind == "bit":
                raise SemanticError(f"{op} cannot target a bit variable", line)
            for s in instr.srcs:
                _check_operand(kinds, s, dkind, line, op)
        elif op in ("recip", "div"):
            if dkind != "fixed":
                raise SemanticError(f"{op} targets a fixed variable", line)
            for s in instr.srcs:
                _check_operand(kinds, s, "fixed", line, op)
        elif op in ("cmp_eq", "cmp_lt"):
            if dkind != "bit":
                raise SemanticError(f"{op} targets a bit variable", line)
            k = _infer_cmp_kind(kinds, instr.srcs, line)
            for s in instr.srcs:
                _check_operand(kinds, s, k, line, op)
        elif op == "select":
            _check_operand(kinds, instr.srcs[0], "bit", line, "select condition")
            for s in instr.srcs[1:]:
                _check_operand(kinds, s, dkind, line, "select")
    elif isinstance(instr, Output):
        if instr.name not in kinds:
            raise SemanticError(f"undeclared variable {instr.name!r} in output",
                                line)
    else:
        raise SemanticError(f"unknown instruction {instr!r}")


def check_procedure(proc: Procedure):
    if proc.qubits < 0:
        raise SemanticError(f"procedure {proc.name!r}: negative qubit count")
    kinds: dict[str, str] = {}
    for name, kind in proc.params:
        if kind not in KINDS:
            raise SemanticError(f"unknown kind {kind!r} for param {name!r}")
        if name in kinds:
            raise SemanticError(f"duplicate declaration of {name!r}")
        kinds[name] = kind
    for d in proc.decls:
        if d.kind not in KINDS:
            raise SemanticError(f"unknown kind {d.kind!r} for var {d.name!r}")
        if d.name in kinds:
            raise SemanticError(f"duplicate declaration of {d.name!r}")
        kinds[d.name] = d.kind
    if not proc.blocks:
        raise SemanticError(f"procedure {proc.name!r} has no blocks")
    labels = set()
    for b in proc.blocks:
        if b.label in labels:
            raise SemanticError(f"duplicate label {b.label!r}")
        labels.add(b.label)
    for b in proc.blocks:
        for instr in b.instructions:
            _check_instruction(instr, kinds, proc.qubits)
        t = b.terminator
        if isinstance(t, Br):
            targets = (t.target,)
        elif isinstance(t, CondBr):
            _check_operand(kinds, t.cond, "bit", t.line, "condbr condition")
            targets = (t.then_target, t.else_target)
        elif isinstance(t, Ret):
            for v in t.values:
                if v not in kinds:
                    raise SemanticError(f"undeclared variable {v!r} in ret", t.line)
            targets = ()
        else:
            raise SemanticError(f"block {b.label!r} has no valid terminator")
        for tgt in targets:
            if tgt not in labels:
                raise SemanticError(f"branch to unknown label {tgt!r}", t.line)


def check_semantics(prog: HybridProgram):
    names = set()
    for p in prog.procedures:
        if p.name in names:
            raise SemanticError(f"duplicate procedure {p.name!r}")
        names.add(p.name)
        check_procedure(p)
    if prog.entry not in names:
        raise SemanticError(f"entry procedure {prog.entry!r} not found")


# ---------------------------------------------------------------------------
# Parser.

def _classify_operand(tok: str, line: int) -> str | float | int:
    if _FLOAT_RE.match(tok):
        return float(tok)
    if _INT_RE.match(tok):
        return int(tok)
    if _QUBIT_RE.match(tok):
        raise SemanticError(f"qubit {tok} cannot be a classical operand", line)
    if _IDENT_RE.match(tok) and tok not in _KEYWORDS:
        return tok
    raise IRSyntaxError(f"bad operand {tok!r}", line)


def _parse_qubit(tok: str, line: int) -> int:
    m = _QUBIT_RE.match(tok)
    if not m:
        raise IRSyntaxError(f"expected a qubit (q0, q1, ...), got {tok!r}", line)
    return int(m.group(1))


def _parse_varname(tok: str, line: int) -> str:
    if not _IDENT_RE.match(tok) or tok in _KEYWORDS or _QUBIT_RE.match(tok):
        raise IRSyntaxError(f"bad variable name {tok!r}", line)
    return tok


def _parse_procname(tok: str, line: int) -> str:
    # procedure names sit in an unambiguous position, so keywords are fine
    if not _IDENT_RE.match(tok):
        raise IRSyntaxError(f"bad procedure name {tok!r}", line)
    return tok


def _split_args(rest: str) -> list[str]:
    return [a.strip() for a in rest.split(",")] if rest.strip() else []


_GATE_ANGLE_RE = re.compile(r"(rz|crz|eswap)\s*\(\s*([^()\s]+)\s*\)\s*(.*)$")
_MZ_RE = re.compile(
    r"mz\s+(\S+)\s*->\s*(\w+)\s*"
    r"(?:record\s*\(\s*(\w+)\s*,\s*(\w+)\s*\)\s*)?$")
_LABEL_RE = re.compile(r"([A-Za-z_]\w*)\s*:$")


def _parse_instruction(text: str, ln: int) -> Instruction | Terminator:
    m = _GATE_ANGLE_RE.match(text)
    if m:
        name, angle_tok, rest = m.groups()
        angle = _classify_operand(angle_tok, ln)
        if isinstance(angle, int):
            angle = float(angle)
        qubits = tuple(_parse_qubit(a, ln) for a in _split_args(rest))
        return Gate(name, qubits, angle, line=ln)
    head, _, rest = text.partition(" ")
    rest = rest.strip()
    if head in ("h", "x", "sx", "cnot"):
        qubits = tuple(_parse_qubit(a, ln) for a in _split_args(rest))
        return Gate(head, qubits, None, line=ln)
    if head in ("rz", "crz", "eswap"):
        raise IRSyntaxError(f"{head} requires a parenthesized angle", ln)
    if head == "mz":
        m = _MZ_RE.match(text)
        if not m:
            raise IRSyntaxError("expected: mz qN -> var [record(t, phi)]", ln)
        qtok, dest, rec_t, rec_p = m.groups()
        record = (rec_t, rec_p) if rec_t else None
        return Measure(_parse_qubit(qtok, ln), _parse_varname(dest, ln),
                       record, line=ln)
    if head == "reset":
        return Reset(_parse_qubit(rest, ln), line=ln)
    if head == "active_reset":
        if rest:
            raise IRSyntaxError("active_reset takes no operands", ln)
        return ActiveReset(line=ln)
    if head in CLASSICAL_OPS:
        args = _split_args(rest)
        if len(args) != CLASSICAL_OPS[head] + 1:
            raise IRSyntaxError(
                f"{head} takes {CLASSICAL_OPS[head] + 1} operands", ln)
        dest = _parse_varname(args[0], ln)
        srcs = tuple(_classify_operand(a, ln) for a in args[1:])
        return Classical(head, dest, srcs, line=ln)
    if head == "output":
        return Output(_parse_varname(rest, ln), line=ln)
    if head == "br":
        return Br(_parse_varname(rest, ln), line=ln)
    if head == "condbr":
        args = _split_args(rest)
        if len(args) != 3:
            raise IRSyntaxError("condbr takes: cond, then_label, else_label", ln)
        return CondBr(_parse_varname(args[0], ln), _parse_varname(args[1], ln),
                      _parse_varname(args[2], ln), line=ln)
    if head == "ret":
        values = tuple(_parse_varname(a, ln) for a in _split_args(rest))
        return Ret(values, line=ln)
    raise IRSyntaxError(f"unknown instruction {head!r}", ln,
                        col=text.find(head) + 1)


def _parse_literal(tok: str, kind: str, ln: int) -> float | int:
    v = _classify_operand(tok, ln)
    if isinstance(v, str):
        raise SemanticError(f"initializer must be a literal, got {tok!r}", ln)
    if kind == "fixed":
        return float(v)
    if isinstance(v, float):
        raise SemanticError(f"{kind} initializer must be an integer", ln)
    if kind == "bit" and v not in (0, 1):
        raise SemanticError("bit initializer must be 0 or 1", ln)
    return v


_DEFAULT_INIT = {"bit": 0, "int18": 0, "fixed": 0.0}


def parse(text: str) -> HybridProgram:
    """Parse program text.  Raises IRSyntaxError / SemanticError."""
    procs: list[Procedure] = []
    cur: dict | None = None          # open procedure under construction
    blocks: list[BasicBlock] = []
    label: str | None = None
    instrs: list[Instruction] = []
    terminator: Terminator | None = None

    def close_block(ln: int):
        nonlocal label, instrs, terminator
        if label is None:
            return
        if terminator is None:
            raise SemanticError(f"block {label!r} has no terminator", ln)
        blocks.append(BasicBlock(label, tuple(instrs), terminator))
        label, instrs, terminator = None, [], None

    for ln, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "proc":
            if cur is not None:
                raise IRSyntaxError("nested proc (missing endproc?)", ln)
            if len(tokens) != 4 or tokens[2] != "qubits" or not _INT_RE.match(tokens[3]):
                raise IRSyntaxError("expected: proc NAME qubits N", ln)
            cur = {"name": _parse_procname(tokens[1], ln),
                   "qubits": int(tokens[3]), "params": [], "decls": []}
            blocks = []
            continue
        if cur is None:
            raise IRSyntaxError("text outside any procedure", ln)
        if tokens[0] == "endproc":
            if len(tokens) != 1:
                raise IRSyntaxError("endproc takes nothing", ln)
            close_block(ln)
            procs.append(Procedure(cur["name"], cur["qubits"],
                                   tuple(cur["params"]), tuple(cur["decls"]),
                                   tuple(blocks)))
            cur = None
            continue
        if tokens[0] == "param":
            if label is not None or blocks:
                raise IRSyntaxError("param after first block", ln)
            if len(tokens) != 3 or tokens[1] not in KINDS:
                raise IRSyntaxError("expected: param KIND NAME", ln)
            cur["params"].append((_parse_varname(tokens[2], ln), tokens[1]))
            continue
        if tokens[0] == "var":
            if label is not None or blocks:
                raise IRSyntaxError("var declaration after first block", ln)
            m = re.match(r"var\s+(\w+)\s+(\w+)\s*(?:=\s*(\S+))?$", line)
            if not m or m.group(1) not in KINDS:
                raise IRSyntaxError("expected: var KIND NAME [= LITERAL]", ln)
            kind, name, init_tok = m.group(1), _parse_varname(m.group(2), ln), m.group(3)
            init = (_parse_literal(init_tok, kind, ln) if init_tok is not None
                    else _DEFAULT_INIT[kind])
            cur["decls"].append(VarDecl(name, kind, init))
            continue
        m = _LABEL_RE.match(line)
        if m:
            close_block(ln)
            label = m.group(1)
            continue
        if label is None:
            raise IRSyntaxError("instruction outside any block", ln)
        if terminator is not None:
            raise SemanticError(
                f"instruction after terminator in block {label!r}", ln)
        item = _parse_instruction(line, ln)
        if isinstance(item, (Br, CondBr, Ret)):
            terminator = item
        else:
            instrs.append(item)
    if cur is not None:
        raise IRSyntaxError("missing endproc", len(text.splitlines()) or 1)
    if not procs:
        raise IRSyntaxError("no procedures", 1)
    prog = HybridProgram(tuple(procs), procs[0].name)
    check_semantics(prog)
    return prog


# ---------------------------------------------------------------------------
# Emitter.  Deterministic; parse(emit(p)) == p for valid programs.

def _fmt_operand(v: str | float | int) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _fmt_instruction(instr: Instruction | Terminator) -> str:
    if isinstance(instr, Gate):
        qs = ", ".join(f"q{q}" for q in instr.qubits)
        if instr.angle is not None:
            return f"{instr.name}({_fmt_operand(instr.angle)}) {qs}"
        return f"{instr.name} {qs}"
    if isinstance(instr, Measure):
        s = f"mz q{instr.qubit} -> {instr.dest}"
        if instr.record:
            s += f" record({instr.record[0]}, {instr.record[1]})"
        return s
    if isinstance(instr, Reset):
        return f"reset q{instr.qubit}"
    if isinstance(instr, ActiveReset):
        return "active_reset"
    if isinstance(instr, Classical):
        ops = ", ".join([instr.dest] + [_fmt_operand(s) for s in instr.srcs])
        return f"{instr.op} {ops}"
    if isinstance(instr, Output):
        return f"output {instr.name}"
    if isinstance(instr, Br):
        return f"br {instr.target}"
    if isinstance(instr, CondBr):
        return f"condbr {instr.cond}, {instr.then_target}, {instr.else_target}"
    if isinstance(instr, Ret):
        return "ret" + (" " + ", ".join(instr.values) if instr.values else "")
    raise TypeError(f"cannot emit {instr!r}")


def emit(prog: HybridProgram) -> str:
    out: list[str] = []
    for i, p in enumerate(prog.procedures):
        if i:
            out.append("")
        out.append(f"proc {p.name} qubits {p.qubits}")
        for name, kind in p.params:
            out.append(f"  param {kind} {name}")
        for d in p.decls:
            out.append(f"  var {d.kind} {d.name} = {_fmt_operand(d.init)}")
        for b in p.blocks:
            out.append(f"{b.label}:")
            for instr in b.instructions:
                out.append(f"  {_fmt_instruction(instr)}")
            out.append(f"  {_fmt_instruction(b.terminator)}")
        out.append("endproc")
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Control-flow graph.

@dataclass(frozen=True)
class Cfg:
    entry: str
    successors: dict[str, tuple[str, ...]]

    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((src, dst) for src in self.successors
                     for dst in self.successors[src])

    def to_dot(self, name: str = "cfg") -> str:
        lines = [f"digraph {name} {{"]
        for label in self.successors:
            shape = ', shape=box' if label == self.entry else ''
            lines.append(f'  "{label}" [label="{label}"{shape}];')
        for src, dst in self.edges():
            lines.append(f'  "{src}" -> "{dst}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def cfg(target: HybridProgram | Procedure) -> Cfg:
    proc = target.entry_procedure() if isinstance(target, HybridProgram) else target
    succ: dict[str, tuple[str, ...]] = {}
    for b in proc.blocks:
        t = b.terminator
        if isinstance(t, Br):
            succ[b.label] = (t.target,)
        elif isinstance(t, CondBr):
            succ[b.label] = (t.then_target, t.else_target)
        else:
            succ[b.label] = ()
    return Cfg(proc.blocks[0].label, succ)
