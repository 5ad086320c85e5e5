"""Restricted integer-register programs and their Python3 rendering.

Programs are immutable trees: a header that initialises every variable, then
a body of instructions and (for function-shaped programs) counted loops.
``render`` turns a program into the exact source text shown to a model.
"""
from __future__ import annotations

import keyword
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Union


class InvalidProgram(ValueError):
    pass


class Op(str, Enum):
    ADD = "+="
    SUB = "-="
    MOV = "="
    AND = "&="
    OR = "|="
    MUL = "*="


class Style(str, Enum):
    # a0=-1; a1=0 header, "a1 += a2" body
    STRAIGHT = "straight"
    # n_0=-1; n_1=1 header, "n_0*=2" body
    COMPACT = "compact"
    # "a = -2" header, "a += 2" body
    SPACED = "spaced"


N = "n"  # symbolic loop bound: the function input


@dataclass(frozen=True, order=True)
class Var:
    index: int

    def __post_init__(self) -> None:
        if self.index < 0:
            raise InvalidProgram(f"negative variable index {self.index}")


@dataclass(frozen=True)
class Instruction:
    op: Op
    dst: Var
    src: Union[Var, int]

    def reads(self) -> frozenset[Var]:
        """Variables whose current value the instruction depends on."""
        out = set()
        if self.op is not Op.MOV:
            out.add(self.dst)
        if isinstance(self.src, Var):
            out.add(self.src)
        return frozenset(out)


@dataclass(frozen=True)
class LoopBlock:
    iterations: Union[str, int]
    body: tuple["Node", ...]

    @property
    def nesting_depth(self) -> int:
        inner = [n.nesting_depth for n in self.body if isinstance(n, LoopBlock)]
        return 1 + max(inner, default=0)


Node = Union[Instruction, LoopBlock]


@dataclass(frozen=True)
class Return:
    """Function query: ``return x`` or ``return [x, y, ...]``."""

    vars: tuple[Var, ...]
    as_list: bool = False


@dataclass(frozen=True)
class Program:
    names: tuple[str, ...]
    init: tuple[int, ...]
    body: tuple[Node, ...] = ()
    query: Union[Var, Return, None] = None
    style: Style = Style.STRAIGHT

    def __post_init__(self) -> None:
        # callers often pass lists; normalise so programs stay hashable
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "init", tuple(int(v) for v in self.init))
        object.__setattr__(self, "body", tuple(self.body))
        _validate(self)

    @property
    def var_count(self) -> int:
        return len(self.names)

    @property
    def is_function(self) -> bool:
        return isinstance(self.query, Return)

    def name(self, var: Var) -> str:
        return self.names[var.index]

    def instructions(self) -> Iterator[Instruction]:
        """All static instructions, depth first, in source order."""
        yield from _walk(self.body)


def straight_names(count: int) -> tuple[str, ...]:
    return tuple(f"a{i}" for i in range(count))


def approx_names(count: int) -> tuple[str, ...]:
    return tuple(f"n_{i}" for i in range(count))


def _walk(nodes) -> Iterator[Instruction]:
    for node in nodes:
        if isinstance(node, LoopBlock):
            yield from _walk(node.body)
        else:
            yield node


def _validate(program: Program) -> None:
    names = program.names
    if not names:
        raise InvalidProgram("a program needs at least one variable")
    if len(program.init) != len(names):
        raise InvalidProgram(
            f"{len(names)} variables but {len(program.init)} initial values"
        )
    if len(set(names)) != len(names):
        raise InvalidProgram(f"duplicate variable names in {names}")
    for nm in names:
        if not nm.isidentifier() or keyword.iskeyword(nm) or nm in ("n", "f", "_"):
            raise InvalidProgram(f"unusable variable name {nm!r}")

    def check_var(v: Var) -> None:
        if v.index >= len(names):
            raise InvalidProgram(f"variable index {v.index} is not initialised")

    def check(nodes) -> None:
        for node in nodes:
            if isinstance(node, LoopBlock):
                it = node.iterations
                if not (it == N or (isinstance(it, int) and not isinstance(it, bool))):
                    raise InvalidProgram(f"bad loop bound {it!r}")
                if not node.body:
                    raise InvalidProgram("empty loop body")
                check(node.body)
            elif isinstance(node, Instruction):
                check_var(node.dst)
                if isinstance(node.src, Var):
                    check_var(node.src)
                elif not isinstance(node.src, int) or isinstance(node.src, bool):
                    raise InvalidProgram(f"bad source operand {node.src!r}")
            else:
                raise InvalidProgram(f"unknown node {node!r}")

    check(program.body)
    query = program.query
    if isinstance(query, Var):
        check_var(query)
        if any(isinstance(n, LoopBlock) for n in program.body):
            raise InvalidProgram("straight-line programs cannot contain loops")
    elif isinstance(query, Return):
        if not query.vars:
            raise InvalidProgram("empty return")
        for v in query.vars:
            check_var(v)
    elif query is not None:
        raise InvalidProgram(f"bad query {query!r}")
    elif any(isinstance(n, LoopBlock) for n in program.body):
        raise InvalidProgram("loops require a function-shaped program")


# -- rendering ---------------------------------------------------------------

INDENT = "    "


def _operand(program: Program, src: Union[Var, int]) -> str:
    return program.name(src) if isinstance(src, Var) else str(src)


def instruction_text(program: Program, ins: Instruction) -> str:
    dst = program.name(ins.dst)
    src = _operand(program, ins.src)
    if program.style is Style.COMPACT:
        return f"{dst}{ins.op.value}{src}"
    return f"{dst} {ins.op.value} {src}"


def header_text(program: Program) -> str:
    eq = " = " if program.style is Style.SPACED else "="
    return "; ".join(f"{nm}{eq}{v}" for nm, v in zip(program.names, program.init))


def layout(program: Program, name: str = "f") -> tuple[list[str], dict[tuple[int, ...], int]]:
    """Source lines plus a map from body path to 1-based line number.

    A path is the tuple of child indices leading to a node, so the first
    top-level instruction has path ``(0,)``.
    """
    lines: list[str] = []
    where: dict[tuple[int, ...], int] = {}
    base = 0
    if program.is_function:
        lines.append(f"def {name}(n):")
        base = 1

    lines.append(INDENT * base + header_text(program))

    def emit(nodes, depth: int, prefix: tuple[int, ...]) -> None:
        for i, node in enumerate(nodes):
            path = prefix + (i,)
            pad = INDENT * depth
            if isinstance(node, LoopBlock):
                bound = node.iterations
                lines.append(f"{pad}for _ in range({bound}):")
                where[path] = len(lines)
                emit(node.body, depth + 1, path)
            else:
                lines.append(pad + instruction_text(program, node))
                where[path] = len(lines)

    emit(program.body, base, ())
    if program.is_function:
        q = program.query
        names = [program.name(v) for v in q.vars]
        if q.as_list:
            ret = "[" + ", ".join(names) + "]"
        else:
            ret = ", ".join(names)
        lines.append(f"{INDENT}return {ret}")
    return lines, where


def function_wrap(program: Program, name: str = "f") -> str:
    if not program.is_function:
        raise InvalidProgram("function_wrap needs a program with a return query")
    if not name.isidentifier() or keyword.iskeyword(name):
        raise InvalidProgram(f"bad function name {name!r}")
    return "\n".join(layout(program, name)[0])


def render(program: Program) -> str:
    """Python3 source for ``program``; LF separated, no trailing newline."""
    if program.is_function:
        return function_wrap(program, "f")
    return "\n".join(layout(program)[0])
