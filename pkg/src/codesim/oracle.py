"""Ground-truth evaluation for generated programs and the template corpus.

``evaluate`` follows Python3 integer semantics exactly (unbounded ints,
two's-complement ``&``/``|``). Loops whose bodies are affine in the variables
are summarised as integer matrices and raised to the iteration count, so a
depth-9 nest over ``range(10)`` costs a few dozen matrix products instead of
10**9 steps. Anything non-affine is stepped directly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

from .ir import (
    N,
    Instruction,
    InvalidProgram,
    LoopBlock,
    Op,
    Program,
    Return,
    Var,
    instruction_text,
    layout,
)

DEFAULT_TRACE_CAP = 10**6

Answer = Union[int, bool, list]


class TraceTooLong(RuntimeError):
    pass


class UnknownTemplate(KeyError):
    pass


def _apply(state: list[int], ins: Instruction) -> None:
    src = state[ins.src.index] if isinstance(ins.src, Var) else ins.src
    d = ins.dst.index
    op = ins.op
    if op is Op.ADD:
        state[d] += src
    elif op is Op.SUB:
        state[d] -= src
    elif op is Op.MOV:
        state[d] = src
    elif op is Op.AND:
        state[d] &= src
    elif op is Op.OR:
        state[d] |= src
    elif op is Op.MUL:
        state[d] *= src
    else:  # pragma: no cover
        raise InvalidProgram(f"unknown op {op}")


def _bound(loop: LoopBlock, n: Optional[int]) -> int:
    if loop.iterations == N:
        if n is None:
            raise InvalidProgram("loop over n but no input value given")
        return max(0, n)
    return max(0, loop.iterations)


# -- affine summaries ----------------------------------------------------------
# State vector x (length d) is extended with a constant 1; an affine map is a
# (d+1)x(d+1) matrix M with x' = M x.

Matrix = list[list[int]]


def _identity(size: int) -> Matrix:
    return [[int(i == j) for j in range(size)] for i in range(size)]


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col) if x and y) for col in cols] for row in a]


def _matpow(m: Matrix, k: int) -> Matrix:
    out = _identity(len(m))
    while k:
        if k & 1:
            out = _matmul(m, out)
        m = _matmul(m, m)
        k >>= 1
    return out


def _instruction_matrix(ins: Instruction, d: int) -> Optional[Matrix]:
    m = _identity(d + 1)
    dst = ins.dst.index
    src_col = ins.src.index if isinstance(ins.src, Var) else d
    lit = 1 if isinstance(ins.src, Var) else ins.src
    if ins.op is Op.ADD:
        m[dst][src_col] += lit
    elif ins.op is Op.SUB:
        m[dst][src_col] -= lit
    elif ins.op is Op.MOV:
        m[dst] = [0] * (d + 1)
        m[dst][src_col] = lit
    elif ins.op is Op.MUL and not isinstance(ins.src, Var):
        m[dst] = [0] * (d + 1)
        m[dst][dst] = ins.src
    else:
        return None
    return m


def _summarise(nodes, d: int, n: Optional[int]) -> Optional[Matrix]:
    total = _identity(d + 1)
    for node in nodes:
        if isinstance(node, LoopBlock):
            inner = _summarise(node.body, d, n)
            if inner is None:
                return None
            step = _matpow(inner, _bound(node, n))
        else:
            step = _instruction_matrix(node, d)
            if step is None:
                return None
        total = _matmul(step, total)
    return total


def _run(nodes, state: list[int], n: Optional[int]) -> None:
    for node in nodes:
        if isinstance(node, LoopBlock):
            times = _bound(node, n)
            if times == 0:
                continue
            m = _summarise(node.body, len(state), n)
            if m is not None:
                m = _matpow(m, times)
                vec = state + [1]
                new = [sum(c * x for c, x in zip(row, vec) if c) for row in m[:-1]]
                state[:] = new
            else:
                for _ in range(times):
                    _run(node.body, state, n)
        else:
            _apply(state, node)


def evaluate(program: Program, n: Optional[int] = None) -> dict[str, int]:
    """Final state of every variable, keyed by rendered name."""
    state = list(program.init)
    _run(program.body, state, n)
    return dict(zip(program.names, state))


def eval_function(program: Program, n: int) -> Union[int, list[int]]:
    query = program.query
    if not isinstance(query, Return):
        raise InvalidProgram("eval_function needs a program with a return query")
    state = evaluate(program, n)
    values = [state[program.name(v)] for v in query.vars]
    if query.as_list:
        return values
    if len(values) == 1:
        return values[0]
    # ``return a, b`` is a tuple in Python; keep it a list for JSON
    return values


def query_value(program: Program, n: Optional[int] = None) -> Union[int, list[int]]:
    """The answer the program's question asks for."""
    if isinstance(program.query, Var):
        return evaluate(program)[program.name(program.query)]
    if isinstance(program.query, Return):
        if n is None:
            raise InvalidProgram("function-shaped program needs an input value")
        return eval_function(program, n)
    raise InvalidProgram("program has no query")


# -- traces ------------------------------------------------------------------


@dataclass(frozen=True)
class TraceStep:
    line: int
    instruction: str
    state: dict[str, int]

    def to_json(self) -> str:
        return json.dumps(
            {"line_number": self.line, "instruction": self.instruction, "state": self.state}
        )


def trace(
    program: Program, n: Optional[int] = None, cap: int = DEFAULT_TRACE_CAP
) -> list[TraceStep]:
    """One entry per executed instruction with the state right after it."""
    _, where = layout(program)
    state = list(program.init)
    steps: list[TraceStep] = []

    def run(nodes, prefix) -> None:
        for i, node in enumerate(nodes):
            path = prefix + (i,)
            if isinstance(node, LoopBlock):
                for _ in range(_bound(node, n)):
                    run(node.body, path)
            else:
                if len(steps) >= cap:
                    raise TraceTooLong(f"more than {cap} dynamic steps")
                _apply(state, node)
                steps.append(
                    TraceStep(
                        where[path],
                        instruction_text(program, node),
                        dict(zip(program.names, state)),
                    )
                )

    run(program.body, ())
    return steps


def trace_jsonl(steps: Sequence[TraceStep]) -> str:
    return "".join(s.to_json() + "\n" for s in steps)


# -- slicing -----------------------------------------------------------------


def backward_slice(program: Program, target: Union[Var, int]) -> frozenset[int]:
    """Body indices on the data-dependence path to ``target``'s final value.

    Walks the body backwards keeping the set of variables whose current value
    still matters. An instruction is kept iff it writes a live variable; a
    plain assignment kills its destination before its source becomes live.
    """
    if any(isinstance(node, LoopBlock) for node in program.body):
        raise InvalidProgram("slicing is defined for straight-line programs only")
    if isinstance(target, int):
        target = Var(target)
    if target.index >= program.var_count:
        raise InvalidProgram(f"no variable {target.index}")

    live = {target}
    kept: set[int] = set()
    for i in range(len(program.body) - 1, -1, -1):
        ins = program.body[i]
        if ins.dst not in live:
            continue
        kept.add(i)
        if ins.op is Op.MOV:
            live.discard(ins.dst)
        live |= ins.reads()
    return frozenset(kept)


def restrict(program: Program, indices) -> Program:
    """Same header and query, body reduced to ``indices`` in original order."""
    keep = sorted(indices)
    return Program(
        program.names,
        program.init,
        tuple(program.body[i] for i in keep),
        program.query,
        program.style,
    )


# -- reference implementations for the template corpus -----------------------


def _fibonacci(n: int) -> int:
    if n <= 1:
        return n
    prev, cur = 0, 1
    for _ in range(n - 1):
        prev, cur = cur, prev + cur
    return cur


def _padovan(n: int) -> int:
    # P(0) = P(1) = P(2) = 1, P(k) = P(k-2) + P(k-3)
    seq = [1, 1, 1]
    while len(seq) <= n:
        seq.append(seq[-2] + seq[-3])
    return seq[n] if n >= 0 else 1


def _gauss(n: int) -> int:
    return n * (n - 1) // 2 if n > 0 else 0


def _gauss_alt(n: int) -> int:
    return sum(i * (-1) ** i for i in range(max(n, 0)))


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def _collatz(n: int) -> list[tuple[int, bool]]:
    """Successive Collatz terms after ``n``, each flagged if reached by halving."""
    if n < 1:
        raise ValueError("Collatz sequence needs n >= 1")
    out = []
    while n != 1:
        halved = n % 2 == 0
        n = n // 2 if halved else 3 * n + 1
        out.append((n, halved))
    return out


def _collatz_sum(n: int) -> int:
    return n + sum(t for t, _ in _collatz(n))


def _collatz_even_sum(n: int) -> int:
    return n + sum(t for t, halved in _collatz(n) if halved)


CLASSIC_REFERENCES = {
    "fibonacci": _fibonacci,
    "padovan": _padovan,
    "bubble_asc": lambda v: sorted(v),
    "bubble_desc": lambda v: sorted(v, reverse=True),
    "gauss": _gauss,
    "gauss_alt": _gauss_alt,
    "is_prime": _is_prime,
    "is_prime_succ": lambda n: _is_prime(n + 1),
    "collatz_sum": _collatz_sum,
    "collatz_even_sum": _collatz_even_sum,
}

SORTING_ALGORITHMS = (
    "insertion",
    "selection",
    "bubble",
    "adaptive_bubble",
    "quick",
    "merge",
    "tim",
    "heap",
)
SORTING_STYLES = ("iterative", "recursive")


def reference_value(corpus_id: str, value) -> Answer:
    """Ground truth for a corpus template applied to ``value``.

    Sorting ids look like ``bubble_iterative`` (optionally ``sorting/``
    prefixed); classic ids are the bare function name, e.g. ``padovan``.
    """
    key = corpus_id.split("/")[-1]
    if key in CLASSIC_REFERENCES:
        arg = list(value) if isinstance(value, (list, tuple)) else value
        return CLASSIC_REFERENCES[key](arg)
    algo, _, style = key.rpartition("_")
    if algo in SORTING_ALGORITHMS and style in SORTING_STYLES:
        return sorted(value)
    raise UnknownTemplate(corpus_id)
