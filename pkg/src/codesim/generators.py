"""Seeded synthesis of benchmark instances for every task family.

Every generator is a pure function of its parameters and seed. Each instance
re-checks its stored ground truth against the oracle when it is built, so a
generator bug surfaces as an exception rather than a wrong label.
"""
from __future__ import annotations

import hashlib
import json
import random
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from typing import Callable, Optional, Sequence, Union

from . import corpus
from .ir import (
    N,
    Instruction,
    LoopBlock,
    Op,
    Program,
    Return,
    Style,
    Var,
    approx_names,
    render,
    straight_names,
)
from .oracle import (
    SORTING_ALGORITHMS,
    SORTING_STYLES,
    Answer,
    backward_slice,
    query_value,
    reference_value,
    restrict,
)

FAMILIES = (
    "single_class",
    "straight_line",
    "critical_path",
    "approximate",
    "redundant",
    "nested",
    "sorting",
    "variant_pair",
    "good_exchange",
)

INSTRUCTION_CLASSES = {
    "addsub": (Op.ADD, Op.SUB),
    "mov": (Op.MOV,),
    "andor": (Op.AND, Op.OR),
}
SORTING_LENGTHS = (10, 20, 30, 40)
INIT_RANGE = (-10, 10)
LITERAL_PROB = 0.1

APPROX_INITS = (-1, 0, 1)
APPROX_UPDATES = (
    (Op.ADD, 1),
    (Op.ADD, 2),
    (Op.SUB, 1),
    (Op.SUB, 2),
    (Op.MUL, 2),
    (Op.MUL, -2),
    (Op.MUL, -1),
)

# accumulator updates for nested loops; no growth by multiplication, so even
# 10**9 iterations stay a small integer
NESTED_UPDATES = (
    (Op.ADD, 1),
    (Op.ADD, 2),
    (Op.SUB, 1),
    (Op.SUB, 2),
    (Op.MUL, -1),
    (Op.MOV, -2),
    (Op.MOV, -1),
    (Op.MOV, 0),
    (Op.MOV, 1),
    (Op.MOV, 2),
)
NESTED_ATTEMPTS = 10_000
MAX_NESTING = 9


class GenerationError(ValueError):
    """Invalid family parameters."""


class GenerationExhausted(RuntimeError):
    pass


class InvariantViolation(RuntimeError):
    pass


class UnknownFamily(KeyError):
    pass


@dataclass(frozen=True)
class FamilyParams:
    family: str
    n_lines: Optional[int] = None
    var_count: Optional[int] = None
    path_len: Optional[int] = None
    k: Optional[int] = None
    m: Optional[int] = None
    input_len: Optional[int] = None
    n_input: Optional[int] = None
    instruction_class: Optional[str] = None
    algorithm: Optional[str] = None
    style: Optional[str] = None
    mode: Optional[str] = None
    variant_family: Optional[str] = None
    which: Optional[str] = None
    enforce_bound: Optional[bool] = None

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass(frozen=True)
class BenchmarkInstance:
    family: str
    params: FamilyParams
    seed: int
    sources: tuple[str, ...]
    question: str
    # what the question asks for, without the "Think step by step" framing
    subject: str
    ground_truth: Answer
    # value substituted for @input@ in simulation prompts
    input_text: str
    programs: tuple[Program, ...] = ()
    corpus_id: Optional[str] = None
    corpus_input: Union[int, tuple, None] = None
    narrative: Optional[str] = None
    id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "id", instance_id(self.family, self.params, self.seed))
        self.verify()

    def verify(self) -> None:
        """Re-derive the ground truth from the oracle; raise on any mismatch."""
        n = self.params.n_input
        for prog in self.programs:
            got = query_value(prog, n if prog.is_function else None)
            if got != self.ground_truth:
                raise InvariantViolation(
                    f"{self.family}: oracle gives {got!r}, instance stores {self.ground_truth!r}"
                )
        if self.corpus_id is not None:
            arg = list(self.corpus_input) if isinstance(self.corpus_input, tuple) else self.corpus_input
            got = reference_value(self.corpus_id, arg)
            if got != self.ground_truth:
                raise InvariantViolation(
                    f"{self.corpus_id}: reference gives {got!r}, instance stores {self.ground_truth!r}"
                )

    def to_record(self) -> dict:
        rec = {
            "id": self.id,
            "family": self.family,
            "params": self.params.to_dict(),
            "seed": self.seed,
            "question": self.question,
            "ground_truth": self.ground_truth,
        }
        if self.corpus_id is not None:
            rec["corpus_id"] = self.corpus_id
            rec["input"] = list(self.corpus_input) if isinstance(self.corpus_input, tuple) else self.corpus_input
        return rec


def instance_id(family: str, params: FamilyParams, seed: int) -> str:
    blob = json.dumps([family, params.to_dict(), seed], sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def derive_seed(*parts) -> int:
    """64-bit seed from an arbitrary JSON-serialisable tuple."""
    blob = json.dumps(parts, sort_keys=True, default=str)
    return int.from_bytes(hashlib.sha256(blob.encode()).digest()[:8], "big")


def _value_question(name: str) -> tuple[str, str]:
    subject = f"the numerical value {name} has at the end of the computation"
    return f"Think step by step and then reply with {subject}.", subject


def _function_question(input_text: str, noun: str = "function") -> tuple[str, str]:
    subject = f"the output of the {noun} for {input_text}"
    return f"Think step by step and then reply with {subject}.", subject


# -- straight-line families ---------------------------------------------------


def _random_instruction(rng: random.Random, ops, dsts, srcs) -> Instruction:
    op = rng.choice(ops)
    dst = rng.choice(dsts)
    if rng.random() < LITERAL_PROB:
        src: Union[Var, int] = rng.randint(*INIT_RANGE)
    else:
        src = rng.choice(srcs)
    return Instruction(op, dst, src)


def _straight_instance(family, params, seed, program: Program) -> BenchmarkInstance:
    name = program.name(program.query)
    question, subject = _value_question(name)
    return BenchmarkInstance(
        family=family,
        params=params,
        seed=seed,
        sources=(render(program),),
        question=question,
        subject=subject,
        ground_truth=query_value(program),
        input_text=f"none (report {subject})",
        programs=(program,),
    )


def _pick_query(rng: random.Random, body: Sequence[Instruction], var_count: int) -> Var:
    written = sorted({ins.dst for ins in body})
    return rng.choice(written) if written else Var(rng.randrange(var_count))


def _straight_program(rng: random.Random, ops, n_lines: int, var_count: int) -> Program:
    vars_ = [Var(i) for i in range(var_count)]
    init = [rng.randint(*INIT_RANGE) for _ in vars_]
    body = [_random_instruction(rng, ops, vars_, vars_) for _ in range(n_lines)]
    return Program(straight_names(var_count), init, body, _pick_query(rng, body, var_count))


def gen_single_class(
    instruction_class: str, n_lines: int, seed: int, var_count: int = 5
) -> BenchmarkInstance:
    if instruction_class not in INSTRUCTION_CLASSES:
        raise GenerationError(f"unknown instruction class {instruction_class!r}")
    if n_lines < 1 or var_count < 1:
        raise GenerationError("n_lines and var_count must be positive")
    rng = random.Random(seed)
    program = _straight_program(rng, INSTRUCTION_CLASSES[instruction_class], n_lines, var_count)
    params = FamilyParams(
        "single_class", n_lines=n_lines, var_count=var_count, instruction_class=instruction_class
    )
    return _straight_instance("single_class", params, seed, program)


def gen_straight_line(n_lines: int, seed: int, var_count: int = 5) -> BenchmarkInstance:
    if n_lines < 1 or var_count < 1:
        raise GenerationError("n_lines and var_count must be positive")
    rng = random.Random(seed)
    program = _straight_program(rng, (Op.ADD, Op.SUB, Op.MOV), n_lines, var_count)
    params = FamilyParams("straight_line", n_lines=n_lines, var_count=var_count)
    return _straight_instance("straight_line", params, seed, program)


def critical_path_program(
    rng: random.Random, n_lines: int, path_len: int, var_count: int
) -> tuple[Program, frozenset[int]]:
    """Program whose query slice is exactly ``path_len`` instructions.

    The chain is built backwards from the query variable: each new
    instruction writes a variable that is still live, so it lands on the
    slice. Filler instructions only write variables the chain never touches.
    """
    filler = n_lines - path_len
    if filler:
        chain_size = rng.randint(min(2, var_count - 1), var_count - 1)
    else:
        chain_size = rng.randint(min(2, var_count), var_count)
    order = list(range(var_count))
    rng.shuffle(order)
    chain_vars = [Var(i) for i in sorted(order[:chain_size])]
    free_vars = [Var(i) for i in sorted(order[chain_size:])]
    target = rng.choice(chain_vars)

    live = {target}
    chain: list[Instruction] = []
    for _ in range(path_len):
        dst = rng.choice(sorted(live))
        op = rng.choice((Op.ADD, Op.SUB, Op.MOV))
        if op is not Op.MOV and rng.random() < LITERAL_PROB:
            src: Union[Var, int] = rng.randint(*INIT_RANGE)
        else:
            src = rng.choice(chain_vars)
        ins = Instruction(op, dst, src)
        if op is Op.MOV:
            live.discard(dst)
        live |= ins.reads()
        chain.append(ins)
    chain.reverse()

    all_vars = [Var(i) for i in range(var_count)]
    fill = [
        _random_instruction(rng, (Op.ADD, Op.SUB, Op.MOV), free_vars, all_vars)
        for _ in range(filler)
    ]
    positions = sorted(rng.sample(range(n_lines), path_len))
    body: list[Instruction] = []
    chain_it, fill_it = iter(chain), iter(fill)
    pos_set = set(positions)
    for i in range(n_lines):
        body.append(next(chain_it) if i in pos_set else next(fill_it))
    init = [rng.randint(*INIT_RANGE) for _ in range(var_count)]
    program = Program(straight_names(var_count), init, body, target)
    return program, frozenset(positions)


def gen_critical_path(
    n_lines: int, path_len: int, seed: int, var_count: int = 5, attempts: int = 100
) -> BenchmarkInstance:
    if not 0 < path_len <= n_lines:
        raise GenerationError(f"need 0 < path_len <= n_lines, got {path_len}, {n_lines}")
    if var_count < 2 and path_len < n_lines:
        raise GenerationError("filler instructions need at least two variables")
    rng = random.Random(seed)
    for _ in range(attempts):
        program, positions = critical_path_program(rng, n_lines, path_len, var_count)
        sl = backward_slice(program, program.query)
        if sl == positions and query_value(restrict(program, sl)) == query_value(program):
            params = FamilyParams(
                "critical_path", n_lines=n_lines, path_len=path_len, var_count=var_count
            )
            return _straight_instance("critical_path", params, seed, program)
    raise GenerationExhausted(f"no valid critical-path program after {attempts} attempts")


# -- function-shaped families ---------------------------------------------------


def approximate_program(inits: Sequence[int], updates: Sequence[tuple[Op, int]]) -> Program:
    k = len(inits)
    body = [
        LoopBlock(N, (Instruction(op, Var(i), lit),)) for i, (op, lit) in enumerate(updates)
    ]
    return Program(
        approx_names(k),
        inits,
        body,
        Return(tuple(Var(i) for i in range(k)), as_list=True),
        Style.COMPACT,
    )


def _function_instance(
    family, params, seed, programs, sources, n_input, noun="function"
) -> BenchmarkInstance:
    input_text = f"n={n_input}"
    question, subject = _function_question(input_text, noun)
    return BenchmarkInstance(
        family=family,
        params=params,
        seed=seed,
        sources=tuple(sources),
        question=question,
        subject=subject,
        ground_truth=query_value(programs[0], n_input),
        input_text=input_text,
        programs=tuple(programs),
    )


def gen_approximate(k: int, seed: int, n_input: int = 10) -> BenchmarkInstance:
    if not 1 <= k <= MAX_NESTING:
        raise GenerationError(f"k must be in 1..{MAX_NESTING}, got {k}")
    rng = random.Random(seed)
    inits = [rng.choice(APPROX_INITS) for _ in range(k)]
    updates = [rng.choice(APPROX_UPDATES) for _ in range(k)]
    program = approximate_program(inits, updates)
    params = FamilyParams("approximate", k=k, n_input=n_input)
    return _function_instance("approximate", params, seed, [program], [render(program)], n_input)


def nested_program(rng: random.Random, k: int, per_level: tuple[int, int] = (1, 2)) -> Program:
    """Single accumulator ``a`` updated inside a chain of ``k`` loops over n."""
    acc = Var(0)

    def level(depth: int) -> tuple:
        count = rng.randint(*per_level)
        nodes: list = [Instruction(op, acc, lit) for op, lit in (rng.choice(NESTED_UPDATES) for _ in range(count))]
        if depth < k:
            nodes.insert(rng.randint(0, len(nodes)), level(depth + 1))
        return LoopBlock(N, tuple(nodes))

    init = rng.randint(-2, 2)
    return Program(("a",), (init,), (level(1),), Return((acc,)), Style.SPACED)


def nested_bound(k: int) -> int:
    return min(2**k, 1024)


def gen_nested(
    k: int,
    seed: int,
    enforce_bound: bool = True,
    n_input: int = 10,
    attempts: int = NESTED_ATTEMPTS,
) -> BenchmarkInstance:
    if not 1 <= k <= MAX_NESTING:
        raise GenerationError(f"k must be in 1..{MAX_NESTING}, got {k}")
    rng = random.Random(seed)
    bound = nested_bound(k)
    for _ in range(attempts):
        program = nested_program(rng, k)
        if not enforce_bound or abs(query_value(program, n_input)) <= bound:
            break
    else:
        raise GenerationExhausted(f"no nested program within ±{bound} after {attempts} attempts")
    params = FamilyParams("nested", k=k, n_input=n_input, enforce_bound=enforce_bound)
    return _function_instance("nested", params, seed, [program], [render(program)], n_input)


# -- redundancy ---------------------------------------------------------------

RENAME_PREFIXES = ("a", "b", "c", "v", "x", "y", "r", "t")

Transform = Callable[[random.Random, Program], Program]


def rename_variables(rng: random.Random, program: Program) -> Program:
    """Alpha-rename to a fresh prefix and a shuffled index assignment."""
    prefix = rng.choice(RENAME_PREFIXES)
    perm = list(range(program.var_count))
    rng.shuffle(perm)
    names = tuple(f"{prefix}{perm[i]}" for i in range(program.var_count))
    return replace(program, names=names)


def _independent(a: Instruction, b: Instruction) -> bool:
    return a.dst != b.dst and a.dst not in b.reads() and b.dst not in a.reads()


def swap_independent(rng: random.Random, program: Program) -> Program:
    """Swap one adjacent pair of instructions that share no data."""
    body = list(program.body)
    pairs = [i for i in range(len(body) - 1) if _independent(body[i], body[i + 1])]
    if not pairs:
        return program
    i = rng.choice(pairs)
    body[i], body[i + 1] = body[i + 1], body[i]
    return replace(program, body=tuple(body))


def insert_self_assignment(rng: random.Random, program: Program) -> Program:
    v = Var(rng.randrange(program.var_count))
    body = list(program.body)
    body.insert(rng.randint(0, len(body)), Instruction(Op.MOV, v, v))
    return replace(program, body=tuple(body))


DEFAULT_TRANSFORMS: tuple[Transform, ...] = (
    rename_variables,
    swap_independent,
    insert_self_assignment,
)


def gen_redundant(
    base_seed: int,
    m: int,
    n_lines: int = 10,
    var_count: int = 5,
    n_input: int = 10,
    transforms: Sequence[Transform] = DEFAULT_TRANSFORMS,
    attempts: int = 200,
) -> BenchmarkInstance:
    """``m`` textually distinct, semantically equal functions.

    Equality is checked with the oracle, never assumed from the transforms.
    """
    if m < 2:
        raise GenerationError("redundancy needs m >= 2")
    rng = random.Random(base_seed)
    base = _straight_program(rng, (Op.ADD, Op.SUB, Op.MOV), n_lines, var_count)
    base = replace(base, query=Return((base.query,)))
    variants = [base]
    seen = {render(base)}
    for _ in range(m - 1):
        for _ in range(attempts):
            prog = base
            chosen = [t for t in transforms if rng.random() < 0.5] or [rng.choice(list(transforms))]
            for t in chosen:
                prog = t(rng, prog)
            text = render(prog)
            if text not in seen:
                break
        else:
            raise GenerationExhausted(f"could not find {m} distinct variants")
        seen.add(text)
        variants.append(prog)

    expected = query_value(base, n_input)
    for i, prog in enumerate(variants):
        got = query_value(prog, n_input)
        if got != expected:
            raise InvariantViolation(f"variant {i} evaluates to {got}, base to {expected}")
    params = FamilyParams("redundant", m=m, n_lines=n_lines, var_count=var_count, n_input=n_input)
    return _function_instance(
        "redundant", params, base_seed, variants, [render(p) for p in variants], n_input, "functions"
    )


# -- template families ---------------------------------------------------------


def gen_sorting(
    algorithm: str,
    style: str,
    input_len: int,
    seed: int,
    vector: Optional[Sequence[int]] = None,
) -> BenchmarkInstance:
    if algorithm not in SORTING_ALGORITHMS or style not in SORTING_STYLES:
        raise corpus.UnknownTemplate(f"{algorithm}_{style}")
    if input_len not in SORTING_LENGTHS:
        raise GenerationError(f"input_len must be one of {SORTING_LENGTHS}")
    corpus_id = f"{algorithm}_{style}"
    if vector is None:
        rng = random.Random(seed)
        vector = [rng.randint(0, 100) for _ in range(input_len)]
    elif len(vector) != input_len:
        raise GenerationError("vector length does not match input_len")
    vector = list(vector)
    input_text = f"main({vector}, {len(vector)})"
    question, subject = _function_question(input_text)
    return BenchmarkInstance(
        family="sorting",
        params=FamilyParams("sorting", algorithm=algorithm, style=style, input_len=input_len),
        seed=seed,
        sources=(corpus.template(corpus_id),),
        question=question,
        subject=subject,
        ground_truth=sorted(vector),
        input_text=input_text,
        corpus_id=corpus_id,
        corpus_input=tuple(vector),
    )


def _resolve_pair(family_name: str) -> tuple[str, str]:
    key = family_name.split("/")[0]
    if key not in corpus.VARIANT_PAIRS:
        raise UnknownFamily(family_name)
    return key, corpus.VARIANT_PAIRS[key]


def variant_input(family_name: str, seed: int):
    """A sensible random input for a classic/variant pair."""
    key, _ = _resolve_pair(family_name)
    rng = random.Random(seed)
    if key == "bubble_asc":
        return [rng.randint(0, 100) for _ in range(10)]
    if key == "is_prime":
        return rng.randint(1, 100)
    if key == "collatz_sum":
        return rng.randint(1, 30)
    return rng.randint(1, 25)


def _pair_instance(corpus_id, family_key, which, value, anonymize, seed) -> BenchmarkInstance:
    source = corpus.template(corpus_id)
    fn = corpus.entry_point(corpus_id)
    if not anonymize:
        fn_new = corpus.DESCRIPTIVE_NAMES[corpus_id]
        source = corpus.rename_function(source, fn, fn_new)
        fn = fn_new
    arg = list(value) if isinstance(value, (list, tuple)) else value
    input_text = f"v={arg}" if isinstance(arg, list) else f"n={arg}"
    question, subject = _function_question(input_text)
    return BenchmarkInstance(
        family="variant_pair",
        params=FamilyParams("variant_pair", variant_family=family_key, which=which),
        seed=seed,
        sources=(source,),
        question=question,
        subject=subject,
        ground_truth=reference_value(corpus_id, arg),
        input_text=input_text,
        corpus_id=corpus_id,
        corpus_input=tuple(arg) if isinstance(arg, list) else arg,
    )


def gen_variant_pair(
    family_name: str, value, anonymize: bool = True, seed: Optional[int] = None
) -> tuple[BenchmarkInstance, BenchmarkInstance]:
    """(classic, variant) instances on the same input.

    The stored listings already use the one-letter names ``f`` and ``g``;
    with ``anonymize=False`` they are replaced by descriptive names.
    """
    classic, variant = _resolve_pair(family_name)
    if seed is None:
        seed = derive_seed("variant_pair", classic, value, anonymize)
    return (
        _pair_instance(classic, classic, "classic", value, anonymize, seed),
        _pair_instance(variant, classic, "variant", value, anonymize, seed),
    )


# -- good exchange ---------------------------------------------------------------


@lru_cache(maxsize=None)
def exchange_phrasing() -> dict:
    path = resources.files("codesim") / "assets" / "goods.json"
    return json.loads(path.read_text(encoding="utf-8"))


# (kind, actor, other, quantity); other/quantity unused by some kinds
Event = tuple[str, int, int, int]


def exchange_program(init: Sequence[int], events: Sequence[Event], query: int = 0) -> Program:
    body: list[Instruction] = []
    for kind, x, y, q in events:
        X, Y = Var(x), Var(y)
        if kind == "give":
            body += [Instruction(Op.SUB, X, q), Instruction(Op.ADD, Y, q)]
        elif kind == "buy":
            body.append(Instruction(Op.ADD, X, q))
        elif kind == "eat":
            body.append(Instruction(Op.SUB, X, q))
        elif kind == "gift":
            body.append(Instruction(Op.ADD, X, Y))
        elif kind == "match":
            body.append(Instruction(Op.MOV, X, Y))
        else:
            raise GenerationError(f"unknown event {kind!r}")
    return Program(straight_names(2), init, body, Var(query))


def narrate(init: Sequence[int], events: Sequence[Event]) -> str:
    ph = exchange_phrasing()
    agents, good = ph["agents"], ph["good"]
    lines = [ph["intro"].format(A=agents[0], B=agents[1], a=init[0], b=init[1], good=good)]
    for kind, x, y, q in events:
        lines.append(ph["events"][kind].format(X=agents[x], Y=agents[y], q=q, good=good))
    return "\n".join(lines)


def _random_events(rng: random.Random, init: Sequence[int], count: int) -> list[Event]:
    counts = list(init)
    events: list[Event] = []
    while len(events) < count:
        kind = rng.choice(("give", "buy", "eat", "gift", "match"))
        x = rng.randrange(2)
        y = 1 - x
        q = 0
        if kind in ("give", "eat"):
            if counts[x] == 0:
                continue
            q = rng.randint(1, min(counts[x], 5))
            counts[x] -= q
            if kind == "give":
                counts[y] += q
        elif kind == "buy":
            q = rng.randint(1, 5)
            counts[x] += q
        elif kind == "gift":
            counts[x] += counts[y]
        else:
            counts[x] = counts[y]
        events.append((kind, x, y, q))
    return events


def gen_good_exchange(n_interactions: int, mode: str, seed: int) -> BenchmarkInstance:
    """Two agents trading goods, as English sentences or as straight-line code.

    Both modes draw the same events for a given seed, so they share the
    ground truth; ``mode`` only selects what the prompt shows.
    """
    if mode not in ("naturalistic", "synthetic"):
        raise GenerationError(f"unknown mode {mode!r}")
    if n_interactions < 1:
        raise GenerationError("need at least one interaction")
    rng = random.Random(seed)
    init = [rng.randint(1, 10), rng.randint(1, 10)]
    events = _random_events(rng, init, n_interactions)
    query = rng.randrange(2)
    program = exchange_program(init, events, query)
    story = narrate(init, events)
    ph = exchange_phrasing()
    if mode == "naturalistic":
        subject = ph["question"].format(good=ph["good"], X=ph["agents"][query])
        question = f"Think step by step and then reply with {subject}."
    else:
        question, subject = _value_question(program.name(Var(query)))
    return BenchmarkInstance(
        family="good_exchange",
        params=FamilyParams("good_exchange", n_lines=n_interactions, mode=mode),
        seed=seed,
        sources=(render(program),),
        question=question,
        subject=subject,
        ground_truth=query_value(program),
        input_text=f"none (report {subject})",
        programs=(program,),
        narrative=story,
    )


# -- dispatch --------------------------------------------------------------------


def generate(family: str, params: dict, seed: int) -> BenchmarkInstance:
    """Build one instance from a flat parameter dict (as found in spec grids)."""
    p = dict(params)
    if family == "single_class":
        return gen_single_class(p["instruction_class"], p["n_lines"], seed, p.get("var_count", 5))
    if family == "straight_line":
        return gen_straight_line(p["n_lines"], seed, p.get("var_count", 5))
    if family == "critical_path":
        return gen_critical_path(p["n_lines"], p["path_len"], seed, p.get("var_count", 5))
    if family == "approximate":
        return gen_approximate(p["k"], seed, p.get("n_input", 10))
    if family == "redundant":
        return gen_redundant(
            seed, p["m"], p.get("n_lines", 10), p.get("var_count", 5), p.get("n_input", 10)
        )
    if family == "nested":
        return gen_nested(p["k"], seed, p.get("enforce_bound", True), p.get("n_input", 10))
    if family == "sorting":
        return gen_sorting(p["algorithm"], p["style"], p["input_len"], seed)
    if family == "variant_pair":
        name = p["variant_family"]
        pair = gen_variant_pair(name, variant_input(name, seed), p.get("anonymize", True), seed)
        return pair[0] if p.get("which", "variant") == "classic" else pair[1]
    if family == "good_exchange":
        return gen_good_exchange(p["n_lines"], p["mode"], seed)
    raise UnknownFamily(family)
