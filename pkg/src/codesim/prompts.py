"""Prompt construction for every family x technique combination.

Templates live in ``assets/prompts`` with ``@placeholder@`` slots. Worked
examples used for k-shot prompting are produced by the oracle, never typed
in by hand.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Any, Optional

from .generators import BenchmarkInstance, derive_seed
from .ir import Instruction, Op, Program, Var, render, straight_names
from .oracle import evaluate, trace

TAG_SENTENCE = "Enclose the solution between <result></result> tags."
SC_TEMPERATURE = 0.1
KSHOT_FAMILIES = ("single_class", "straight_line", "critical_path")
FUNCTION_FAMILIES = ("approximate", "nested", "sorting", "variant_pair", "redundant")

# instruction verb per family ("Simulate" for the multi-loop approximation task)
DEFAULT_VERB = {
    "single_class": "Execute",
    "straight_line": "Execute",
    "critical_path": "Execute",
    "nested": "Execute",
    "approximate": "Simulate",
    "redundant": "Execute",
    "sorting": "Execute",
    "variant_pair": "Execute",
    "good_exchange": "Execute",
}

KINDS = ("base", "cot", "kshot", "cosm", "sc")


class UnsupportedCombination(ValueError):
    pass


@dataclass(frozen=True)
class Technique:
    kind: str
    kshot_mode: str = "examples"
    kshot_k: int = 1
    inner: Optional["Technique"] = None
    votes: int = 3

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown technique {self.kind!r}")
        if self.kind == "sc":
            if self.inner is None or self.inner.kind == "sc":
                raise ValueError("self-consistency must wrap a non-SC technique")
            if self.votes < 2:
                raise ValueError("self-consistency needs at least 2 votes")
        if self.kind == "kshot":
            if self.kshot_mode not in ("instructional", "examples"):
                raise ValueError(f"unknown k-shot mode {self.kshot_mode!r}")
            if self.kshot_k not in (1, 2, 3):
                raise ValueError("k-shot k must be 1, 2 or 3")

    @property
    def label(self) -> str:
        if self.kind == "sc":
            return f"sc-{self.inner.label}-{self.votes}"
        if self.kind == "kshot":
            if self.kshot_mode == "instructional":
                return "kshot-instructional"
            return f"kshot-examples-{self.kshot_k}"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "Technique":
        """Inverse of ``label``: ``cot``, ``kshot-examples-2``, ``sc-cosm-5`` ..."""
        text = text.strip().lower()
        if text.startswith("sc-"):
            rest = text[3:]
            m = re.match(r"^(.*?)(?:-(\d+))?$", rest)
            inner, votes = m.group(1), m.group(2)
            # kshot-examples-2 ends in a digit of its own
            if inner == "kshot-examples" and votes:
                return cls("sc", inner=cls.parse(rest))
            return cls("sc", inner=cls.parse(inner), votes=int(votes or 3))
        if text == "kshot-instructional":
            return cls("kshot", kshot_mode="instructional")
        m = re.match(r"^kshot-examples(?:-(\d))?$", text)
        if m:
            return cls("kshot", kshot_mode="examples", kshot_k=int(m.group(1) or 1))
        if text in ("base", "cot", "cosm"):
            return cls(text)
        raise ValueError(f"unknown technique {text!r}")


@dataclass(frozen=True)
class PromptBundle:
    user_text: str
    answer_contract: str  # "result_tags" | "bare_value"
    technique: str
    instance_id: str
    family: str
    system_text: Optional[str] = None
    sample_index: int = 0
    sampling: dict = field(default_factory=dict)
    phrasing: str = "Execute"
    # ground truth rides along for mock providers and scoring; never sent
    reference: Any = field(default=None, compare=False)

    def messages(self) -> list[dict]:
        out = []
        if self.system_text:
            out.append({"role": "system", "content": self.system_text})
        out.append({"role": "user", "content": self.user_text})
        return out

    def to_dict(self) -> dict:
        return {
            "user_text": self.user_text,
            "system_text": self.system_text,
            "answer_contract": self.answer_contract,
            "technique": self.technique,
            "instance_id": self.instance_id,
            "family": self.family,
            "sample_index": self.sample_index,
            "sampling": self.sampling,
            "phrasing": self.phrasing,
        }


@lru_cache(maxsize=None)
def template(name: str) -> str:
    path = resources.files("codesim") / "assets" / "prompts" / f"{name}.txt"
    return path.read_text(encoding="utf-8")


def fill(text: str, **slots: str) -> str:
    def sub(m: re.Match) -> str:
        key = m.group(1)
        if key not in slots:
            raise KeyError(f"no value for @{key}@")
        return str(slots[key])

    return re.sub(r"@(\w+)@", sub, text)


# -- worked examples -------------------------------------------------------------


def _operand(v: int) -> str:
    return f"({v})" if v < 0 else str(v)


SYMBOL = {Op.ADD: "+", Op.SUB: "-", Op.AND: "&", Op.OR: "|", Op.MUL: "*"}


def worked_trace(program: Program) -> str:
    """Numbered computation in the style ``2. a0 -= a1 -> a0 = 5 - 3 = 2``."""
    lines = [f"1. {render(program).splitlines()[0]}"]
    before = dict(zip(program.names, program.init))
    for i, step in enumerate(trace(program), start=2):
        ins = program.body[i - 2]
        d = program.name(ins.dst)
        new = step.state[d]
        if ins.op is Op.MOV:
            lines.append(f"{i}. {step.instruction} -> {d} = {new}")
        else:
            src = before[program.name(ins.src)] if isinstance(ins.src, Var) else ins.src
            lines.append(
                f"{i}. {step.instruction} -> {d} = {before[d]} {SYMBOL[ins.op]} {_operand(src)} = {new}"
            )
        before = step.state
    return "\n".join(lines)


# the operation-semantics illustration: a0..a4 start at 5, 3, 8, 0, 4
SEMANTICS_EXAMPLE = Program(
    straight_names(5),
    (5, 3, 8, 0, 4),
    (
        Instruction(Op.SUB, Var(0), Var(1)),
        Instruction(Op.MOV, Var(0), Var(1)),
        Instruction(Op.ADD, Var(4), Var(1)),
        Instruction(Op.SUB, Var(0), Var(2)),
    ),
    Var(0),
)


def instructional_preamble() -> str:
    prog = SEMANTICS_EXAMPLE
    final = evaluate(prog)
    summary = (
        f"the value of a4 at the end of the iterations is {final['a4']} "
        f"while the value of a0 is {final['a0']}."
    )
    return fill(
        template("kshot_instructional"),
        count=len(prog.body),
        code=render(prog),
        trace=worked_trace(prog),
        summary=summary,
    )


def example_program(seed: int, ops=(Op.ADD, Op.SUB, Op.MOV), size: int = 5) -> Program:
    """Small illustration program that contains at least one assignment."""
    rng = random.Random(seed)
    vars_ = [Var(i) for i in range(5)]
    init = [rng.randint(-10, 10) for _ in vars_]
    body = [Instruction(rng.choice(ops), rng.choice(vars_), rng.choice(vars_)) for _ in range(size)]
    if Op.MOV in ops and not any(ins.op is Op.MOV for ins in body):
        ins = body[rng.randrange(size)]
        body[body.index(ins)] = Instruction(Op.MOV, ins.dst, ins.src)
    return Program(straight_names(5), init, body, body[-1].dst)


def example_block(program: Program) -> str:
    return fill(
        template("kshot_example"),
        count=len(program.body),
        code=render(program),
        trace=worked_trace(program),
    )


def _kshot_ops(instance: BenchmarkInstance):
    if instance.params.instruction_class == "andor":
        return (Op.AND, Op.OR, Op.MOV)
    if instance.params.instruction_class == "mov":
        return (Op.MOV,)
    return (Op.ADD, Op.SUB, Op.MOV)


# -- main entry ------------------------------------------------------------------


def _code(instance: BenchmarkInstance) -> str:
    if instance.family == "good_exchange" and instance.params.mode == "naturalistic":
        return instance.narrative
    if instance.family == "redundant":
        m = len(instance.sources)
        head = f"# The following {m} programs are equivalent and yield the same result."
        return head + "\n\n" + "\n\n".join(instance.sources)
    return instance.sources[0]


def _intro(instance: BenchmarkInstance, verb: str) -> str:
    if instance.family == "good_exchange" and instance.params.mode == "naturalistic":
        return "Read the following story about two people exchanging goods."
    if instance.family == "redundant":
        return f"{verb} these Python functions."
    if instance.family in FUNCTION_FAMILIES:
        return f"{verb} this Python function."
    return f"{verb} this Python code."


def _base_question(instance: BenchmarkInstance, verb: str) -> str:
    tail = "Reply just with the solution."
    if instance.family == "good_exchange" and instance.params.mode == "naturalistic":
        return f"Read the following story and report {instance.subject}. {tail}"
    if instance.family in FUNCTION_FAMILIES:
        noun = "functions" if instance.family == "redundant" else "function"
        return (
            f"{verb} this Python {noun} and report the numerical result "
            f"for the input value {instance.input_text}. {tail}"
        )
    return f"{verb} this Python code and report {instance.subject}. {tail}"


def _single(instance: BenchmarkInstance, technique: Technique, verb: str) -> PromptBundle:
    code = _code(instance)
    kind = technique.kind
    if kind == "base":
        text = fill(template("base"), question=_base_question(instance, verb), code=code)
        contract = "bare_value"
    elif kind == "cosm":
        text = fill(template("cosm"), code=code, input=instance.input_text)
        contract = "result_tags"
    else:
        text = fill(
            template("cot"), intro=_intro(instance, verb), code=code, question=instance.question
        )
        contract = "result_tags"
        if kind == "kshot":
            if instance.family not in KSHOT_FAMILIES:
                raise UnsupportedCombination(f"k-shot is not defined for {instance.family}")
            if technique.kshot_mode == "instructional":
                prefix = instructional_preamble()
            else:
                ops = _kshot_ops(instance)
                blocks = [
                    example_block(example_program(derive_seed(instance.id, "kshot", i), ops))
                    for i in range(technique.kshot_k)
                ]
                prefix = "\n".join(blocks)
            text = prefix + "\n" + text
    return PromptBundle(
        user_text=text,
        answer_contract=contract,
        technique=technique.label,
        instance_id=instance.id,
        family=instance.family,
        phrasing=verb,
        reference=instance.ground_truth,
    )


def build(
    instance: BenchmarkInstance, technique: Technique, verb: Optional[str] = None
) -> list[PromptBundle]:
    """Prompt bundles for one instance; self-consistency yields one per vote."""
    verb = verb or DEFAULT_VERB[instance.family]
    if technique.kind != "sc":
        return [_single(instance, technique, verb)]
    inner = _single(instance, technique.inner, verb)
    return [
        PromptBundle(
            user_text=inner.user_text,
            answer_contract=inner.answer_contract,
            technique=technique.label,
            instance_id=inner.instance_id,
            family=inner.family,
            sample_index=i,
            sampling={"temperature": SC_TEMPERATURE},
            phrasing=verb,
            reference=inner.reference,
        )
        for i in range(technique.votes)
    ]
