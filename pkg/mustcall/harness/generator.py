"""
Seeded random MiniOO programs for differential testing.

Each program is one class with a `run` method built from Socket locals,
opaque boolean parameters, `work()` calls, branches, loops, try/catch, null
guards and Dispose calls. Expected reports come from the path oracle.
"""

import logging
import random
from typing import List, Optional

from mustcall.config import Config
from mustcall.constants import Constants
from mustcall.harness.corpus import CorpusCase
from mustcall.harness.oracle import oracle_reports

logger = logging.getLogger(__name__)

CONDITIONS = ("c0", "c1")


class _ProgramBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.sockets = [f"s{index}" for index in range(rng.randint(1, Constants.GENERATOR_MAX_SOCKETS))]
        self.budget = rng.randint(1, Constants.GENERATOR_MAX_STATEMENTS)
        self.lines: List[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("    " * (depth + 2) + text)

    def block(self, depth: int, limit: int) -> None:
        count = 0
        while self.budget > 0 and count < limit:
            self.statement(depth)
            count += 1

    def statement(self, depth: int) -> None:
        self.budget -= 1
        rng = self.rng
        socket = rng.choice(self.sockets)
        choices = ["alloc", "alloc", "dispose", "dispose", "work", "guard"]
        if depth < Constants.GENERATOR_MAX_DEPTH:
            choices += ["if", "while", "try", "return_if_null"]
        kind = rng.choice(choices)

        if kind == "alloc":
            self.emit(depth, f"{socket} = new Socket();")
        elif kind == "dispose":
            self.emit(depth, f"{socket}.Dispose();")
        elif kind == "work":
            self.emit(depth, "work();")
        elif kind == "guard":
            self.emit(depth, f"if ({socket} != null) {{")
            self.emit(depth + 1, f"{socket}.Dispose();")
            self.emit(depth, "}")
        elif kind == "return_if_null":
            self.emit(depth, f"if ({socket} == null) {{")
            self.emit(depth + 1, "return;")
            self.emit(depth, "}")
        elif kind == "if":
            self.emit(depth, f"if ({rng.choice(CONDITIONS)}) {{")
            self.block(depth + 1, rng.randint(1, 3))
            if rng.random() < 0.5:
                self.emit(depth, "} else {")
                self.block(depth + 1, rng.randint(1, 3))
            self.emit(depth, "}")
        elif kind == "while":
            self.emit(depth, f"while ({rng.choice(CONDITIONS)}) {{")
            self.block(depth + 1, rng.randint(1, 3))
            self.emit(depth, "}")
        else:
            self.emit(depth, "try {")
            self.block(depth + 1, rng.randint(1, 3))
            self.emit(depth, "} catch {")
            if rng.random() < 0.5:
                self.block(depth + 1, 1)
            self.emit(depth, "}")

    def program(self, class_name: str) -> str:
        self.block(0, Constants.GENERATOR_MAX_STATEMENTS)
        header = [
            f"class {class_name} {{",
            "    void work() { }",
            f"    void run({', '.join(f'bool {name}' for name in CONDITIONS)}) {{",
        ]
        declarations = [f"        Socket {socket} = null;" for socket in self.sockets]
        footer = ["    }", "}"]
        return "\n".join(header + declarations + self.lines + footer) + "\n"


def generate_program(rng: random.Random, class_name: str) -> str:
    return _ProgramBuilder(rng).program(class_name)


def generate_random_programs(seed: int, count: int, mode: str = "full") -> List[CorpusCase]:
    """Deterministic for a given seed; programs with an inapplicable oracle are redrawn."""
    rng = random.Random(seed)
    config = Config(mode)
    cases: List[CorpusCase] = []
    for index in range(count):
        name = f"gen_{seed}_{index}"
        case: Optional[CorpusCase] = None
        for _ in range(Constants.GENERATOR_MAX_REDRAWS):
            files = {f"{name}.moo": generate_program(rng, f"Gen{index}")}
            expected, applicable = oracle_reports(files, config)
            if applicable:
                case = CorpusCase(name=name, files=files, expected=expected, mode=mode)
                break
        if case is None:
            logger.warning("Could not draw an oracle-applicable program for %s", name)
            continue
        cases.append(case)
    logger.info("Generated %d random programs from seed %d", len(cases), seed)
    return cases
