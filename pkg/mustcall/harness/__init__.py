# Golden corpus runner, path-enumeration oracle and random program generator
from mustcall.harness.corpus import CaseOutcome, CorpusCase, CorpusSummary, run_cases, run_corpus
from mustcall.harness.generator import generate_random_programs
from mustcall.harness.oracle import OracleVerdict, path_oracle

__all__ = [
    "CaseOutcome",
    "CorpusCase",
    "CorpusSummary",
    "OracleVerdict",
    "generate_random_programs",
    "path_oracle",
    "run_cases",
    "run_corpus",
]
