"""
Tests for the command-line entry points and the checker pipeline.
"""

import json
from pathlib import Path

import pytest

from mustcall.cli import check_main, corpus_main
from mustcall.config import RunConfig
from mustcall.diagnostics.runner import analyze_sources, run
from mustcall.errors import MustCallError
from mustcall.harness.corpus import load_case, load_corpus

LEAKY = (
    "class Fig1 {\n"
    "    void Main(bool b) {\n"
    "        Socket a = new Socket();\n"
    "        if (b) { a.Close(); }\n"
    "    }\n"
    "}\n"
)
CLEAN = "class Ok {\n    void Main() {\n        Socket a = new Socket();\n        a.Close();\n    }\n}\n"
BROKEN = "class Bad {\n    void Main() {\n        missing();\n    }\n}\n"
CORPUS_DIR = Path(__file__).resolve().parents[2] / "corpus"


@pytest.fixture
def sources(tmp_path):
    """Write MiniOO files into a temporary directory and return their paths."""

    def _write(**files):
        paths = []
        for name, text in files.items():
            path = tmp_path / f"{name}.moo"
            path.write_text(text, encoding="utf-8")
            paths.append(str(path))
        return paths

    return _write


def test_clean_program_exits_zero(sources, capsys):
    """Test that a clean program prints only the footer."""
    assert check_main(sources(Ok=CLEAN)) == 0

    assert capsys.readouterr().out == "0 warnings\n"


def test_leak_exits_one(sources, capsys, monkeypatch):
    """Test that a leak is printed in the text format."""
    monkeypatch.setenv("MUSTCALL_NO_COLOR", "1")
    (path,) = sources(Fig1=LEAKY)

    assert check_main([path]) == 1

    out = capsys.readouterr().out
    assert f"{path}:3: warning[resource-leak/ObjectCreation]: " in out
    assert "\x1b[" not in out
    assert out.endswith("1 warning\n")


def test_json_output(sources, capsys):
    """Test that JSON output holds the reports and the run statistics."""
    (path,) = sources(Fig1=LEAKY)

    assert check_main([path, "--format", "json"]) == 1

    payload = json.loads(capsys.readouterr().out)
    (report,) = payload["reports"]
    assert (report["file"], report["line"], report["kind"]) == (path, 3, "ObjectCreation")
    assert payload["stats"]["sources"] == {"ObjectCreation": 1}
    assert payload["stats"]["files"] == 1


def test_naive_flag(sources, capsys):
    """Test that --naive and --mode naive select the baseline."""
    (path,) = sources(Fig1=LEAKY)

    assert check_main([path, "--naive"]) == 1
    assert check_main([path, "--mode", "naive"]) == 1
    assert "ObjectCreation" in capsys.readouterr().out


def test_errors_are_reported_but_not_fatal(sources, capsys):
    """Test that a resolution error is printed and other files are still checked."""
    paths = sources(Bad=BROKEN, Fig1=LEAKY)

    assert check_main(paths) == 1

    out = capsys.readouterr().out
    assert "error: " in out
    assert "unknown method missing on Bad" in out


def test_strict_mode_exits_two(sources, capsys):
    """Test that --strict turns any error into exit code 2 and skips the analysis."""
    paths = sources(Bad=BROKEN, Fig1=LEAKY)

    assert check_main(paths + ["--strict"]) == 2
    assert "warning[" not in capsys.readouterr().out


def test_missing_input_exits_two(tmp_path, capsys):
    """Test that a missing input file is a usage error."""
    assert check_main([str(tmp_path / "nope.moo")]) == 2

    assert "input file not found" in capsys.readouterr().err


def test_missing_overlay_exits_two(sources, tmp_path, capsys):
    """Test that a missing overlay file is a usage error."""
    paths = sources(Ok=CLEAN)

    assert check_main(paths + ["--specs", str(tmp_path / "none.rmspec")]) == 2
    assert "overlay file not found" in capsys.readouterr().err


def test_undecodable_input_exits_two(tmp_path, capsys):
    """Test that a source file that is not UTF-8 is a usage error with one message line."""
    path = tmp_path / "Bad.moo"
    path.write_bytes(b"class A {}\xff\xfe")

    assert check_main([str(path)]) == 2

    err = capsys.readouterr().err
    assert err == f"mustcall-check: input file is not valid UTF-8: {path} (byte 10)\n"


def test_undecodable_overlay_exits_two(sources, tmp_path, capsys):
    """Test that an overlay file that is not UTF-8 is a usage error."""
    paths = sources(Ok=CLEAN)
    overlay = tmp_path / "Ok.rmspec"
    overlay.write_bytes(b"\xff")

    assert check_main(paths + ["--specs", str(overlay)]) == 2
    assert "overlay file is not valid UTF-8" in capsys.readouterr().err


def test_bad_arguments_exit_two(capsys):
    """Test that argparse errors map to exit code 2."""
    assert check_main([]) == 2
    assert check_main(["A.moo", "--format", "xml"]) == 2


def test_overlay_file(sources, tmp_path, capsys):
    """Test that an overlay file attaches attributes by file, line and name."""
    text = (
        "class Example {\n"
        "    void close(Socket s) { s.Dispose(); }\n"
        "    void Main() {\n"
        "        Socket a = new Socket();\n"
        "        close(a);\n"
        "    }\n"
        "}\n"
    )
    paths = sources(Example=text)
    overlay = tmp_path / "Example.rmspec"
    overlay.write_text(
        'fileName="Example.moo" and lineNo="2" and elementType="Parameter" '
        'and elementName="s" and annotation="Owning"\n',
        encoding="utf-8",
    )

    assert check_main(paths) == 1
    assert check_main(paths + ["--specs", str(overlay)]) == 0


def test_dumps_go_to_stderr(sources, capsys):
    """Test that CFG and alias dumps are written to stderr."""
    paths = sources(Ok=CLEAN)

    assert check_main(paths + ["--dump-cfg", "--dump-aliases"]) == 0

    captured = capsys.readouterr()
    assert 'digraph "Ok.Main" {' in captured.err
    assert "Ok.Main: " in captured.err
    assert captured.out == "0 warnings\n"


def test_run_requires_inputs():
    """Test that the pipeline refuses an empty input list."""
    with pytest.raises(MustCallError, match="no input files"):
        run(RunConfig(inputs=[]))


def test_analyze_sources_collects_parse_errors():
    """Test that a file that does not parse is skipped and its error kept."""
    result = analyze_sources({"Bad.moo": "class {", "Ok.moo": CLEAN})

    (error,) = result.errors
    assert str(error).startswith("Bad.moo:1:")
    assert result.reports == []
    assert result.statistics["methods"] == 1


def test_corpus_command(corpus_dir, capsys):
    """Test that mustcall-corpus passes on the golden corpus."""
    assert corpus_main([str(corpus_dir)]) == 0

    assert "cases passed" in capsys.readouterr().out


def test_corpus_command_with_generated_cases(corpus_dir, capsys):
    """Test that a seed adds generated differential cases."""
    assert corpus_main([str(corpus_dir), "--seed", "5", "--random-count", "20"]) == 0

    assert "20/20 generated cases agree with the oracle (seed 5)" in capsys.readouterr().out


def test_corpus_command_needs_a_directory(tmp_path, capsys):
    """Test that a missing corpus directory is a usage error."""
    assert corpus_main([str(tmp_path / "missing")]) == 2

    assert "not a directory" in capsys.readouterr().err


@pytest.mark.parametrize(
    "files, extra, expected",
    [
        ({"Ok": CLEAN}, [], 0),
        ({"Fig1": LEAKY}, [], 1),
        ({"Bad": BROKEN}, [], 0),
        ({"Ok": CLEAN}, ["--strict"], 0),
        ({"Fig1": LEAKY}, ["--strict"], 1),
        ({"Bad": BROKEN}, ["--strict"], 2),
        ({"Bad": BROKEN, "Fig1": LEAKY}, ["--strict"], 2),
    ],
)
def test_exit_codes_for_clean_leaking_and_broken_runs(sources, files, extra, expected):
    """Test the exit code for every combination of clean, leaking and broken input."""
    assert check_main(sources(**files) + extra) == expected


def case_argv(case_dir):
    case = load_case(case_dir)
    argv = [str(case_dir / name) for name in case.files] + ["--mode", case.mode]
    overlays = sorted(case_dir.rglob("*.rmspec"))
    if overlays:
        argv += ["--specs", str(overlays[0])]
    return case, argv


@pytest.mark.parametrize("case_dir", load_corpus(CORPUS_DIR), ids=lambda path: path.name)
def test_exit_code_matches_corpus_expectation(case_dir):
    """Test that the check command exits 1 exactly for corpus cases that expect reports."""
    case, argv = case_argv(case_dir)

    assert check_main(argv) == (1 if case.expected else 0)


@pytest.mark.parametrize("name", ["overlay_simple_eg", "lucene", "nested_using"])
def test_json_output_is_byte_identical_across_runs(corpus_dir, capsys, name):
    """Test that two JSON runs over the same input print the same bytes."""
    _, argv = case_argv(corpus_dir / name)

    outputs = []
    for _ in range(2):
        assert check_main(argv + ["--format", "json"]) == 1
        outputs.append(capsys.readouterr().out.encode("utf-8"))

    assert outputs[0] == outputs[1]
    assert json.loads(outputs[0])["version"] == 1
