import json

import pytest

from fmlab.cli import EXIT_FAIL, EXIT_FUEL, EXIT_OK, EXIT_USAGE, load_corpus, main

CORPUS = load_corpus()


def corpus_file(tmp_path, name):
    entry = next(e for e in CORPUS if e.name == name)
    path = tmp_path / f"{name}.fm"
    path.write_text(entry.program.text, encoding="utf-8")
    return str(path)


def test_check_prints_the_type(capsys):
    assert main(["check", "-e", "seal {x = 10}"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "readonly {x: Nat}"


def test_check_reports_diagnostics(tmp_path, capsys):
    path = corpus_file(tmp_path, "bad1")
    assert main(["check", path]) == EXIT_FAIL
    err = capsys.readouterr().err
    assert err.startswith(f"{path}:") and "error: write-through-readonly" in err


def test_structured_diagnostics(capsys):
    assert main(["check", "--format", "structured", "-e", "(seal {x = 1}).x := 2"]) == EXIT_FAIL
    record = json.loads(capsys.readouterr().err)
    assert record["code"] == "write-through-readonly" and record["path"] == "<expr>"
    assert record["span"]["line"] == 1


def test_syntax_errors(capsys):
    assert main(["check", "-e", "fun(x Nat) x"]) == EXIT_FAIL
    assert "error:" in capsys.readouterr().err


@pytest.mark.parametrize("entry", CORPUS, ids=lambda e: e.name)
def test_corpus_expectations(entry, tmp_path, capsys):
    path = corpus_file(tmp_path, entry.name)
    status = main(["check", path])
    err = capsys.readouterr().err
    if entry.expected.accept:
        assert status == EXIT_OK, err
    else:
        assert status == EXIT_FAIL and f"error: {entry.expected.cause}:" in err
    if entry.expected.run is not None:
        status = main(["run", "--no-check", "--format", "structured", path])
        record = json.loads(capsys.readouterr().out)
        kind, _, cause = entry.expected.run.partition(" ")
        assert record["outcome"] == kind
        if cause:
            assert status == EXIT_FAIL and record["cause"] == cause
        else:
            assert status == EXIT_OK


def test_run_and_trace(capsys):
    assert main(["run", "-e", "{x = 10}.x := 5"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["10", "[0x0001: 5]"]
    assert main(["trace", "-e", "{x = 10}.x := 5"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines == [
        "⟨{x = 10}.x := 5, []⟩",
        "⟨{x : 0x0001}.x := 5, [0x0001: 10]⟩  (alloc)",
        "⟨10, [0x0001: 5]⟩  (write-field)",
    ]


def test_run_unchecked_gets_stuck(capsys):
    assert main(["run", "-e", "(seal {x = 10}).x := 5"]) == EXIT_FAIL
    assert main(["run", "--no-check", "-e", "(seal {x = 10}).x := 5"]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert out.startswith("stuck: write-through-seal after 1 steps")


def test_runtime_terms_need_opt_in(capsys):
    assert main(["run", "--no-check", "-e", "{x : 0x0001}"]) == EXIT_FAIL
    assert "location-literal" in capsys.readouterr().err
    assert main(["run", "--no-check", "--runtime", "-e", "seal (fun(x: Nat) x)"]) == EXIT_OK


def test_fuel(monkeypatch, capsys):
    assert main(["run", "--fuel", "1", "-e", "{x = 10}.x := 5"]) == EXIT_FUEL
    assert "out of fuel after 1 steps" in capsys.readouterr().out
    monkeypatch.setenv("FMLAB_FUEL", "1")
    assert main(["run", "-e", "{x = 10}.x := 5"]) == EXIT_FUEL
    monkeypatch.setenv("FMLAB_FUEL", "lots")
    assert main(["run", "-e", "1"]) == EXIT_USAGE
    assert "FMLAB_FUEL" in capsys.readouterr().err


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["check"]) == EXIT_USAGE
    assert main(["check", "/no/such/file.fm"]) == EXIT_USAGE
    assert main(["run", "--fuel", "-3", "-e", "1"]) == EXIT_USAGE
    assert main(["--help"]) == EXIT_OK
    capsys.readouterr()


def test_crest_diff_erase(capsys):
    assert main(["crest", "-e", "fun(z: readonly {y: {x: Nat}}) z.y"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == "seal (fun(z: readonly {y: {x: Nat}}) seal (seal z).y)"
    assert main(["diff", "-e", "(seal {y = {x = 10}}).y"]) == EXIT_OK
    assert "verdict: equivalent" in capsys.readouterr().out
    assert main(["erase", "--format", "structured", "-e", "seal {x = 10}"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["verdict"] == "equivalent"
    assert main(["diff", "-e", "(seal {x = 10}).x := 5"]) == EXIT_FAIL
    capsys.readouterr()


def test_fuzz_is_reproducible(capsys):
    args = ["fuzz", "--seed", "5", "--count", "8", "--depth", "3", "--workers", "1", "--format", "structured"]
    assert main(args) == EXIT_OK
    first = capsys.readouterr().out
    assert main(args) == EXIT_OK
    assert capsys.readouterr().out == first
    assert json.loads(first)["violations"] == 0


def test_load_corpus_from_directory(tmp_path):
    (tmp_path / "one.fm").write_text("# expect: accept\n1\n")
    assert [e.name for e in load_corpus(tmp_path)] == ["one"]
    (tmp_path / "two.fm").write_text("1\n")
    with pytest.raises(ValueError):
        load_corpus(tmp_path)
    with pytest.raises(FileNotFoundError):
        load_corpus(tmp_path / "missing")
