import json
import os
import shutil

import jsonschema
import pytest

from proxyscan.cli import main

from conftest import CORPUS, FIXTURES, LAYOUT, ROOT, SELECTORS, TRUTH, UNVERIFIED, VERIFIED, _envelope, fixture_text

SCHEMA_PATH = os.path.join(ROOT, "src", "proxyscan", "schema", "report.schema.json")
GOLDEN = os.path.join(ROOT, "tests", "golden", "corpus_report.json")
ADMIN_EXAMPLE = os.path.join(CORPUS, "AdminUpgradeableProxy.sol")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def schema():
    with open(SCHEMA_PATH, encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# Exit-code matrix


@pytest.mark.parametrize("argv, code", [
    (["analyze", ADMIN_EXAMPLE], 0),
    (["analyze", CORPUS, "--jobs", "2"], 0),
    (["analyze", os.path.join(FIXTURES, "nope.sol")], 2),
    (["analyze", ADMIN_EXAMPLE, "--compiler-version", "banana"], 2),
    (["analyze", ADMIN_EXAMPLE, "--jobs", "0"], 2),
    (["analyze"], 2),
    (["diff-storage", os.path.join(LAYOUT, "StorageV1.sol"), os.path.join(LAYOUT, "StorageV2Reordered.sol")], 1),
    (["diff-storage", os.path.join(LAYOUT, "StorageV1.sol"), os.path.join(LAYOUT, "StorageV2Appended.sol")], 0),
    (["diff-storage", os.path.join(LAYOUT, "StorageV1.sol"), os.path.join(LAYOUT, "StorageV1.sol")], 0),
    (["diff-storage", os.path.join(LAYOUT, "StorageV1.sol"), os.path.join(LAYOUT, "Box.sol"),
      "--new-contract", "Missing"], 2),
    (["selectors", os.path.join(SELECTORS, "Proxy.sol"), os.path.join(SELECTORS, "Impl.sol")], 1),
    (["selectors", os.path.join(SELECTORS, "Disjoint.sol"), os.path.join(SELECTORS, "Impl.sol"),
      "--proxy-contract", "DisjointProxy"], 0),
    (["corpus", "run", CORPUS, "--compare-baseline"], 2),
    (["corpus", "run", FIXTURES, "--labels", TRUTH, "--compare-baseline"], 0),
    (["corpus", "fetch"], 2),
    (["bogus"], 2),
])
def test_exit_codes(capsys, argv, code):
    assert run(capsys, *argv)[0] == code


def test_analyze_text_admin_example(capsys):
    code, out, _ = run(capsys, "analyze", ADMIN_EXAMPLE)
    assert code == 0
    assert "upgradeable: yes (SETTER_FOUND; setter AdminUpgradeableProxy.upgrade (guarded))" in out


def test_analyze_file_error_exits_1(capsys, tmp_path):
    shutil.copy(ADMIN_EXAMPLE, tmp_path)
    (tmp_path / "Bad.sol").write_text("contract Bad {")
    code, out, _ = run(capsys, "analyze", str(tmp_path), "--format", "json")
    data = json.loads(out)
    assert code == 1 and data["totals"]["errors"] == 1 and data["totals"]["contracts"] >= 1


def test_unparseable_diff_input_is_usage_error(capsys, tmp_path):
    bad = tmp_path / "Bad.sol"
    bad.write_text("contract Bad {")
    assert run(capsys, "diff-storage", str(bad), str(bad))[0] == 2


def test_selectors_json(capsys):
    code, out, _ = run(capsys, "selectors", os.path.join(SELECTORS, "Proxy.sol"), os.path.join(SELECTORS, "Impl.sol"),
                       "--format", "json")
    clashes = json.loads(out)["clashes"]
    assert code == 1 and [c["selector"] for c in clashes if c["kind"] == "COLLISION"] == ["0x42966c68"]


def test_diff_storage_json(capsys):
    code, out, _ = run(capsys, "diff-storage", os.path.join(LAYOUT, "StorageV1.sol"),
                       os.path.join(LAYOUT, "StorageV2Reordered.sol"), "--format", "json")
    data = json.loads(out)
    assert code == 1 and data["status"] == "INCOMPATIBLE"
    assert {v["kind"] for v in data["violations"]} == {"REORDERED"}


def test_output_file(capsys, tmp_path):
    target = tmp_path / "r.json"
    code, out, _ = run(capsys, "analyze", ADMIN_EXAMPLE, "--format", "json", "--output", str(target))
    assert code == 0 and out == ""
    jsonschema.validate(json.loads(target.read_text()), schema())


# ---------------------------------------------------------------------------
# Corpus subcommands


def test_corpus_run_json_validates(capsys):
    code, out, _ = run(capsys, "corpus", "run", FIXTURES, "--format", "json", "--labels", TRUTH, "--jobs", "1")
    data = json.loads(out)
    jsonschema.validate(data, schema())
    assert code == 0 and data["comparison"]["eliminated_fp_ratio"] == 1.0 and data["comparison"]["missed_tp"] == 0


def test_corpus_run_text_notes_motivation(capsys):
    code, out, _ = run(capsys, "corpus", "run", FIXTURES, "--labels", TRUTH, "--compare-baseline", "--jobs", "1")
    assert code == 0 and "eliminated_fp_ratio 1.000" in out and "note: " in out and "70%" in out


def test_corpus_run_golden(capsys):
    code, out, _ = run(capsys, "corpus", "run", FIXTURES, "--format", "json", "--labels", TRUTH, "--jobs", "1")
    assert code == 0
    if os.environ.get("PROXYSCAN_REGEN_GOLDEN"):
        os.makedirs(os.path.dirname(GOLDEN), exist_ok=True)
        with open(GOLDEN, "w", encoding="utf-8") as fh:
            fh.write(out)
    with open(GOLDEN, encoding="utf-8") as fh:
        assert out == fh.read()


def test_corpus_run_missing_label_exits_1(capsys, tmp_path):
    labels = tmp_path / "t.csv"
    labels.write_text("corpus/ProxyAdmin.sol,ProxyAdmin,not_proxy\n")
    code, _, err = run(capsys, "corpus", "run", FIXTURES, "--labels", str(labels), "--jobs", "1")
    assert code == 1 and "no ground-truth label" in err


def test_corpus_compare_roundtrip(capsys, tmp_path):
    report = tmp_path / "r.json"
    assert run(capsys, "corpus", "run", FIXTURES, "--format", "json", "-o", str(report), "--jobs", "1")[0] == 0
    out_path = tmp_path / "c.json"
    code, out, _ = run(capsys, "corpus", "compare", str(report), "--labels", TRUTH, "--output", str(out_path),
                       "--format", "json")
    assert code == 0 and json.loads(out)["eliminated_fp_ratio"] == 1.0
    jsonschema.validate(json.loads(out_path.read_text()), schema())
    assert run(capsys, "corpus", "compare", str(tmp_path / "none.json"), "--labels", TRUTH)[0] == 2


def test_corpus_fetch_with_stub(capsys, explorer, tmp_path):
    explorer.script(VERIFIED, (200, {}, _envelope(fixture_text("corpus", "AdminUpgradeableProxy.sol"))))
    code, out, _ = run(capsys, "corpus", "fetch", "--address", VERIFIED, "--address", UNVERIFIED,
                       "--endpoint", explorer.url, "--cache-dir", str(tmp_path), "--delay", "0", "--format", "json")
    status = {r["address"]: r["status"] for r in json.loads(out)["fetched"]}
    assert code == 0 and status == {VERIFIED: "ok", UNVERIFIED: "NotVerified"}
    assert (tmp_path / f"{VERIFIED}.json").exists()

    code, out, _ = run(capsys, "corpus", "run", VERIFIED, UNVERIFIED, "--endpoint", explorer.url,
                       "--cache-dir", str(tmp_path), "--delay", "0", "--format", "json")
    data = json.loads(out)
    jsonschema.validate(data, schema())
    assert code == 0 and data["totals"]["errors"] == 1 and data["totals"]["upgradeable"] == 1
