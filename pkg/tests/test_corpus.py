import json
import os
import shutil

import jsonschema
import pytest

from proxyscan import upgradeability
from proxyscan.corpus import (
    BatchConfig, ExplorerClient, LabelFileError, MissingLabel, NotVerified, RateLimited, SourceBundle,
    SourceCache, TransportError, baseline_name_heuristic, compare_detectors, fetch_verified_source,
    load_ground_truth, run_batch,
)
from proxyscan.corpus.fetch import CACHE_SCHEMA_VERSION

from conftest import CORPUS, FIXTURES, ROOT, TRUTH, UNVERIFIED, VERIFIED, _envelope, build_unit, fixture_text

SCHEMA_PATH = os.path.join(ROOT, "src", "proxyscan", "schema", "report.schema.json")
MULTI = "0x2222222222222222222222222222222222222222"


class Sleeps(list):
    def __call__(self, seconds):
        self.append(seconds)


def client(url, cache_dir=None, **kw):
    sleeps = Sleeps()
    kw.setdefault("delay", 0.01)
    c = ExplorerClient(url, "KEY", cache=SourceCache(cache_dir) if cache_dir else None, sleep=sleeps, **kw)
    return c, sleeps


def test_fetch_verified_and_cache(explorer, tmp_path):
    explorer.script(VERIFIED, (200, {}, _envelope(fixture_text("corpus", "AdminUpgradeableProxy.sol"))))
    c, _ = client(explorer.url, str(tmp_path))
    bundle = c.fetch(VERIFIED.upper().replace("0X", "0x"))
    assert bundle.address == VERIFIED and len(bundle.files) == 1
    assert explorer.requests[0] == {"module": "contract", "action": "getsourcecode", "address": VERIFIED,
                                    "apikey": "KEY"}
    cached = json.loads((tmp_path / f"{VERIFIED}.json").read_text())
    assert cached["schema_version"] == CACHE_SCHEMA_VERSION
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp")]
    again = c.fetch(VERIFIED)
    assert again == bundle and len(explorer.requests) == 1


def test_api_key_from_environment(explorer, monkeypatch):
    monkeypatch.setenv("MY_KEY", "secret")
    explorer.script(VERIFIED, (200, {}, _envelope("contract A {}")))
    ExplorerClient(explorer.url, api_key_env="MY_KEY", delay=0).fetch(VERIFIED)
    assert explorer.requests[0]["apikey"] == "secret"


@pytest.mark.parametrize("wrapped", [True, False])
def test_multi_file_payload(explorer, wrapped):
    std = {"language": "Solidity", "sources": {"b/B.sol": {"content": "contract B {}"},
                                               "a/A.sol": {"content": "contract A {}"}}}
    text = json.dumps(std)
    explorer.script(MULTI, (200, {}, _envelope("{" + text + "}" if wrapped else text, "B")))
    bundle = client(explorer.url)[0].fetch(MULTI)
    assert bundle.files == [("a/A.sol", "contract A {}"), ("b/B.sol", "contract B {}")]


def test_unverified(explorer):
    with pytest.raises(NotVerified):
        fetch_verified_source(UNVERIFIED, explorer.url, "KEY", delay=0, sleep=lambda s: None)


def test_429_then_success(explorer):
    explorer.script(VERIFIED, (429, {"Retry-After": "0.2"}, {"status": "0"}),
                    (200, {}, _envelope("contract A {}", "A")))
    c, sleeps = client(explorer.url)
    bundle = c.fetch(VERIFIED)
    assert bundle.contract_name == "A"
    assert len(explorer.requests) == 2
    assert max(sleeps) == pytest.approx(0.2)


def test_rate_limit_message_in_envelope(explorer):
    limited = {"status": "0", "message": "NOTOK", "result": "Max rate limit reached"}
    explorer.script(VERIFIED, (200, {}, limited))
    c, sleeps = client(explorer.url, max_retries=2)
    with pytest.raises(RateLimited):
        c.fetch(VERIFIED)
    assert len(explorer.requests) == 3


def test_transport_errors_bounded_with_backoff(explorer):
    explorer.script(VERIFIED, (500, {}, b"oops"))
    c, sleeps = client(explorer.url, delay=0.01)
    with pytest.raises(TransportError):
        c.fetch(VERIFIED)
    assert len(explorer.requests) == 4
    backoffs = [s for s in sleeps if s >= 0.01 - 1e-9]
    assert backoffs[-3:] == pytest.approx([0.01, 0.02, 0.04])


def test_invalid_json_is_transport_error(explorer):
    explorer.script(VERIFIED, (200, {}, b"<html>"))
    with pytest.raises(TransportError):
        client(explorer.url, max_retries=0)[0].fetch(VERIFIED)


def test_connection_refused_is_transport_error():
    c, _ = client("http://127.0.0.1:9/api", max_retries=1, timeout=2)
    with pytest.raises(TransportError):
        c.fetch(VERIFIED)


def test_bad_address():
    with pytest.raises(ValueError):
        ExplorerClient("http://127.0.0.1:9/api").fetch("0x1234")


def test_cache_schema_mismatch_ignored(tmp_path):
    cache = SourceCache(str(tmp_path))
    bundle = SourceBundle(VERIFIED, "A", "v0.8.0", [("A.sol", "contract A {}")], "t")
    cache.put(bundle)
    assert cache.get(VERIFIED) == bundle
    data = json.loads((tmp_path / f"{VERIFIED}.json").read_text())
    data["schema_version"] = CACHE_SCHEMA_VERSION + 1
    (tmp_path / f"{VERIFIED}.json").write_text(json.dumps(data))
    assert cache.get(VERIFIED) is None


def test_bundle_needs_files():
    with pytest.raises(ValueError):
        SourceBundle(VERIFIED, "A", "v0.8.0", [])


# ---------------------------------------------------------------------------
# Baseline


@pytest.mark.parametrize("path, name, flagged", [
    ("ProxyAdmin.sol", "ProxyAdmin", True),
    ("MinimalProxy.sol", "MinimalProxy", True),
    ("Forwarder.sol", "Forwarder", True),
    ("AdminUpgradeableProxy.sol", "AdminUpgradeableProxy", True),
    ("Dispatcher.sol", "Dispatcher", True),
    ("BeaconProxy.sol", "UpgradeableBeacon", False),
])
def test_baseline(path, name, flagged):
    unit = build_unit(fixture_text("corpus", path))
    assert baseline_name_heuristic(unit.contract(name)) is flagged


def test_baseline_token():
    unit = build_unit("contract Token { function transfer() public {} }")
    assert not baseline_name_heuristic(unit.contract("Token"))


def test_baseline_is_case_sensitive():
    unit = build_unit("contract proxyish {}")
    assert not baseline_name_heuristic(unit.contract("proxyish"))


# ---------------------------------------------------------------------------
# Batch


def test_batch_over_fixtures():
    report = run_batch([FIXTURES])
    assert report.totals()["contracts"] >= 20 and not report.error_records
    keys = [(r["source"], r["contract"]) for r in report.records]
    assert keys == sorted(keys) and len(set(keys)) == len(keys)
    with open(SCHEMA_PATH, encoding="utf-8") as fh:
        jsonschema.validate(report.to_dict(), json.load(fh))


def test_empty_directory(tmp_path):
    report = run_batch([str(tmp_path)])
    assert report.records == [] and report.totals()["contracts"] == 0


def test_broken_file_isolated(tmp_path):
    shutil.copytree(CORPUS, tmp_path / "c")
    (tmp_path / "c" / "Broken.sol").write_text("pragma solidity ^0.8.0;\ncontract Broken {\n  function f( {\n")
    clean = run_batch([CORPUS])
    report = run_batch([str(tmp_path / "c")])
    assert len(report.error_records) == 1 and report.error_records[0]["source"] == "Broken.sol"
    assert len(report.ok_records) == len(clean.records)
    assert report.to_json() == run_batch([str(tmp_path / "c")]).to_json()
    assert report.to_json() == run_batch([str(tmp_path / "c")], BatchConfig(jobs=2)).to_json()


def test_imports_within_directory(tmp_path):
    (tmp_path / "lib").mkdir()
    (tmp_path / "lib" / "Storage.sol").write_text("contract Storage { address internal impl; }")
    (tmp_path / "Proxy.sol").write_text("""import "./lib/Storage.sol";
contract P is Storage {
    function set(address a) public { impl = a; }
    function () external payable { impl.delegatecall(msg.data); }
}""")
    report = run_batch([str(tmp_path)])
    by = {(r["source"], r["contract"]): r for r in report.records}
    assert set(by) == {("Proxy.sol", "P"), ("lib/Storage.sol", "Storage")}
    assert by[("Proxy.sol", "P")]["verdict"]["reason"] == "SETTER_FOUND"


def test_missing_input_becomes_error_record(tmp_path):
    report = run_batch([str(tmp_path / "nope")])
    assert len(report.error_records) == 1


def test_cache_transparency(explorer, tmp_path):
    explorer.script(VERIFIED, (200, {}, _envelope(fixture_text("corpus", "AdminUpgradeableProxy.sol"))))
    warm, _ = client(explorer.url, str(tmp_path))
    first = run_batch([VERIFIED, UNVERIFIED], client=warm)
    offline, _ = client("http://127.0.0.1:9/api", str(tmp_path), max_retries=0, timeout=1)
    second = run_batch([VERIFIED], client=offline)
    assert [r for r in first.records if r["source"] == VERIFIED] == second.records
    assert run_batch([VERIFIED], client=offline).to_json() == second.to_json()
    errors = {r["source"]: r["error"] for r in first.error_records}
    assert errors[UNVERIFIED].startswith("NotVerified")
    assert second.records[0]["verdict"]["reason"] == "SETTER_FOUND"


# ---------------------------------------------------------------------------
# Comparison


def _record(name, baseline, upgradeable):
    return {"source": "x.sol", "contract": name, "status": "ok", "baseline_flagged": baseline,
            "verdict": {"is_upgradeable": upgradeable}}


def test_compare_spec_example():
    records = [_record(f"T{i}", True, True) for i in range(3)] + [_record(f"F{i}", True, False) for i in range(7)]
    truth = {("x.sol", f"T{i}"): "upgradeable" for i in range(3)}
    truth.update({("x.sol", f"F{i}"): "not_proxy" for i in range(7)})
    stats = compare_detectors({"records": records}, truth)
    assert (stats.baseline_flagged, stats.improved_flagged, stats.baseline_fp) == (10, 3, 7)
    assert stats.eliminated_fp_ratio == 1.0 and stats.missed_tp == 0 and not stats.zero_denominator


def test_compare_zero_denominator():
    stats = compare_detectors({"records": [_record("T", True, True)]}, {("x.sol", "T"): "upgradeable"})
    assert stats.baseline_fp == 0 and stats.eliminated_fp_ratio == 1.0 and stats.zero_denominator
    assert stats.to_dict()["baseline_fp_zero"] is True


def test_compare_partial_elimination():
    records = [_record("A", True, False), _record("B", True, True)]
    stats = compare_detectors({"records": records}, {("x.sol", "A"): "proxy_only", ("x.sol", "B"): "not_proxy"})
    assert stats.eliminated_fp_ratio == 0.5 and stats.improved_fp == 1


def test_compare_missing_label():
    with pytest.raises(MissingLabel):
        compare_detectors({"records": [_record("A", True, True)]}, {})


def test_compare_fixture_corpus():
    stats = compare_detectors(run_batch([FIXTURES]), load_ground_truth(TRUTH))
    assert stats.missed_tp == 0 and stats.eliminated_fp_ratio == 1.0 and stats.baseline_fp >= 7
    assert "70%" in stats.to_dict()["motivation"]


def test_removing_setter_search_misses_true_positives(monkeypatch):
    monkeypatch.setattr(upgradeability, "find_setters", lambda *a, **k: [])
    stats = compare_detectors(run_batch([FIXTURES]), load_ground_truth(TRUTH))
    assert stats.missed_tp >= 1


@pytest.mark.parametrize("text", ["a.sol,A\n", "a.sol,A,maybe\n", "a.sol,A,upgradeable\na.sol,A,not_proxy\n"])
def test_label_file_errors(tmp_path, text):
    p = tmp_path / "t.csv"
    p.write_text(text)
    with pytest.raises(LabelFileError):
        load_ground_truth(str(p))
