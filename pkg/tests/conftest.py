import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

import pytest

from proxyscan.analysis import analyze_contract
from proxyscan.frontend import parse_source
from proxyscan.model import resolve_compilation_unit

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURES = os.path.join(ROOT, "fixtures")
CORPUS = os.path.join(FIXTURES, "corpus")
LAYOUT = os.path.join(FIXTURES, "layout")
SELECTORS = os.path.join(FIXTURES, "selectors")
TRUTH = os.path.join(FIXTURES, "truth.csv")


def fixture_text(*parts):
    with open(os.path.join(FIXTURES, *parts), encoding="utf-8") as fh:
        return fh.read()


def build_unit(sources, compiler_version=None):
    """Resolve ``{file_id: text}`` (or a single text) into a compilation unit."""
    if isinstance(sources, str):
        sources = {"test.sol": sources}
    units = [parse_source(text, fid, compiler_version=compiler_version) for fid, text in sources.items()]
    return resolve_compilation_unit(units)


def analyze(source, name, compiler_version=None):
    unit = build_unit(source, compiler_version)
    return analyze_contract(unit.contract(name), unit)


@pytest.fixture
def unit_of():
    return build_unit


VERIFIED = "0x1111111111111111111111111111111111111111"
UNVERIFIED = "0x0000000000000000000000000000000000000000"


def _envelope(source, name="AdminUpgradeableProxy", version="v0.4.24+commit.e67f0147"):
    return {"status": "1", "message": "OK",
            "result": [{"SourceCode": source, "ContractName": name, "CompilerVersion": version}]}


class Explorer:
    """Scripted explorer: per-address queue of (status, headers, body) responses."""

    def __init__(self):
        self.scripts = {}
        self.requests = []
        handler = self._handler()
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)
        self.thread.start()

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/api"

    def script(self, address, *responses):
        self.scripts.setdefault(address, []).extend(responses)

    def _handler(self):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_GET(self):
                query = {k: v[0] for k, v in parse_qs(urlparse(self.path).query).items()}
                outer.requests.append(query)
                queue = outer.scripts.get(query.get("address"), [])
                status, headers, body = queue.pop(0) if len(queue) > 1 else (queue[0] if queue else
                                                                              (200, {}, _envelope("")))
                payload = body if isinstance(body, bytes) else json.dumps(body).encode()
                self.send_response(status)
                for k, v in headers.items():
                    self.send_header(k, v)
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args):
                pass

        return Handler

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def explorer():
    e = Explorer()
    yield e
    e.close()
