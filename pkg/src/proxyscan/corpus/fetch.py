"""Client for explorer-compatible ``getsourcecode`` endpoints, with a disk cache."""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Optional

import requests

logger = logging.getLogger("proxyscan.corpus")

DEFAULT_ENDPOINT = "https://api.etherscan.io/api"
DEFAULT_API_KEY_ENV = "ETHERSCAN_API_KEY"
CACHE_SCHEMA_VERSION = 1

_ADDRESS_RE = re.compile(r"0x[0-9a-fA-F]{40}")


class FetchError(Exception):
    """Base class for fetch failures."""

    def __init__(self, address: str, message: str):
        super().__init__(f"{address}: {message}")
        self.address = address


class NotVerified(FetchError):
    """The explorer has no verified source for the address."""


class RateLimited(FetchError):
    """The explorer asked us to slow down."""

    def __init__(self, address: str, message: str, retry_after: Optional[float] = None):
        super().__init__(address, message)
        self.retry_after = retry_after


class TransportError(FetchError):
    """Network failure or unusable response."""


def normalize_address(address: str) -> str:
    """Lowercase ``address`` after checking its shape.

    :raises ValueError: if it is not 0x followed by 40 hex digits
    """
    text = address.strip()
    if not _ADDRESS_RE.fullmatch(text):
        raise ValueError(f"not an address: {address!r}")
    return text.lower()


@dataclass
class SourceBundle:
    address: str
    contract_name: str
    compiler_version: str
    files: list[tuple[str, str]] = field(default_factory=list)
    fetched_at: str = ""

    def __post_init__(self):
        self.address = normalize_address(self.address)
        if not self.files:
            raise ValueError("a verified bundle needs at least one file")

    def sources(self) -> dict[str, str]:
        return dict(self.files)

    def to_dict(self) -> dict:
        return {
            "schema_version": CACHE_SCHEMA_VERSION,
            "address": self.address,
            "contract_name": self.contract_name,
            "compiler_version": self.compiler_version,
            "files": [{"path": p, "content": c} for p, c in self.files],
            "fetched_at": self.fetched_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SourceBundle":
        return cls(
            address=data["address"],
            contract_name=data["contract_name"],
            compiler_version=data["compiler_version"],
            files=[(f["path"], f["content"]) for f in data["files"]],
            fetched_at=data.get("fetched_at", ""),
        )


class SourceCache:
    """One JSON file per address under ``directory``."""

    def __init__(self, directory: str):
        self.directory = directory

    def path(self, address: str) -> str:
        return os.path.join(self.directory, normalize_address(address) + ".json")

    def get(self, address: str) -> Optional[SourceBundle]:
        path = self.path(address)
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except FileNotFoundError:
            return None
        except (OSError, ValueError) as exc:
            logger.warning("ignoring unreadable cache entry %s: %s", path, exc)
            return None
        if data.get("schema_version") != CACHE_SCHEMA_VERSION:
            return None
        try:
            return SourceBundle.from_dict(data)
        except (KeyError, TypeError, ValueError):
            return None

    def put(self, bundle: SourceBundle) -> str:
        """Write atomically: temp file in the same directory, then rename."""
        os.makedirs(self.directory, exist_ok=True)
        path = self.path(bundle.address)
        fd, tmp = tempfile.mkstemp(dir=self.directory, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(bundle.to_dict(), fh, sort_keys=True, indent=2)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
        return path


def _unpack_source(raw: str, contract_name: str) -> list[tuple[str, str]]:
    """Split a ``SourceCode`` field into files.

    Multi-file submissions arrive as JSON, either standard-json input wrapped
    in an extra pair of braces or a bare ``{path: {content}}`` map.
    """
    text = raw.strip()
    if text.startswith("{{") and text.endswith("}}"):
        text = text[1:-1]
    if text.startswith("{"):
        try:
            data = json.loads(text)
        except ValueError:
            data = None
        if isinstance(data, dict):
            sources = data.get("sources", data)
            files = []
            for path, entry in sources.items():
                content = entry.get("content") if isinstance(entry, dict) else entry
                if isinstance(content, str):
                    files.append((path, content))
            if files:
                return sorted(files)
    return [(f"{contract_name or 'Contract'}.sol", raw)]


class ExplorerClient:
    """Sequential, rate-limited access to a ``getsourcecode`` endpoint.

    :param endpoint: API URL
    :param api_key: key; read from ``api_key_env`` when None
    :param cache: optional on-disk cache consulted before the network
    :param delay: minimum seconds between requests
    :param max_retries: retries after the first attempt
    """

    def __init__(self, endpoint: str = DEFAULT_ENDPOINT, api_key: Optional[str] = None, *,
                 api_key_env: str = DEFAULT_API_KEY_ENV, cache: Optional[SourceCache] = None,
                 delay: float = 0.25, max_retries: int = 3, timeout: float = 30.0,
                 session: Optional[requests.Session] = None,
                 sleep: Callable[[float], None] = time.sleep, clock: Callable[[], float] = time.monotonic):
        self.endpoint = endpoint
        self.api_key = api_key if api_key is not None else os.environ.get(api_key_env, "")
        self.cache = cache
        self.delay = delay
        self.max_retries = max_retries
        self.timeout = timeout
        self.session = session or requests.Session()
        self._sleep = sleep
        self._clock = clock
        self._lock = threading.Lock()
        self._last_request: Optional[float] = None

    def _throttle(self) -> None:
        if self._last_request is not None:
            wait = self.delay - (self._clock() - self._last_request)
            if wait > 0:
                self._sleep(wait)
        self._last_request = self._clock()

    def _request(self, address: str) -> dict:
        params = {"module": "contract", "action": "getsourcecode", "address": address}
        if self.api_key:
            params["apikey"] = self.api_key
        self._throttle()
        try:
            resp = self.session.get(self.endpoint, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransportError(address, str(exc)) from exc
        if resp.status_code == 429:
            raise RateLimited(address, "HTTP 429", _retry_after(resp.headers.get("Retry-After")))
        if resp.status_code >= 400:
            raise TransportError(address, f"HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise TransportError(address, "response is not JSON") from exc
        if not isinstance(payload, dict):
            raise TransportError(address, "unexpected JSON envelope")
        return payload

    def _parse(self, address: str, payload: dict) -> SourceBundle:
        result = payload.get("result")
        if str(payload.get("status")) != "1":
            message = result if isinstance(result, str) else str(payload.get("message", ""))
            if "rate limit" in message.lower():
                raise RateLimited(address, message)
            if "not verified" in message.lower():
                raise NotVerified(address, message)
            raise TransportError(address, message or "explorer returned an error")
        if not isinstance(result, list) or not result or not isinstance(result[0], dict):
            raise TransportError(address, "missing result entry")
        entry = result[0]
        source = entry.get("SourceCode") or ""
        if not source.strip():
            raise NotVerified(address, "source code not verified")
        name = entry.get("ContractName") or ""
        return SourceBundle(
            address=address,
            contract_name=name,
            compiler_version=entry.get("CompilerVersion") or "",
            files=_unpack_source(source, name),
            fetched_at=datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ"),
        )

    def fetch(self, address: str) -> SourceBundle:
        """Verified source for ``address``, from the cache when present.

        :raises NotVerified: explorer has no source
        :raises RateLimited: still throttled after all retries
        :raises TransportError: still failing after all retries
        """
        address = normalize_address(address)
        if self.cache is not None:
            cached = self.cache.get(address)
            if cached is not None:
                return cached
        with self._lock:
            attempt = 0
            while True:
                try:
                    bundle = self._parse(address, self._request(address))
                    break
                except (RateLimited, TransportError) as exc:
                    if attempt >= self.max_retries:
                        raise
                    backoff = self.delay * (2 ** attempt)
                    if isinstance(exc, RateLimited) and exc.retry_after is not None:
                        backoff = max(backoff, exc.retry_after)
                    logger.info("retrying %s in %.2fs: %s", address, backoff, exc)
                    self._sleep(backoff)
                    attempt += 1
        if self.cache is not None:
            self.cache.put(bundle)
        return bundle


def _retry_after(value: Optional[str]) -> Optional[float]:
    if value is None:
        return None
    try:
        return max(0.0, float(value))
    except ValueError:
        return None


def fetch_verified_source(address: str, endpoint: str = DEFAULT_ENDPOINT, api_key: Optional[str] = None, *,
                          cache_dir: Optional[str] = None, **kwargs) -> SourceBundle:
    """One-shot fetch.  See :class:`ExplorerClient` for the keyword arguments."""
    cache = SourceCache(cache_dir) if cache_dir is not None else None
    return ExplorerClient(endpoint, api_key, cache=cache, **kwargs).fetch(address)
