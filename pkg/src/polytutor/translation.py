"""Automatic text translation behind a pluggable backend contract.

Three backends ship with the service: an identity backend (passes text
through, useful for single-language deployments), a deterministic glossary
backend (term substitution from a TSV file, hermetic for tests), and a
remote HTTP client with retry and timeout handling.  A bounded LRU cache
wraps any backend transparently.

Environment configuration:
    TRANSLATOR_BACKEND   identity | glossary | remote  (default identity)
    GLOSSARY_PATH        TSV glossary for the glossary backend
    TRANSLATOR_ENDPOINT  URL for the remote backend
    TRANSLATOR_API_KEY   bearer credential for the remote backend

Glossary file format: UTF-8, one record per line, four tab-separated
fields: source_lang, target_lang, term, translation.  Terms may contain
spaces (multiword terms match longest-first).  Lines starting with '#'
are comments.

Remote wire contract: POST <endpoint> with JSON
``{"source": ..., "target": ..., "text": ...}`` and an
``Authorization: Bearer <key>`` header.  Success is HTTP 200 with
``{"text": <translated>}``; HTTP 400 with ``{"error": "unsupported_pair"}``
maps to UnsupportedPair; 401/403 map to AuthFailure; timeouts and 5xx are
retried twice with exponential backoff, then raise BackendUnavailable.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from collections import OrderedDict
from dataclasses import dataclass
from typing import Protocol

import httpx

from .errors import TutorError

LANGUAGE_CODE_RE = re.compile(r"^[a-z]{2,3}$")

DEFAULT_MAX_TEXT_CHARS = 10_000
DEFAULT_CACHE_ENTRIES = 10_000
DEFAULT_TIMEOUT_SECONDS = 5.0
DEFAULT_RETRIES = 2


class UnsupportedPair(TutorError):
    code = "unsupported_pair"

    def __init__(self, source: str, target: str):
        super().__init__(f"no translation route {source} -> {target}", source=source, target=target)
        self.source = source
        self.target = target


class BackendUnavailable(TutorError):
    code = "backend_unavailable"
    retryable = True


class AuthFailure(TutorError):
    code = "auth_failure"


class TextTooLong(TutorError):
    code = "text_too_long"


class InvalidLanguage(TutorError):
    code = "invalid_language"


def is_language_code(code: str) -> bool:
    """True for a lowercase two- or three-letter primary subtag."""
    return bool(LANGUAGE_CODE_RE.match(code))


def pair_count(languages: set[str] | frozenset[str]) -> int:
    """Number of directed translation pairs over a language set: n * (n - 1)."""
    n = len(languages)
    return n * (n - 1)


@dataclass(frozen=True)
class TranslationRequest:
    source: str
    target: str
    text: str


class TranslatorBackend(Protocol):
    """Contract every translation backend satisfies structurally."""

    def supports(self, source: str, target: str) -> bool: ...

    def translate(self, request: TranslationRequest) -> str: ...


def translate(
    backend: TranslatorBackend,
    request: TranslationRequest,
    *,
    max_chars: int = DEFAULT_MAX_TEXT_CHARS,
) -> str:
    """Translate one request through a backend.

    Same-language requests return the text unchanged without consulting the
    backend at all.

    Raises:
        InvalidLanguage, TextTooLong, UnsupportedPair, and whatever the
        backend raises (BackendUnavailable, AuthFailure).
    """
    if not is_language_code(request.source):
        raise InvalidLanguage(f"bad source language {request.source!r}")
    if not is_language_code(request.target):
        raise InvalidLanguage(f"bad target language {request.target!r}")
    if len(request.text) > max_chars:
        raise TextTooLong(f"text exceeds {max_chars} characters")
    if request.source == request.target:
        return request.text
    if not backend.supports(request.source, request.target):
        raise UnsupportedPair(request.source, request.target)
    return backend.translate(request)


class TranslationCache:
    """Bounded LRU cache keyed by (source, target, content hash).

    Safe for concurrent readers and writers; values for a key are
    deterministic, so a racing double-insert is benign.
    """

    def __init__(self, max_entries: int = DEFAULT_CACHE_ENTRIES):
        self.max_entries = max_entries
        self._entries: OrderedDict[tuple[str, str, str], str] = OrderedDict()
        self._lock = threading.Lock()

    @staticmethod
    def key(request: TranslationRequest) -> tuple[str, str, str]:
        digest = hashlib.sha256(request.text.encode("utf-8")).hexdigest()
        return (request.source, request.target, digest)

    def get(self, request: TranslationRequest) -> str | None:
        key = self.key(request)
        with self._lock:
            if key not in self._entries:
                return None
            self._entries.move_to_end(key)
            return self._entries[key]

    def put(self, request: TranslationRequest, value: str) -> None:
        key = self.key(request)
        with self._lock:
            self._entries[key] = value
            self._entries.move_to_end(key)
            while len(self._entries) > self.max_entries:
                self._entries.popitem(last=False)

    def __len__(self) -> int:
        return len(self._entries)


def cached_translate(
    cache: TranslationCache,
    backend: TranslatorBackend,
    request: TranslationRequest,
    *,
    max_chars: int = DEFAULT_MAX_TEXT_CHARS,
) -> str:
    """translate() with a read-through cache; observationally identical to
    the uncached path for every request stream."""
    cached = cache.get(request)
    if cached is not None:
        return cached
    result = translate(backend, request, max_chars=max_chars)
    cache.put(request, result)
    return result


class IdentityBackend:
    """Returns text unchanged for every pair; the no-op deployment choice."""

    def supports(self, source: str, target: str) -> bool:
        return True

    def translate(self, request: TranslationRequest) -> str:
        return request.text


class GlossaryBackend:
    """Deterministic term-substitution translator.

    Tokenizes on whitespace and replaces exact term matches, trying the
    longest multiword window first; tokens without a glossary entry pass
    through unchanged.  Output tokens are joined with single spaces.
    """

    def __init__(
        self,
        entries: dict[tuple[str, str, str], str],
        pairs: set[tuple[str, str]] | None = None,
    ):
        self._terms: dict[tuple[str, str], dict[str, str]] = {}
        for (source, target, term), translated in entries.items():
            self._terms.setdefault((source, target), {})[term] = translated
        for pair in pairs or set():
            self._terms.setdefault(pair, {})
        self._max_words = {
            pair: max((term.count(" ") + 1 for term in terms), default=1)
            for pair, terms in self._terms.items()
        }

    @property
    def capability(self) -> set[tuple[str, str]]:
        return set(self._terms)

    def supports(self, source: str, target: str) -> bool:
        return (source, target) in self._terms

    def translate(self, request: TranslationRequest) -> str:
        pair = (request.source, request.target)
        if pair not in self._terms:
            raise UnsupportedPair(request.source, request.target)
        terms = self._terms[pair]
        max_words = self._max_words[pair]
        tokens = request.text.split()
        out: list[str] = []
        i = 0
        while i < len(tokens):
            for width in range(min(max_words, len(tokens) - i), 0, -1):
                candidate = " ".join(tokens[i : i + width])
                if candidate in terms:
                    out.append(terms[candidate])
                    i += width
                    break
            else:
                out.append(tokens[i])
                i += 1
        return " ".join(out)


def glossary_backend(entries: dict[tuple[str, str, str], str]) -> GlossaryBackend:
    return GlossaryBackend(entries)


def load_glossary(path: str) -> dict[tuple[str, str, str], str]:
    """Parse a TSV glossary file into backend entries."""
    entries: dict[tuple[str, str, str], str] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 4:
                raise TutorError(f"{path}:{line_no}: expected 4 tab-separated fields")
            source, target, term, translated = fields
            if not is_language_code(source) or not is_language_code(target):
                raise InvalidLanguage(f"{path}:{line_no}: bad language code")
            entries[(source, target, term)] = translated
    return entries


class RemoteBackend:
    """HTTP client for an external translation service.

    Transient failures (timeouts, connection errors, 5xx) are retried with
    exponential backoff before surfacing BackendUnavailable.
    """

    def __init__(
        self,
        endpoint: str,
        api_key: str = "",
        *,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        retries: int = DEFAULT_RETRIES,
        backoff: float = 0.25,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def supports(self, source: str, target: str) -> bool:
        # The remote service owns its own pair matrix; unsupported pairs
        # come back as typed errors from translate().
        return True

    def translate(self, request: TranslationRequest) -> str:
        payload = {"source": request.source, "target": request.target, "text": request.text}
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * (2 ** (attempt - 1)))
            try:
                response = self._client.post(self.endpoint, json=payload, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                continue
            if response.status_code == 200:
                return str(response.json()["text"])
            if response.status_code in (401, 403):
                raise AuthFailure("translation service rejected the credential")
            if response.status_code == 400:
                body = response.json()
                if body.get("error") == "unsupported_pair":
                    raise UnsupportedPair(request.source, request.target)
                raise TutorError(f"translation service rejected the request: {body}")
            last_error = TutorError(f"translation service returned {response.status_code}")
        raise BackendUnavailable(f"translation service unreachable: {last_error}")


def remote_backend(endpoint: str, api_key: str = "", **kwargs) -> RemoteBackend:
    return RemoteBackend(endpoint, api_key, **kwargs)


def backend_from_env(environ: dict[str, str] | None = None) -> TranslatorBackend:
    """Build the configured backend from environment variables."""
    env = os.environ if environ is None else environ
    kind = env.get("TRANSLATOR_BACKEND", "identity")
    if kind == "identity":
        return IdentityBackend()
    if kind == "glossary":
        path = env.get("GLOSSARY_PATH")
        if not path:
            raise TutorError("TRANSLATOR_BACKEND=glossary requires GLOSSARY_PATH")
        return GlossaryBackend(load_glossary(path))
    if kind == "remote":
        endpoint = env.get("TRANSLATOR_ENDPOINT")
        if not endpoint:
            raise TutorError("TRANSLATOR_BACKEND=remote requires TRANSLATOR_ENDPOINT")
        return RemoteBackend(endpoint, env.get("TRANSLATOR_API_KEY", ""))
    raise TutorError(f"unknown TRANSLATOR_BACKEND {kind!r}")
