"""Chat-completion access: a real HTTP client and a scriptable mock.

Both gateways expose complete(system_prompt, user_message) -> str and keep
a call log, so callers can inspect exactly what went out. The mock consumes
a finite script and refuses to reuse replies, which keeps every offline
test deterministic.
"""
from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass

import requests

from .corpus import ConceptEntry, tokenize
from .errors import (
    ArgumentError,
    ConfigurationError,
    GatewayError,
    LlmParseError,
    ScriptExhaustedError,
)
from .irt import ConceptSet
from .prompts import fill_slots, load_template, strip_list_marker

logger = logging.getLogger(__name__)

MAX_GUIDING_QUESTIONS = 5


@dataclass(frozen=True)
class GatewayConfig:
    endpoint_url: str = ""
    model_name: str = ""
    api_key_env: str = "GUIDEQ_API_KEY"
    timeout: float = 30.0
    max_retries: int = 2
    temperature: float = 0.0

    def __post_init__(self):
        if self.timeout <= 0:
            raise ArgumentError("timeout must be > 0")
        if self.max_retries < 0:
            raise ArgumentError("max_retries must be >= 0")
        if self.temperature < 0:
            raise ArgumentError("temperature must be >= 0")


@dataclass(frozen=True)
class GatewayCall:
    """One completed request/reply pair, for transcripts and assertions."""

    system_prompt: str
    user_message: str
    reply: str
    attempts: int

    @property
    def prompt_hash(self) -> str:
        digest = hashlib.sha256()
        digest.update(self.system_prompt.encode("utf-8"))
        digest.update(b"\x00")
        digest.update(self.user_message.encode("utf-8"))
        return digest.hexdigest()


def _default_transport(url: str, headers: dict, body: dict, timeout: float) -> str:
    """POST the chat-completion request and pull out the assistant text."""
    response = requests.post(url, json=body, headers=headers, timeout=timeout)
    if response.status_code in (401, 403):
        raise ConfigurationError(
            f"authentication failed against {url} (HTTP {response.status_code})"
        )
    response.raise_for_status()
    return response.json()["choices"][0]["message"]["content"]


class HttpGateway:
    """OpenAI-compatible chat-completion client with retry/backoff.

    Transient transport failures are retried up to cfg.max_retries times
    with exponential backoff; auth failures abort immediately and never
    include the key in any message.
    """

    offline = False

    def __init__(self, cfg: GatewayConfig, transport=None, sleeper=time.sleep,
                 backoff_base: float = 0.5):
        if not cfg.endpoint_url:
            raise ConfigurationError("endpoint_url is required for a live gateway")
        self.cfg = cfg
        self._transport = transport or _default_transport
        self._sleeper = sleeper
        self._backoff_base = backoff_base
        self.calls: list[GatewayCall] = []
        self._lock = threading.Lock()

    def complete(self, system_prompt: str, user_message: str) -> str:
        url = self.cfg.endpoint_url.rstrip("/") + "/chat/completions"
        api_key = os.environ.get(self.cfg.api_key_env, "")
        headers = {"Content-Type": "application/json"}
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": self.cfg.model_name,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_message},
            ],
            "temperature": self.cfg.temperature,
        }
        last_error = None
        for attempt in range(1, self.cfg.max_retries + 2):
            try:
                reply = self._transport(url, headers, body, self.cfg.timeout)
            except ConfigurationError:
                raise
            except Exception as exc:
                last_error = exc
                if attempt <= self.cfg.max_retries:
                    self._sleeper(self._backoff_base * 2 ** (attempt - 1))
                continue
            with self._lock:
                self.calls.append(GatewayCall(system_prompt, user_message, reply, attempt))
            return reply
        raise GatewayError(
            f"chat completion failed after {self.cfg.max_retries + 1} attempts: {last_error}"
        )


@dataclass(frozen=True)
class MockReply:
    reply: str
    match: str | None = None  # substring the outbound prompt must contain; None = next in order


@dataclass(frozen=True)
class MockScript:
    """Finite, ordered reply script. Exhaustion is an error, never reuse."""

    entries: tuple[MockReply, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))

    @classmethod
    def of(cls, *replies: str) -> "MockScript":
        return cls(tuple(MockReply(r) for r in replies))

    @classmethod
    def from_pairs(cls, pairs) -> "MockScript":
        """pairs of (matcher_or_None, reply)."""
        return cls(tuple(MockReply(reply=r, match=m) for m, r in pairs))


class MockGateway:
    """Deterministic scripted stand-in for the chat endpoint."""

    offline = True

    def __init__(self, script: MockScript):
        self._entries = list(script.entries)
        self._consumed = [False] * len(self._entries)
        self.calls: list[GatewayCall] = []
        self._lock = threading.Lock()

    def complete(self, system_prompt: str, user_message: str) -> str:
        combined = system_prompt + "\n" + user_message
        with self._lock:
            for idx, entry in enumerate(self._entries):
                if self._consumed[idx]:
                    continue
                if entry.match is None or entry.match in combined:
                    self._consumed[idx] = True
                    self.calls.append(GatewayCall(system_prompt, user_message, entry.reply, 1))
                    return entry.reply
        raise ScriptExhaustedError(
            f"mock script has no reply left for request hash "
            f"{hashlib.sha256(combined.encode('utf-8')).hexdigest()[:12]}"
        )

    @property
    def remaining(self) -> int:
        with self._lock:
            return self._consumed.count(False)


def _plural_insensitive(token: str) -> str:
    if len(token) > 3 and token.endswith("s"):
        return token[:-1]
    return token


def _distinctive_lexicon_tokens(lexicon: list[ConceptEntry]) -> dict[str, set[str]]:
    """Per concept, sentence tokens that no other concept's sentences use."""
    token_owners: dict[str, set[str]] = {}
    for entry in lexicon:
        for sentence in entry.sentences:
            for tok in tokenize(sentence):
                if len(tok) < 4:
                    continue
                token_owners.setdefault(_plural_insensitive(tok), set()).add(entry.concept_id)
    out: dict[str, set[str]] = {e.concept_id: set() for e in lexicon}
    for tok, owners in token_owners.items():
        if len(owners) == 1:
            out[next(iter(owners))].add(tok)
    return out


def extract_concepts(response_text: str, concept_set: ConceptSet,
                     gateway=None, lexicon: list[ConceptEntry] | None = None) -> list[str]:
    """Concept ids the response engages with; always a subset of concept_set.

    With a live gateway the model lists touched concepts, mapped back by
    exact (case-insensitive) name. Offline (no gateway, or a mock), matching
    is lexical: every token of a concept's name must appear in the text
    (plural-insensitive), or a token distinctive to that concept's lexicon
    sentences must appear.
    """
    if concept_set.k < 1:
        raise ArgumentError("concept_set must be nonempty")

    if gateway is not None and not gateway.offline:
        prompt = fill_slots(load_template("extract_concepts"), {
            "concept_names": "\n".join(concept_set.names),
            "passage": response_text,
        })
        reply = gateway.complete(prompt, "List the engaged concepts.")
        by_name = {c.name.lower(): c.concept_id for c in concept_set.concepts}
        found = []
        for line in reply.splitlines():
            name = strip_list_marker(line).lower()
            if not name or name == "none":
                continue
            if name in by_name:
                if by_name[name] not in found:
                    found.append(by_name[name])
            else:
                logger.warning("gateway named unknown concept %r; dropped", line.strip())
        return [cid for cid in concept_set.ids if cid in found]

    text_tokens = {_plural_insensitive(t) for t in tokenize(response_text)}
    distinctive = _distinctive_lexicon_tokens(list(lexicon)) if lexicon else {}
    found = []
    for concept in concept_set.concepts:
        name_tokens = [_plural_insensitive(t) for t in tokenize(concept.name)]
        if name_tokens and all(t in text_tokens for t in name_tokens):
            found.append(concept.concept_id)
            continue
        if distinctive.get(concept.concept_id, set()) & text_tokens:
            found.append(concept.concept_id)
    return found


def parse_guiding_questions(reply: str) -> list[str]:
    """Split a numbered or bulleted reply into up to 5 clean question strings.

    Wrapped lines are joined onto the question they continue. Prose with no
    list markers is a parse error that keeps the raw reply.
    """
    questions: list[str] = []
    for line in reply.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        without_marker = strip_list_marker(line)
        if without_marker != stripped:
            if without_marker:
                questions.append(without_marker)
        elif questions:
            questions[-1] = questions[-1] + " " + stripped
    if not questions:
        raise LlmParseError("no guiding questions found in reply", raw=reply)
    return questions[:MAX_GUIDING_QUESTIONS]
