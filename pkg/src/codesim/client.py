"""Chat-completion access: HTTP endpoints, mock providers, record/replay cache.

The wire format is the common chat-completions shape (model, messages,
temperature, top_p, max_tokens in; choices + usage out). API keys are read
from the environment variable named in the config, never from config files.
"""
from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import re
import threading
import time
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, NamedTuple, Optional

import httpx

from .prompts import PromptBundle
from .scoring import render_answer

log = logging.getLogger(__name__)

MODES = ("live", "record", "replay")
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


class ClientError(Exception):
    pass


class AuthError(ClientError):
    pass


class RateLimited(ClientError):
    pass


class Timeout(ClientError):
    pass


class ContextOverflow(ClientError):
    pass


class MalformedResponse(ClientError):
    pass


class ServerError(ClientError):
    pass


class ReplayMiss(ClientError):
    """Replay-only run asked for a request that is not in the cache."""


@dataclass(frozen=True)
class ModelConfig:
    model_name: str
    provider: str = "openai"  # "openai" (any compatible endpoint) or "mock"
    temperature: float = 0.0
    top_p: Optional[float] = None
    max_output_tokens: Optional[int] = None
    endpoint: str = DEFAULT_ENDPOINT
    api_key_env: str = "OPENAI_API_KEY"
    timeout: float = 60.0
    max_attempts: int = 5
    backoff: float = 1.0
    mock: Optional[str] = None  # e.g. "oracle", "corrupt(0.3, 7)", "lazy"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.provider == "mock" and not self.mock:
            raise ValueError("mock provider needs a mock kind")

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        data = dict(data)
        if "mock" in data and "provider" not in data:
            data["provider"] = "mock"
        if data.get("provider") == "mock":
            data.setdefault("model_name", f"mock-{data['mock']}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def label(self) -> str:
        return re.sub(r"[^\w.\-]+", "_", self.model_name).strip("_")


@dataclass
class CompletionRecord:
    request_hash: str
    model_name: str
    prompt: str
    response: str
    prompt_tokens: int
    output_tokens: int
    tokens_estimated: bool
    latency_s: float
    provenance: str  # "live" | "cache" | "mock"
    timestamp: float
    instance_id: str = ""
    sample_index: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "CompletionRecord":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__ if k in data})


def request_payload(config: ModelConfig, bundle: PromptBundle) -> dict:
    payload = {
        "model": config.model_name,
        "messages": bundle.messages(),
        "temperature": bundle.sampling.get("temperature", config.temperature),
    }
    top_p = bundle.sampling.get("top_p", config.top_p)
    if top_p is not None:
        payload["top_p"] = top_p
    if config.max_output_tokens is not None:
        payload["max_tokens"] = config.max_output_tokens
    return payload


def request_hash(config: ModelConfig, bundle: PromptBundle) -> str:
    """Content hash of model, sampling parameters, prompt and vote index."""
    body = {"payload": request_payload(config, bundle), "sample_index": bundle.sample_index}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def estimate_tokens(text: str) -> int:
    return len(text.split())


class Reply(NamedTuple):
    text: str
    prompt_tokens: int
    output_tokens: int
    estimated: bool


# -- HTTP ---------------------------------------------------------------------


class HTTPProvider:
    provenance = "live"

    def __init__(
        self,
        config: ModelConfig,
        http: Optional[httpx.Client] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.config = config
        self.http = http or httpx.Client(timeout=config.timeout)
        self.sleep = sleep

    def _headers(self) -> dict:
        key = os.environ.get(self.config.api_key_env)
        if not key:
            raise AuthError(f"environment variable {self.config.api_key_env} is not set")
        return {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    def __call__(self, payload: dict, bundle: PromptBundle, key: str) -> Reply:
        headers = self._headers()
        cfg = self.config
        last: Exception = ClientError("no attempts made")
        for attempt in range(cfg.max_attempts):
            if attempt:
                self.sleep(cfg.backoff * 2 ** (attempt - 1))
            try:
                resp = self.http.post(cfg.endpoint, json=payload, headers=headers, timeout=cfg.timeout)
            except httpx.TimeoutException as exc:
                last = Timeout(str(exc) or "request timed out")
                log.warning("timeout on %s (attempt %d)", cfg.model_name, attempt + 1)
                continue
            except httpx.HTTPError as exc:
                last = ClientError(str(exc))
                continue
            status = resp.status_code
            if status in (401, 403):
                raise AuthError(f"{status}: {resp.text[:200]}")
            if status == 429:
                last = RateLimited(f"429 after {attempt + 1} attempts")
                log.warning("rate limited on %s (attempt %d)", cfg.model_name, attempt + 1)
                continue
            if status >= 500:
                last = ServerError(f"{status}: {resp.text[:200]}")
                continue
            if status >= 400:
                body = resp.text
                if re.search(r"context_length|maximum context|too many tokens", body, re.I):
                    raise ContextOverflow(body[:200])
                raise ClientError(f"{status}: {body[:200]}")
            return self._parse(resp, payload)
        raise last

    @staticmethod
    def _parse(resp: httpx.Response, payload: dict) -> Reply:
        try:
            data = resp.json()
            text = data["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise MalformedResponse(f"unexpected response body: {resp.text[:200]}") from exc
        if text is None:
            raise MalformedResponse("response has no content")
        usage = data.get("usage") or {}
        if "prompt_tokens" in usage and "completion_tokens" in usage:
            return Reply(text, int(usage["prompt_tokens"]), int(usage["completion_tokens"]), False)
        prompt = " ".join(m["content"] for m in payload["messages"])
        return Reply(text, estimate_tokens(prompt), estimate_tokens(text), True)


# -- mocks ----------------------------------------------------------------------


class MockProvider:
    """Deterministic stand-in for a model, driven by the bundle's reference.

    oracle     answers truthfully inside result tags
    corrupt    each scalar (or each list element) is off by 1..5 with prob p
    lazy       sorted output with one copy of a repeated element dropped
    silent     correct value in prose, no tags
    scripted   vote i answers truth + offsets[i]; 0 means correct
    """

    provenance = "mock"
    KINDS = ("oracle", "corrupt", "lazy", "silent", "scripted")

    def __init__(self, kind: str, p: float = 0.0, seed: int = 0, offsets: tuple = ()):
        if kind not in self.KINDS:
            raise ValueError(f"unknown mock kind {kind!r}")
        if not 0.0 <= p <= 1.0:
            raise ValueError("corruption probability must be in [0, 1]")
        self.kind, self.p, self.seed, self.offsets = kind, p, seed, tuple(offsets)

    def answer(self, truth, key: str, sample_index: int = 0):
        rng = random.Random(f"{self.seed}:{key}")
        if self.kind == "corrupt":
            return self._corrupt(truth, rng)
        if self.kind == "lazy":
            return _drop_repeat(truth)
        if self.kind == "scripted":
            off = self.offsets[sample_index % len(self.offsets)] if self.offsets else 0
            return _shift(truth, off)
        return truth

    def _corrupt(self, truth, rng: random.Random):
        if isinstance(truth, list):
            return [x + rng.randint(1, 5) if rng.random() < self.p else x for x in truth]
        if rng.random() >= self.p:
            return truth
        if isinstance(truth, bool):
            return not truth
        return truth + rng.randint(1, 5)

    def __call__(self, payload: dict, bundle: PromptBundle, key: str) -> Reply:
        value = self.answer(bundle.reference, key, bundle.sample_index)
        if self.kind == "silent":
            text = (
                "Walking through the program one statement at a time, "
                f"the final answer is {render_answer(value)}."
            )
        else:
            text = f"<result>{render_answer(value)}</result>"
        prompt = " ".join(m["content"] for m in payload["messages"])
        return Reply(text, estimate_tokens(prompt), estimate_tokens(text), True)


def _shift(truth, off: int):
    if not off:
        return truth
    if isinstance(truth, list):
        return [truth[0] + off, *truth[1:]] if truth else [off]
    if isinstance(truth, bool):
        return not truth
    return truth + off


def _drop_repeat(truth):
    if not isinstance(truth, list):
        return truth
    counts = Counter(truth)
    top = max(counts.values(), default=0)
    if top < 2:
        return sorted(truth)
    victim = min(v for v, c in counts.items() if c == top)
    out = sorted(truth)
    out.remove(victim)
    return out


def mock_provider(spec: str) -> MockProvider:
    """Parse ``oracle``, ``corrupt(0.3)``, ``corrupt(0.3, 7)``, ``scripted(0, 0, 3)`` ..."""
    m = re.fullmatch(r"\s*(\w+)\s*(?:\((.*)\))?\s*", spec)
    if not m:
        raise ValueError(f"bad mock spec {spec!r}")
    kind, args = m.group(1), m.group(2)
    vals = [a.strip() for a in args.split(",") if a.strip()] if args else []
    if kind == "corrupt":
        if not vals:
            raise ValueError("corrupt mock needs a probability")
        return MockProvider("corrupt", p=float(vals[0]), seed=int(vals[1]) if len(vals) > 1 else 0)
    if kind == "scripted":
        return MockProvider("scripted", offsets=tuple(int(v) for v in vals))
    if vals:
        raise ValueError(f"mock {kind!r} takes no arguments")
    return MockProvider(kind)


# -- cache ----------------------------------------------------------------------


class ResponseCache:
    """Append-only JSONL store of completion records keyed by request hash."""

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[str, dict] = {}
        self._torn = False
        if self.path.exists():
            data = self.path.read_bytes()
            self._torn = bool(data) and not data.endswith(b"\n")
            with self.path.open(encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        rec = json.loads(line)
                    except json.JSONDecodeError:
                        # torn final line from an interrupted run
                        log.warning("skipping unreadable cache line in %s", self.path)
                        continue
                    self._index.setdefault(rec["request_hash"], rec)

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, key: str) -> bool:
        return key in self._index

    def get(self, key: str) -> Optional[dict]:
        return self._index.get(key)

    def put(self, record: CompletionRecord) -> None:
        data = record.to_dict()
        with self._lock:
            if record.request_hash in self._index:
                return
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as fh:
                if self._torn:
                    fh.write("\n")
                    self._torn = False
                fh.write(json.dumps(data, sort_keys=True) + "\n")
            self._index[record.request_hash] = data


def make_provider(config: ModelConfig, **kwargs):
    if config.provider == "mock":
        return mock_provider(config.mock)
    if config.provider == "openai":
        return HTTPProvider(config, **kwargs)
    raise ValueError(f"unknown provider {config.provider!r}")


class Client:
    """One model endpoint plus its cache policy.

    live    always call the provider, store the result
    record  serve from cache when possible, otherwise call and store
    replay  cache only; a miss raises ReplayMiss and nothing is sent
    """

    def __init__(
        self,
        config: ModelConfig,
        mode: str = "record",
        cache: Optional[ResponseCache] = None,
        provider=None,
    ):
        if mode not in MODES:
            raise ValueError(f"unknown cache mode {mode!r}")
        if mode == "replay" and cache is None:
            raise ValueError("replay mode needs a cache")
        self.config = config
        self.mode = mode
        self.cache = cache
        self._provider = provider

    @property
    def provider(self):
        if self.mode == "replay":
            raise ReplayMiss("replay mode never contacts a provider")
        if self._provider is None:
            self._provider = make_provider(self.config)
        return self._provider

    def complete(self, bundle: PromptBundle) -> CompletionRecord:
        key = request_hash(self.config, bundle)
        if self.cache is not None and self.mode != "live":
            hit = self.cache.get(key)
            if hit is not None:
                rec = CompletionRecord.from_dict(hit)
                rec.provenance = "cache"
                return rec
        if self.mode == "replay":
            raise ReplayMiss(f"request {key[:12]} not in cache")

        provider = self.provider
        payload = request_payload(self.config, bundle)
        start = time.perf_counter()
        reply = provider(payload, bundle, key)
        latency = time.perf_counter() - start
        rec = CompletionRecord(
            request_hash=key,
            model_name=self.config.model_name,
            prompt=bundle.user_text,
            response=reply.text,
            prompt_tokens=reply.prompt_tokens,
            output_tokens=reply.output_tokens,
            tokens_estimated=reply.estimated,
            latency_s=round(latency, 6),
            provenance=getattr(provider, "provenance", "live"),
            timestamp=time.time(),
            instance_id=bundle.instance_id,
            sample_index=bundle.sample_index,
        )
        if self.cache is not None:
            self.cache.put(rec)
        return rec


def complete(config: ModelConfig, bundle: PromptBundle, **kwargs) -> CompletionRecord:
    return Client(config, **kwargs).complete(bundle)
