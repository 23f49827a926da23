"""Audio-to-layout planning through a chat-completion provider.

The prompt has three parts: a system instruction (task framing plus the
spatial-cue directive), k retrieved example conversations rendered as
user/assistant turns, and the query audio. Providers speak an
OpenAI-compatible chat-completions wire format (see docs/wire_format.md);
a scriptable mock provider stands in for tests and offline runs.
"""
from __future__ import annotations

import base64
import json
import os
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from .core import Canvas, clamp_to_canvas
from .errors import EmptyLayout, ExhaustedRetries, ProviderError, SchemaError, VslParseError
from .parsing import ParsedResponse, TemplateConfig, parse_response, serialize
from .retrieval import CandidateDatabase, ExampleConversation, knn

SPATIAL_CUE_FAMILIES = (
    "interaural time difference",
    "interaural level difference",
    "pitch and volume",
    "directional shift",
)

DEFAULT_QUERY_TEXT = ("Listen to this audio recording and produce the video "
                      "scene layout in the required format.")

CORRECTION_TEXT = ("Your previous response could not be parsed: {error}. "
                   "Resend the full response in exactly the required format.")


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class AudioPart:
    audio_ref: str


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user" | "assistant"
    parts: tuple[TextPart | AudioPart, ...]

    def __post_init__(self):
        if not isinstance(self.parts, tuple):
            object.__setattr__(self, "parts", tuple(self.parts))


@dataclass(frozen=True)
class ChatRequest:
    messages: tuple[Message, ...]
    temperature: float
    model: str = ""

    def __post_init__(self):
        if not isinstance(self.messages, tuple):
            object.__setattr__(self, "messages", tuple(self.messages))


@dataclass(frozen=True)
class ChatResponse:
    text: str
    latency_s: float = 0.0
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


@dataclass(frozen=True)
class PlanConfig:
    """Planner knobs; the defaults match the benchmark configuration."""

    k: int = 3
    temperature: float = 0.5
    expected_keyframes: int = 5
    canvas: Canvas = Canvas(454, 256)
    max_retries: int = 2
    strategy: str = "knn"
    model: str = ""
    seed: int | None = None
    query_text: str = DEFAULT_QUERY_TEXT

    def template(self) -> TemplateConfig:
        return TemplateConfig(expected_keyframes=self.expected_keyframes,
                              canvas=self.canvas)


def build_system_instruction(cfg: PlanConfig,
                             template: TemplateConfig | None = None) -> str:
    """Default system instruction covering role, output format, and cues."""
    template = template or cfg.template()
    return f"""You are a video director. Given only an audio recording, plan the scene \
layout of a short video that matches what is heard: which sounding objects appear, \
where they sit, and how they move.

Task requirements:
- The canvas is {cfg.canvas.width}x{cfg.canvas.height} pixels; the coordinate system \
has its origin at the top-left corner, x increasing rightward and y downward.
- Produce exactly {cfg.expected_keyframes} keyframe layouts, numbered from 0.
- Each keyframe lists one line per sounding object as "id: label [x, y, w, h]" with \
integer pixel coordinates; the same object keeps the same id and label in every \
keyframe where it appears.
- Give one shared global caption for the whole video ("{template.global_caption_marker}") \
and a short local caption per keyframe describing its transition.

Analyze these spatial indicators of the audio before deciding the layout: the \
interaural time difference and interaural level difference locate each source \
left or right; pitch and volume indicate its distance; a directional shift over \
time implies movement. First output one brief statement ("{template.reasoning_marker}") \
summarizing your reasoning and the extracted spatial cues, then the layout block \
("{template.layout_marker}") in exactly the format above."""


def mentions_all_cue_families(text: str) -> bool:
    lowered = text.lower()
    return all(cue in lowered for cue in SPATIAL_CUE_FAMILIES)


def assemble_prompt(instruction: str, examples: Sequence[ExampleConversation],
                    query_audio_ref: str, cfg: PlanConfig) -> ChatRequest:
    """Order: system instruction, then each example as a user/assistant pair
    (audio in, reasoning + rendered layout out), then the query audio."""
    template = cfg.template()
    messages = [Message("system", (TextPart(instruction),))]
    for example in examples:
        messages.append(Message("user", (AudioPart(example.audio_ref),
                                         TextPart(cfg.query_text))))
        messages.append(Message("assistant", (TextPart(
            serialize(example.vsl, template, reasoning=example.reasoning)),)))
    messages.append(Message("user", (AudioPart(query_audio_ref),
                                     TextPart(cfg.query_text))))
    return ChatRequest(tuple(messages), temperature=cfg.temperature, model=cfg.model)


# --- providers ---------------------------------------------------------------


@dataclass(frozen=True)
class ProviderProfile:
    """One provider endpoint; credentials come from the named env var."""

    base_url: str
    model: str
    auth_env_var: str = ""
    audio_mode: str = "base64"  # "base64" | "uri"
    timeout_s: float = 120.0
    max_attempts: int = 3
    backoff_s: float = 1.0


def load_provider_profiles(path: str | Path) -> dict[str, ProviderProfile]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    profiles = data.get("providers")
    if not isinstance(profiles, dict) or not profiles:
        raise SchemaError(f"{path}: expected a top-level 'providers' object")
    out = {}
    for name, spec in profiles.items():
        if "base_url" not in spec or "model" not in spec:
            raise SchemaError(f"provider {name!r}: base_url and model are required")
        out[name] = ProviderProfile(
            base_url=str(spec["base_url"]).rstrip("/"),
            model=str(spec["model"]),
            auth_env_var=str(spec.get("auth_env_var", "")),
            audio_mode=str(spec.get("audio_mode", "base64")),
            timeout_s=float(spec.get("timeout_s", 120.0)),
            max_attempts=int(spec.get("max_attempts", 3)),
            backoff_s=float(spec.get("backoff_s", 1.0)))
    return out


def encode_request(request: ChatRequest, profile: ProviderProfile) -> dict:
    """Chat-completions JSON payload; audio parts become base64 attachments
    or URL references depending on the profile."""
    messages = []
    for message in request.messages:
        content = []
        for part in message.parts:
            if isinstance(part, TextPart):
                content.append({"type": "text", "text": part.text})
            elif profile.audio_mode == "uri":
                content.append({"type": "audio_url",
                                "audio_url": {"url": part.audio_ref}})
            else:
                payload = base64.b64encode(Path(part.audio_ref).read_bytes()).decode()
                suffix = Path(part.audio_ref).suffix.lstrip(".") or "wav"
                content.append({"type": "input_audio",
                                "input_audio": {"data": payload, "format": suffix}})
        messages.append({"role": message.role, "content": content})
    return {"model": request.model or profile.model,
            "temperature": request.temperature,
            "messages": messages}


def decode_response(data: dict) -> ChatResponse:
    try:
        message = data["choices"][0]["message"]
        content = message["content"]
    except (KeyError, IndexError, TypeError) as err:
        raise ProviderError(f"malformed chat response: {err!r}") from err
    if isinstance(content, list):  # some providers return a parts array
        content = "".join(p.get("text", "") for p in content if isinstance(p, dict))
    if not isinstance(content, str):
        raise ProviderError(f"unexpected content type {type(content).__name__}")
    usage = data.get("usage") or {}
    return ChatResponse(text=content,
                       prompt_tokens=usage.get("prompt_tokens"),
                       completion_tokens=usage.get("completion_tokens"))


class OpenAICompatProvider:
    """HTTP provider for any endpoint speaking the chat-completions format.

    Retries rate-limit and server errors with backoff, honoring Retry-After;
    everything else surfaces as ProviderError.
    """

    def __init__(self, profile: ProviderProfile, session=None,
                 sleep: Callable[[float], None] = time.sleep):
        import requests

        self.profile = profile
        self._session = session or requests.Session()
        self._sleep = sleep

    def send(self, request: ChatRequest) -> ChatResponse:
        profile = self.profile
        url = f"{profile.base_url}/chat/completions"
        headers = {"Content-Type": "application/json"}
        if profile.auth_env_var:
            key = os.environ.get(profile.auth_env_var)
            if not key:
                raise ProviderError(
                    f"environment variable {profile.auth_env_var} is not set")
            headers["Authorization"] = f"Bearer {key}"
        payload = encode_request(request, profile)

        last: ProviderError | None = None
        for attempt in range(1, profile.max_attempts + 1):
            started = time.monotonic()
            resp = self._session.post(url, json=payload, headers=headers,
                                      timeout=profile.timeout_s)
            if resp.status_code == 429 or resp.status_code >= 500:
                retry_after = _retry_after_seconds(resp)
                last = ProviderError(f"HTTP {resp.status_code} from {url}",
                                     status=resp.status_code, retry_after=retry_after)
                if attempt < profile.max_attempts:
                    self._sleep(retry_after if retry_after is not None
                                else profile.backoff_s * (2 ** (attempt - 1)))
                continue
            if resp.status_code != 200:
                raise ProviderError(f"HTTP {resp.status_code} from {url}: "
                                    f"{resp.text[:200]}", status=resp.status_code)
            decoded = decode_response(resp.json())
            return replace(decoded, latency_s=time.monotonic() - started)
        raise last if last is not None else ProviderError("no attempts made")


def _retry_after_seconds(resp) -> float | None:
    value = resp.headers.get("Retry-After") if hasattr(resp, "headers") else None
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        return None


class MockProvider:
    """Scriptable offline provider.

    ``script`` is either a sequence of response texts, consumed one per
    call, or a callable mapping the ChatRequest to a response text. Calls
    and requests are recorded for assertions.
    """

    def __init__(self, script: Sequence[str] | Callable[[ChatRequest], str]):
        self._script = script
        self.calls = 0
        self.requests: list[ChatRequest] = []

    def send(self, request: ChatRequest) -> ChatResponse:
        self.requests.append(request)
        index = self.calls
        self.calls += 1
        if callable(self._script):
            return ChatResponse(text=self._script(request))
        if index >= len(self._script):
            raise ProviderError(f"mock script exhausted after {index} calls")
        return ChatResponse(text=self._script[index])


def query_audio_refs(request: ChatRequest) -> list[str]:
    """Audio references carried by the final user message of a request."""
    for message in reversed(request.messages):
        if message.role == "user":
            return [p.audio_ref for p in message.parts if isinstance(p, AudioPart)]
    return []


# --- planning ----------------------------------------------------------------


@dataclass(frozen=True)
class PlanResult:
    """Outcome of one successful planning call."""

    parsed: ParsedResponse
    attempts: int
    example_ids: tuple[str, ...] = ()


def plan(query_audio_ref: str, query_embedding, db: CandidateDatabase,
         cfg: PlanConfig, provider) -> PlanResult:
    """Retrieve examples, prompt the provider, and parse the response.

    On a parse failure the failed response and a corrective user message are
    appended and the provider is queried again, up to ``cfg.max_retries``
    extra attempts; the returned layout is clamped to the canvas.
    """
    examples = knn(db, query_embedding, cfg.k, strategy=cfg.strategy,
                   seed=cfg.seed) if cfg.k > 0 else []
    instruction = build_system_instruction(cfg)
    template = cfg.template()
    request = assemble_prompt(instruction, examples, query_audio_ref, cfg)

    last_error: Exception | None = None
    attempts = cfg.max_retries + 1
    for attempt in range(1, attempts + 1):
        response = provider.send(request)
        try:
            parsed = parse_response(response.text, template)
            clamped = replace(parsed, vsl=clamp_to_canvas(parsed.vsl))
            return PlanResult(parsed=clamped, attempts=attempt,
                              example_ids=tuple(e.id for e in examples))
        except (VslParseError, EmptyLayout) as err:
            last_error = err
            request = replace(request, messages=request.messages + (
                Message("assistant", (TextPart(response.text),)),
                Message("user", (TextPart(CORRECTION_TEXT.format(error=err)),)),
            ))
    raise ExhaustedRetries(f"no parseable layout after {attempts} attempts",
                           attempts=attempts, last_error=last_error)
