"""Prompt assembly, providers, and the planning retry loop."""
from __future__ import annotations

import json
import random
from pathlib import Path

import pytest

from conftest import random_vsl
from vsltools.core import Canvas
from vsltools.errors import ExhaustedRetries, ProviderError
from vsltools.parsing import TemplateConfig, serialize
from vsltools.planner import (AudioPart, ChatRequest, Message, MockProvider,
                              OpenAICompatProvider, PlanConfig, ProviderProfile,
                              TextPart, assemble_prompt, build_system_instruction,
                              decode_response, encode_request,
                              load_provider_profiles, mentions_all_cue_families,
                              plan, query_audio_refs)
from vsltools.retrieval import CandidateDatabase, ExampleConversation

FIXTURES = Path(__file__).parent / "fixtures" / "wire"


def example(entry_id, seed):
    gen = random.Random(seed)
    return ExampleConversation(
        id=entry_id, audio_ref=f"audio/{entry_id}.wav",
        embedding=(gen.random(), gen.random()),
        reasoning=f"the {entry_id} source stays centered",
        vsl=random_vsl(gen, n_keyframes=5))


def small_db(n=5):
    return CandidateDatabase(tuple(example(f"ex{i}", i) for i in range(n)))


# --- system instruction and prompt assembly -----------------------------------


def test_system_instruction_mentions_all_cue_families():
    text = build_system_instruction(PlanConfig())
    assert mentions_all_cue_families(text)
    assert "video director" in text
    assert "454x256" in text


def test_assemble_zero_shot_has_two_messages():
    request = assemble_prompt("inst", [], "q.wav", PlanConfig(k=0))
    assert [m.role for m in request.messages] == ["system", "user"]


def test_assemble_three_shot_has_eight_messages():
    examples = [example(f"e{i}", i) for i in range(3)]
    request = assemble_prompt("inst", examples, "q.wav", PlanConfig(k=3))
    assert [m.role for m in request.messages] == [
        "system", "user", "assistant", "user", "assistant", "user",
        "assistant", "user"]


def test_assemble_preserves_example_order_and_content():
    examples = [example(f"e{i}", i) for i in range(3)]
    cfg = PlanConfig(k=3)
    request = assemble_prompt("inst", examples, "q.wav", cfg)
    audio_refs = [p.audio_ref for m in request.messages for p in m.parts
                  if isinstance(p, AudioPart)]
    assert audio_refs == [e.audio_ref for e in examples] + ["q.wav"]
    for slot, ex in zip((2, 4, 6), examples):
        content = request.messages[slot].parts[0].text
        assert content.startswith("Reasoning: " + ex.reasoning)
        assert content.endswith(serialize(ex.vsl, cfg.template(),
                                          reasoning=ex.reasoning)[-40:])
    assert query_audio_refs(request) == ["q.wav"]


def test_assemble_carries_temperature_and_model():
    cfg = PlanConfig(k=0, temperature=1.5, model="m1")
    request = assemble_prompt("inst", [], "q.wav", cfg)
    assert request.temperature == 1.5
    assert request.model == "m1"


# --- wire encoding / decoding ---------------------------------------------------


def test_encode_request_base64(tmp_path):
    audio = tmp_path / "a.wav"
    audio.write_bytes(b"RIFFxxxx")
    profile = ProviderProfile(base_url="https://x", model="m")
    request = ChatRequest((
        Message("system", (TextPart("inst"),)),
        Message("user", (AudioPart(str(audio)), TextPart("go"))),
    ), temperature=0.5)
    payload = encode_request(request, profile)
    assert payload["model"] == "m"
    assert payload["temperature"] == 0.5
    parts = payload["messages"][1]["content"]
    assert parts[0]["type"] == "input_audio"
    assert parts[0]["input_audio"]["format"] == "wav"
    assert parts[1] == {"type": "text", "text": "go"}


def test_encode_request_uri_mode():
    profile = ProviderProfile(base_url="https://x", model="m", audio_mode="uri")
    request = ChatRequest((
        Message("user", (AudioPart("https://cdn.test/a.wav"),)),), 0.5)
    payload = encode_request(request, profile)
    assert payload["messages"][0]["content"][0] == {
        "type": "audio_url", "audio_url": {"url": "https://cdn.test/a.wav"}}


def test_decode_response_fixture():
    data = json.loads((FIXTURES / "response.json").read_text())
    response = decode_response(data)
    assert response.text.startswith("Reasoning: a single engine")
    assert response.prompt_tokens == 2048
    assert response.completion_tokens == 160


def test_decode_response_parts_fixture():
    data = json.loads((FIXTURES / "response_parts.json").read_text())
    response = decode_response(data)
    assert "drum kit [150, 80, 160, 120]" in response.text


def test_decode_response_malformed():
    with pytest.raises(ProviderError):
        decode_response({"choices": []})


# --- HTTP provider ------------------------------------------------------------


class FakeResponse:
    def __init__(self, status_code, payload=None, headers=None, text=""):
        self.status_code = status_code
        self._payload = payload
        self.headers = headers or {}
        self.text = text

    def json(self):
        return self._payload


class FakeSession:
    def __init__(self, responses):
        self.responses = list(responses)
        self.posts = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append({"url": url, "json": json, "headers": headers})
        return self.responses.pop(0)


def ok_payload(text="Reasoning: x"):
    return {"choices": [{"message": {"content": text}}]}


def provider_with(responses, monkeypatch, env_key=None, **profile_kwargs):
    profile = ProviderProfile(base_url="https://api.test/v1", model="m",
                              auth_env_var=env_key or "", backoff_s=0.0,
                              **profile_kwargs)
    session = FakeSession(responses)
    slept = []
    provider = OpenAICompatProvider(profile, session=session,
                                    sleep=slept.append)
    return provider, session, slept


def simple_request():
    return ChatRequest((Message("user", (TextPart("hello"),)),), 0.5)


def test_provider_success(monkeypatch):
    provider, session, _ = provider_with([FakeResponse(200, ok_payload())],
                                         monkeypatch)
    response = provider.send(simple_request())
    assert response.text == "Reasoning: x"
    assert session.posts[0]["url"] == "https://api.test/v1/chat/completions"


def test_provider_retries_429_honoring_retry_after(monkeypatch):
    provider, session, slept = provider_with(
        [FakeResponse(429, headers={"Retry-After": "7"}),
         FakeResponse(200, ok_payload())], monkeypatch)
    assert provider.send(simple_request()).text == "Reasoning: x"
    assert slept == [7.0]
    assert len(session.posts) == 2


def test_provider_exhausts_retries(monkeypatch):
    provider, session, _ = provider_with(
        [FakeResponse(429), FakeResponse(429), FakeResponse(429)], monkeypatch)
    with pytest.raises(ProviderError) as excinfo:
        provider.send(simple_request())
    assert excinfo.value.status == 429
    assert len(session.posts) == 3  # max_attempts


def test_provider_hard_error_no_retry(monkeypatch):
    provider, session, _ = provider_with(
        [FakeResponse(401, text="bad key")], monkeypatch)
    with pytest.raises(ProviderError) as excinfo:
        provider.send(simple_request())
    assert excinfo.value.status == 401
    assert len(session.posts) == 1


def test_provider_requires_env_credential(monkeypatch):
    monkeypatch.delenv("TEST_PLANNER_KEY", raising=False)
    provider, _, _ = provider_with([FakeResponse(200, ok_payload())],
                                   monkeypatch, env_key="TEST_PLANNER_KEY")
    with pytest.raises(ProviderError):
        provider.send(simple_request())
    monkeypatch.setenv("TEST_PLANNER_KEY", "secret")
    provider2, session2, _ = provider_with([FakeResponse(200, ok_payload())],
                                           monkeypatch, env_key="TEST_PLANNER_KEY")
    provider2.send(simple_request())
    assert session2.posts[0]["headers"]["Authorization"] == "Bearer secret"


def test_load_provider_profiles(tmp_path):
    config = {"providers": {"main": {
        "base_url": "https://api.test/v1/", "model": "planner-large",
        "auth_env_var": "KEY", "audio_mode": "uri"}}}
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(config))
    profiles = load_provider_profiles(path)
    assert profiles["main"].base_url == "https://api.test/v1"
    assert profiles["main"].audio_mode == "uri"


# --- plan ----------------------------------------------------------------------


def gt_text(vsl, cfg):
    return serialize(vsl, cfg.template(), reasoning="sources located by level")


def test_plan_with_perfect_mock():
    db = small_db()
    cfg = PlanConfig(k=3, strategy="fixed")
    target = random_vsl(random.Random(99), n_keyframes=5)
    provider = MockProvider([gt_text(target, cfg)])
    result = plan("q.wav", None, db, cfg, provider)
    assert result.parsed.vsl == target.__class__(
        canvas=target.canvas, keyframes=target.keyframes,
        global_caption=target.global_caption,
        reasoning="sources located by level")
    assert result.attempts == 1
    assert result.example_ids == ("ex0", "ex1", "ex2")


def test_plan_retries_after_garbage():
    db = small_db()
    cfg = PlanConfig(k=0, max_retries=2)
    target = random_vsl(random.Random(5), n_keyframes=5)
    provider = MockProvider(["no layout here at all", gt_text(target, cfg)])
    result = plan("q.wav", None, db, cfg, provider)
    assert result.attempts == 2
    assert provider.calls == 2
    # the second request carries the failed reply and a corrective message
    second = provider.requests[1]
    assert second.messages[-2].role == "assistant"
    assert second.messages[-2].parts[0].text == "no layout here at all"
    assert second.messages[-1].role == "user"
    assert "could not be parsed" in second.messages[-1].parts[0].text


def test_plan_exhausts_retries():
    db = small_db()
    cfg = PlanConfig(k=0, max_retries=1)
    provider = MockProvider(["junk", "more junk", "never reached"])
    with pytest.raises(ExhaustedRetries) as excinfo:
        plan("q.wav", None, db, cfg, provider)
    assert excinfo.value.attempts == 2
    assert excinfo.value.last_error is not None
    assert provider.calls == 2


def test_plan_propagates_provider_error():
    class Always429:
        def send(self, request):
            raise ProviderError("HTTP 429", status=429)

    with pytest.raises(ProviderError):
        plan("q.wav", None, small_db(), PlanConfig(k=0), Always429())


def test_plan_clamps_out_of_canvas_boxes():
    cfg = PlanConfig(k=0)
    text = ("Video Scene Layout:\nGlobal Caption: g\n"
            "Keyframe 0: a\n1: car [440, 10, 100, 50]\n")
    provider = MockProvider([text])
    result = plan("q.wav", None, small_db(), cfg, provider)
    b = result.parsed.vsl.keyframes[0].boxes[0]
    assert b.x + b.w <= cfg.canvas.width


def test_plan_deterministic_with_mock():
    db = small_db()
    cfg = PlanConfig(k=2, strategy="fixed")
    target = random_vsl(random.Random(3), n_keyframes=5)

    def run():
        provider = MockProvider(lambda request: gt_text(target, cfg))
        return plan("q.wav", None, db, cfg, provider)

    first, second = run(), run()
    assert first.parsed.vsl == second.parsed.vsl
    assert first.example_ids == second.example_ids


def test_plan_knn_uses_embedding():
    db = small_db()
    cfg = PlanConfig(k=2, strategy="knn")
    target = random_vsl(random.Random(4), n_keyframes=5)
    provider = MockProvider(lambda request: gt_text(target, cfg))
    query = db.entries[3].embedding
    result = plan("q.wav", query, db, cfg, provider)
    assert result.example_ids[0] == "ex3"
