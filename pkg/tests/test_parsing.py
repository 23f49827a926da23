"""Template text rendering and tolerant response parsing."""
from __future__ import annotations

import random

import pytest

from conftest import random_vsl, random_words
from vsltools.core import BoundingBox, Canvas, KeyframeLayout, VideoSceneLayout
from vsltools.errors import (DuplicateIdInFrame, MalformedBox,
                             MissingLayoutBlock, VslParseError)
from vsltools.parsing import TemplateConfig, parse_response, serialize

CFG = TemplateConfig(expected_keyframes=5)


def cfg_for(vsl):
    return TemplateConfig(expected_keyframes=len(vsl.keyframes))


def test_template_conformant_response():
    vsl = random_vsl(random.Random(1), n_keyframes=5)
    text = serialize(vsl, CFG, reasoning="two sources panning right")
    parsed = parse_response(text, CFG)
    assert len(parsed.vsl.keyframes) == 5
    assert parsed.reasoning == "two sources panning right"
    assert parsed.warnings == ()
    assert parsed.raw == text


def test_serialize_box_line_format():
    vsl = VideoSceneLayout(
        Canvas(454, 256),
        (KeyframeLayout(0, (BoundingBox(1, "piano", 10, 20, 100, 50),)),))
    assert "1: piano [10, 20, 100, 50]" in serialize(vsl)


def test_serialize_deterministic(rng):
    vsl = random_vsl(rng)
    assert serialize(vsl, CFG) == serialize(vsl, CFG)


def test_serialize_omits_empty_reasoning(rng):
    vsl = random_vsl(rng)
    text = serialize(vsl, CFG, reasoning="")
    assert not text.startswith(CFG.reasoning_marker)
    assert text.startswith(CFG.layout_marker)


def test_serialize_rounds_half_up():
    vsl = VideoSceneLayout(
        Canvas(454, 256),
        (KeyframeLayout(0, (BoundingBox(1, "a", 10.5, 19.4, 99.5, 50.6),)),))
    assert "1: a [11, 19, 100, 51]" in serialize(vsl)


def test_round_trip_identity(rng):
    for _ in range(100):
        vsl = random_vsl(rng, coords="int", tracked=False)
        parsed = parse_response(serialize(vsl, cfg_for(vsl)), cfg_for(vsl))
        assert parsed.vsl == vsl


def test_missing_layout_block():
    with pytest.raises(MissingLayoutBlock):
        parse_response("I could not hear anything in the audio.", CFG)


def test_malformed_box_negative_size():
    text = "Video Scene Layout:\nKeyframe 0: x\n1: piano [10, 20, -5, 50]\n"
    with pytest.raises(MalformedBox):
        parse_response(text, CFG)


def test_malformed_box_non_numeric():
    text = "Video Scene Layout:\nKeyframe 0: x\n1: piano [a, b, c, d]\n"
    with pytest.raises(MalformedBox):
        parse_response(text, CFG)


def test_malformed_box_wrong_arity():
    text = "Video Scene Layout:\nKeyframe 0: x\n1: piano [10, 20, 5]\n"
    with pytest.raises(MalformedBox):
        parse_response(text, CFG)


def test_duplicate_id_in_frame():
    text = ("Video Scene Layout:\nKeyframe 0: x\n"
            "1: piano [10, 20, 30, 40]\n1: drum [50, 60, 20, 20]\n")
    with pytest.raises(DuplicateIdInFrame):
        parse_response(text, CFG)


def test_keyframe_count_mismatch_is_warning():
    vsl = random_vsl(random.Random(2), n_keyframes=3)
    parsed = parse_response(serialize(vsl, CFG), CFG)
    assert len(parsed.vsl.keyframes) == 3
    kinds = [w.kind for w in parsed.warnings]
    assert kinds == ["keyframe-count-mismatch"]
    assert parsed.warnings[0].expected == 5
    assert parsed.warnings[0].found == 3


def test_decimal_coordinates_accepted():
    text = "Video Scene Layout:\nKeyframe 0: x\n1: piano [10.5, 20, 30.25, 40]\n"
    parsed = parse_response(text, TemplateConfig(expected_keyframes=1))
    b = parsed.vsl.keyframes[0].boxes[0]
    assert (b.x, b.w) == (10.5, 30.25)


def test_tolerates_prose_fences_and_markdown(rng):
    from dataclasses import replace

    vsl = replace(random_vsl(rng, n_keyframes=2, coords="int"),
                  reasoning="sound moves rightward")
    body = serialize(vsl, cfg_for(vsl))
    wrapped = ("Sure! Here is the plan you asked for.\n\n```text\n"
               + body.replace("Reasoning:", "**Reasoning:**")
               + "```\nHope this helps!\n")
    parsed = parse_response(wrapped, cfg_for(vsl))
    assert parsed.vsl == vsl
    assert parsed.reasoning == "sound moves rightward"


def test_multiline_reasoning_is_joined():
    text = ("Reasoning: the engine noise\ngrows louder over time\n\n"
            "Video Scene Layout:\nGlobal Caption: a car\n"
            "Keyframe 0: start\n1: car [10, 10, 50, 30]\n")
    parsed = parse_response(text, TemplateConfig(expected_keyframes=1))
    assert parsed.reasoning == "the engine noise grows louder over time"


def test_non_increasing_indices_renumbered():
    text = ("Video Scene Layout:\nKeyframe 2: a\n1: car [0, 0, 5, 5]\n"
            "Keyframe 1: b\n1: car [10, 0, 5, 5]\n")
    parsed = parse_response(text, TemplateConfig(expected_keyframes=2))
    assert [kf.frame_index for kf in parsed.vsl.keyframes] == [0, 1]
    assert any(w.kind == "keyframe-order-normalized" for w in parsed.warnings)


def test_parser_total_on_fuzzed_input(rng):
    fragments = ["Keyframe 0: x", "1: piano [1, 2, 3, 4]", "```",
                 "Video Scene Layout:", "Reasoning: hum", "[1, 2]",
                 "1: bad [1, 2]", "7: [0, 0, 0, 0]", ":::", "", "   "]
    for _ in range(300):
        text = "\n".join(
            rng.choice(fragments) if rng.random() < 0.5 else random_words(rng)
            for _ in range(rng.randint(0, 12)))
        try:
            parsed = parse_response(text, CFG)
            assert parsed.vsl.keyframes
        except VslParseError:
            pass


def test_padding_never_breaks_round_trip(rng):
    for _ in range(50):
        vsl = random_vsl(rng, coords="int", tracked=False)
        noise_before = "\n".join(random_words(rng) for _ in range(rng.randint(0, 4)))
        noise_after = "\n".join(random_words(rng) for _ in range(rng.randint(0, 4)))
        text = f"{noise_before}\n{serialize(vsl, cfg_for(vsl))}\n{noise_after}"
        parsed = parse_response(text, cfg_for(vsl))
        assert parsed.vsl == vsl
