"""Frame metrics, solvers, and sequence scoring."""
from __future__ import annotations

import random

import numpy as np
import pytest

from conftest import random_box, random_vsl
from oracles import (brute_force_assignment, giou_by_hand,
                     hard_docsim_normalized, hard_ltsim, hard_max_iou,
                     transport_vertex_oracle)
from vsltools.core import (BoundingBox, Canvas, flip_horizontal,
                           reverse_temporal)
from vsltools.errors import CanvasMismatch, EmptyLayout, ProjectorMiss
from vsltools.metrics import (Assignment, SequenceScore, docsim_frame,
                              docsim_frame_normalized, giou, iou, ltsim_frame,
                              match_weight_matrix, max_iou_frame,
                              score_sequence, soft_label_sim, solve_assignment,
                              transport_value)
from vsltools.projectors import (HashedProjector, OneHotProjector,
                                 TableProjector)

CANVAS = Canvas(454, 256)
P = HashedProjector()


def bx(i, label, x, y, w, h):
    return BoundingBox(i, label, x, y, w, h)


# --- iou / giou ---------------------------------------------------------------


def test_iou_identical():
    a = bx(1, "a", 3, 4, 10, 12)
    assert iou(a, a) == 1.0


def test_iou_disjoint():
    assert iou(bx(1, "a", 0, 0, 10, 10), bx(2, "b", 50, 50, 10, 10)) == 0.0


def test_iou_half_overlap():
    # intersection 5x10 = 50, union 200 - 50 = 150
    value = iou(bx(1, "a", 0, 0, 10, 10), bx(2, "b", 5, 0, 10, 10))
    assert value == pytest.approx(1 / 3, abs=1e-12)


def test_giou_matches_hand_formula(rng):
    for _ in range(100):
        a = random_box(rng, CANVAS, 1, "a", coords="float")
        b = random_box(rng, CANVAS, 2, "b", coords="float")
        assert giou(a, b) == pytest.approx(giou_by_hand(a, b), abs=1e-12)
        assert -1.0 < giou(a, b) <= 1.0
    assert giou(a, a) == 1.0


# --- soft label similarity ----------------------------------------------------


def test_soft_label_sim_identical():
    assert soft_label_sim("piano", "piano", P) == pytest.approx(1.0, abs=1e-9)


def test_soft_label_sim_orthogonal_and_antiparallel():
    table = TableProjector({"a": np.array([1.0, 0.0]),
                            "b": np.array([0.0, 1.0]),
                            "c": np.array([-1.0, 0.0])})
    assert soft_label_sim("a", "b", table) == 0.0
    assert soft_label_sim("a", "c", table) == 0.0  # clamped from -1


def test_table_projector_miss():
    table = TableProjector({"a": np.array([1.0, 0.0])})
    with pytest.raises(ProjectorMiss):
        table.project("unknown")


def test_projector_unit_norm(rng):
    for projector in (P, OneHotProjector(dim=16)):
        for label in ("piano", "red car", "piano"):
            assert np.linalg.norm(projector.project(label)) == pytest.approx(
                1.0, abs=1e-6)
    assert P.project("piano") is P.project("piano")  # cached


# --- assignment ---------------------------------------------------------------


def test_assignment_two_by_two():
    result = solve_assignment(np.array([[0.9, 0.1], [0.2, 0.8]]))
    assert result.pairs == ((0, 0), (1, 1))
    assert result.total == pytest.approx(1.7, abs=1e-12)


def test_assignment_identity_matrix():
    result = solve_assignment(np.eye(3))
    assert set(result.pairs) == {(0, 0), (1, 1), (2, 2)}
    assert result.total == 3.0
    rect = solve_assignment(np.eye(4)[:2])
    assert rect.total == 2.0


def test_assignment_single_row():
    result = solve_assignment(np.array([[0.2, 0.7, 0.4]]))
    assert result.pairs == ((0, 1),)
    assert result.total == pytest.approx(0.7)


def test_assignment_empty():
    assert solve_assignment(np.zeros((0, 3))) == Assignment((), 0.0)


def test_assignment_matches_brute_force(rng):
    for _ in range(200):
        shape = (rng.randint(1, 6), rng.randint(1, 6))
        weights = np.array([[rng.random() for _ in range(shape[1])]
                            for _ in range(shape[0])])
        expected = brute_force_assignment(weights.tolist())
        assert solve_assignment(weights).total == pytest.approx(expected, abs=1e-9)


# --- max_iou_frame --------------------------------------------------------------


def test_max_iou_self_distinct_labels():
    boxes = (bx(1, "piano", 0, 0, 50, 40), bx(2, "drum kit", 100, 50, 60, 60))
    assert max_iou_frame(boxes, boxes, P) == pytest.approx(1.0, abs=1e-9)


def test_max_iou_fully_disjoint():
    a = (bx(1, "piano", 0, 0, 10, 10),)
    b = (bx(1, "piano", 100, 100, 10, 10),)
    assert max_iou_frame(a, b, P) == 0.0


def test_max_iou_spurious_box_penalized():
    base = (bx(1, "piano", 0, 0, 50, 40), bx(2, "drum kit", 100, 50, 60, 60))
    extra = base + (bx(3, "violin", 300, 100, 40, 40),)
    assert max_iou_frame(base, extra, P) == pytest.approx(2 / 3, abs=1e-9)


def test_max_iou_empty_layout():
    with pytest.raises(EmptyLayout):
        max_iou_frame((), (bx(1, "a", 0, 0, 1, 1),), P)


# --- docsim_frame ---------------------------------------------------------------


def test_docsim_full_canvas_box_self():
    boxes = (bx(1, "piano", 0, 0, CANVAS.width, CANVAS.height),)
    assert docsim_frame(boxes, boxes, P, CANVAS) == pytest.approx(1.0, abs=1e-9)


def test_docsim_orthogonal_labels_zero():
    table = TableProjector({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])})
    one = (bx(1, "a", 10, 10, 50, 50),)
    other = (bx(1, "b", 10, 10, 50, 50),)
    assert docsim_frame(one, other, table, CANVAS) == 0.0


def test_docsim_quarter_canvas_self_is_half():
    # derived by direct kernel evaluation: dC = dS = 0 so the 2**(...) factor
    # is 1 and the score is sqrt(area/canvas area) = sqrt(1/4)
    boxes = (bx(1, "piano", 10, 10, CANVAS.width / 2, CANVAS.height / 2),)
    assert docsim_frame(boxes, boxes, P, CANVAS) == pytest.approx(0.5, abs=1e-9)
    assert docsim_frame_normalized(boxes, boxes, P, CANVAS) == pytest.approx(
        1.0, abs=1e-9)


def test_docsim_canvas_mismatch():
    boxes = (bx(1, "a", 0, 0, 10, 10),)
    with pytest.raises(CanvasMismatch):
        docsim_frame(boxes, boxes, P, CANVAS, Canvas(512, 320))


# --- ltsim_frame -----------------------------------------------------------------


def test_ltsim_self_identical_labels():
    boxes = (bx(1, "piano", 0, 0, 50, 40), bx(2, "drum kit", 100, 50, 60, 60))
    assert ltsim_frame(boxes, boxes, P) == pytest.approx(1.0, abs=1e-9)


def test_ltsim_translated_box_hand_value():
    # inter 0, union 200, hull 300 -> gIoU = -1/3 -> (gIoU+1)/2 = 1/3
    a = (bx(1, "piano", 0, 0, 10, 10),)
    b = (bx(1, "piano", 20, 0, 10, 10),)
    assert ltsim_frame(a, b, P) == pytest.approx(1 / 3, abs=1e-9)


def test_ltsim_orthogonal_labels_zero():
    table = TableProjector({"a": np.array([1.0, 0.0]), "b": np.array([0.0, 1.0])})
    a = (bx(1, "a", 0, 0, 10, 10),)
    b = (bx(1, "b", 0, 0, 10, 10),)
    assert ltsim_frame(a, b, table) == pytest.approx(0.0, abs=1e-9)


def test_ltsim_single_column_degenerates_to_row_mean(rng):
    boxes_a = tuple(random_box(rng, CANVAS, i, "piano") for i in range(1, 4))
    boxes_b = (random_box(rng, CANVAS, 9, "piano"),)
    sims = match_weight_matrix(boxes_a, boxes_b, P,
                               lambda a, b: (giou(a, b) + 1) / 2)
    assert ltsim_frame(boxes_a, boxes_b, P) == pytest.approx(
        float(sims.mean()), abs=1e-9)


def test_transport_value_matches_vertex_oracle(rng):
    for _ in range(100):
        n, m = rng.randint(1, 3), rng.randint(1, 3)
        sims = [[rng.random() for _ in range(m)] for _ in range(n)]
        expected = transport_vertex_oracle(sims, [1 / n] * n, [1 / m] * m)
        got = transport_value(np.array(sims),
                              np.full(n, 1 / n), np.full(m, 1 / m))
        assert got == pytest.approx(expected, abs=1e-6)


# --- cross-metric properties -----------------------------------------------------


def frame_pair(rng, n_a=None, n_b=None):
    n_a = n_a or rng.randint(1, 4)
    n_b = n_b or rng.randint(1, 4)
    labels = ["piano", "drum kit", "red car"]
    a = tuple(random_box(rng, CANVAS, i, rng.choice(labels), coords="float")
              for i in range(1, n_a + 1))
    b = tuple(random_box(rng, CANVAS, i, rng.choice(labels), coords="float")
              for i in range(1, n_b + 1))
    return a, b


def test_frame_metrics_symmetric(rng):
    for _ in range(50):
        a, b = frame_pair(rng)
        assert max_iou_frame(a, b, P) == pytest.approx(
            max_iou_frame(b, a, P), abs=1e-9)
        assert ltsim_frame(a, b, P) == pytest.approx(
            ltsim_frame(b, a, P), abs=1e-9)
        assert docsim_frame_normalized(a, b, P, CANVAS) == pytest.approx(
            docsim_frame_normalized(b, a, P, CANVAS), abs=1e-9)


def test_soft_metrics_reduce_to_hard_with_orthogonal_projector(rng):
    for _ in range(40):
        a, b = frame_pair(rng, rng.randint(1, 3), rng.randint(1, 3))
        onehot = OneHotProjector(dim=64)
        assert max_iou_frame(a, b, onehot) == pytest.approx(
            hard_max_iou(a, b), abs=1e-9)
        assert docsim_frame_normalized(a, b, onehot, CANVAS) == pytest.approx(
            hard_docsim_normalized(a, b, CANVAS), abs=1e-9)
        assert ltsim_frame(a, b, onehot) == pytest.approx(
            hard_ltsim(a, b), abs=1e-6)


def test_max_iou_monotone_under_growing_translation():
    previous = None
    for offset in range(0, 200, 10):
        a = (bx(1, "piano", 50, 50, 80, 60),)
        b = (bx(1, "piano", 50 + offset, 50, 80, 60),)
        score = max_iou_frame(a, b, P)
        if previous is not None:
            assert score <= previous + 1e-12
        previous = score


def test_metric_values_in_unit_interval(rng):
    for _ in range(30):
        a, b = frame_pair(rng)
        for value in (max_iou_frame(a, b, P), ltsim_frame(a, b, P),
                      docsim_frame(a, b, P, CANVAS),
                      docsim_frame_normalized(a, b, P, CANVAS)):
            assert -1e-9 <= value <= 1.0 + 1e-9


# --- score_sequence ---------------------------------------------------------------


def test_score_sequence_self_similarity(rng):
    for metric in ("maxiou", "ltsim", "docsim"):
        vsl = random_vsl(rng, coords="float")
        score = score_sequence(vsl, vsl, metric, P)
        assert score.mean == pytest.approx(1.0, abs=1e-9)
        assert score.scaled == pytest.approx(100.0, abs=1e-7)


def test_score_sequence_flip_invariance(rng):
    for _ in range(5):
        a = random_vsl(rng, n_keyframes=3)
        b = random_vsl(rng, n_keyframes=3)
        for metric in ("maxiou", "ltsim", "docsim"):
            base = score_sequence(a, b, metric, P).mean
            flipped = score_sequence(flip_horizontal(a), flip_horizontal(b),
                                     metric, P).mean
            assert flipped == pytest.approx(base, abs=1e-9)


def test_score_sequence_reverse_invariance(rng):
    for _ in range(5):
        a = random_vsl(rng, n_keyframes=4)
        b = random_vsl(rng, n_keyframes=4)
        for metric in ("maxiou", "ltsim", "docsim"):
            base = score_sequence(a, b, metric, P).mean
            reversed_ = score_sequence(reverse_temporal(a), reverse_temporal(b),
                                       metric, P).mean
            assert reversed_ == pytest.approx(base, abs=1e-9)


def test_score_sequence_resamples_to_longer_side(rng):
    short = random_vsl(rng, n_keyframes=2)
    long = random_vsl(rng, n_keyframes=5)
    score = score_sequence(short, long, "maxiou", P)
    assert len(score.frame_scores) == 5


def test_score_sequence_rescales_prediction(rng):
    gt = random_vsl(rng, n_keyframes=3)
    pred = random_vsl(rng, n_keyframes=3, canvas=Canvas(908, 512))
    score = score_sequence(pred, gt, "docsim", P)
    assert 0.0 <= score.mean <= 1.0


def test_score_sequence_empty_frames_contribute_zero():
    from vsltools.core import KeyframeLayout, VideoSceneLayout

    full = BoundingBox(1, "piano", 10, 10, 40, 40)
    vsl = VideoSceneLayout(CANVAS, tuple(
        KeyframeLayout(i, (full,)) for i in range(3)), "x")
    gapped = VideoSceneLayout(CANVAS, (
        KeyframeLayout(0, (full,)),
        KeyframeLayout(1, ()),
        KeyframeLayout(2, ()),
    ), "x")
    score = score_sequence(gapped, vsl, "maxiou", P)
    assert score.empty_frames == 2
    assert score.frame_scores[1] == 0.0
    assert score.frame_scores[2] == 0.0
    assert score.frame_scores[0] > 0.0


def test_sequence_score_mean_arithmetic():
    score = SequenceScore("maxiou", (1.0, 0.5, 0.0))
    assert score.mean == pytest.approx(0.5)
    assert score.scaled == pytest.approx(50.0)


def test_score_sequence_rejects_unknown_metric(rng):
    vsl = random_vsl(rng)
    with pytest.raises(ValueError):
        score_sequence(vsl, vsl, "fvd", P)
