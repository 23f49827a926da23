"""Toolkit for audio-driven video scene layout planning and evaluation.

Submodules:

* ``core``       -- layout types, validation, flip/reverse/rescale,
                    keyframe-to-dense interpolation, condition export
* ``parsing``    -- template text parse/serialize for model responses
* ``projectors`` -- label-phrase embedding providers
* ``metrics``    -- soft-matched layout similarity (maxiou/ltsim/docsim)
* ``retrieval``  -- example-conversation store with kNN selection
* ``planner``    -- prompt assembly, chat providers, planning with retries
* ``bench``      -- manifests, augmentation, statistics, evaluation runs
"""

__version__ = "0.1.0"

from . import bench, core, errors, metrics, parsing, planner, projectors, retrieval
from .core import (BoundingBox, Canvas, CaptionMode, DenseLayoutSequence,
                   GenerationCondition, KeyframeLayout, VideoSceneLayout,
                   build_conditions, clamp_to_canvas, flip_horizontal,
                   interpolate, rescale, reverse_temporal, validate)
from .metrics import (docsim_frame, iou, ltsim_frame, max_iou_frame,
                      score_sequence, solve_assignment)
from .parsing import ParsedResponse, TemplateConfig, parse_response, serialize
from .planner import MockProvider, OpenAICompatProvider, PlanConfig, plan
from .projectors import HashedProjector, OneHotProjector, TableProjector
from .retrieval import CandidateDatabase, ExampleConversation, knn
