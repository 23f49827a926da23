"""Bridge from exported layout conditions to video generation."""

__version__ = "0.1.0"

from .conditions import Box, FrameCondition, SchemaError, load_conditions
from .generate import BridgeJob, ModelUnavailable, generate, render_mock_frames
