"""
Parsing planner responses
=========================

Chat models answer in prose. The parser locates the reasoning statement and
the layout block by their section markers, tolerates code fences and
surrounding chatter, and reports recoverable oddities as warnings instead
of failing.
"""
from vsltools import TemplateConfig, parse_response, serialize
from vsltools.errors import MissingLayoutBlock

cfg = TemplateConfig(expected_keyframes=2)

response = """\
Sure, here is my plan.

**Reasoning:** the engine is louder in the left channel and pans right,
so the car moves left to right.

```
Video Scene Layout:
Global Caption: a car drives across the street
Keyframe 0: the car enters
1: car [0, 120, 90, 60]
Keyframe 1: the car exits
1: car [360, 120, 90, 60]
```

Let me know if you want a different composition!
"""

parsed = parse_response(response, cfg)
print("reasoning:", parsed.reasoning)
print("keyframes:", len(parsed.vsl.keyframes))
print("warnings:", [w.kind for w in parsed.warnings])

# Serialization is the inverse: rendering the layout back to the template
# text that in-context examples use. Round-trips are exact.
text = serialize(parsed.vsl, cfg)
print(text)
print("round-trip:", parse_response(text, cfg).vsl == parsed.vsl)

# A response without any layout is a typed error the planner can retry on.
try:
    parse_response("I cannot hear anything in this clip.", cfg)
except MissingLayoutBlock as err:
    print("typed error:", err)
