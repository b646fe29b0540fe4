"""
How a window of events becomes a focus value
=============================================

A focus value is the weighted mean distance between every pair of events in
a window. Each pair is weighted by the product of the two event durations,
each padded by a small buffer B. A window of closely related actions scores
near 0 and a scattered one scores near 0.5 or higher.
"""

import numpy as np

from focustime.embedding import EmbeddingModel
from focustime.focus import focus_value

# A hand-made three-label model: two editor actions pointing almost the same
# way, and a chat action orthogonal to both.
model = EmbeddingModel(
    ("ide:edit", "ide:view", "chat:send"),
    np.array([[1.0, 0.05], [1.0, -0.05], [0.0, 1.0]]),
)
for a in model.vocab:
    print(a, [round(model.distance(a, b), 3) for b in model.vocab])

# Durations are in milliseconds.
editing = [("ide:edit", 40_000), ("ide:view", 15_000), ("ide:edit", 60_000)]
print("editing only:", round(focus_value(editing, model, buffer_ms=10), 4))

switching = [("ide:edit", 40_000), ("chat:send", 15_000), ("ide:edit", 60_000)]
print("with a chat message:", round(focus_value(switching, model, buffer_ms=10), 4))

# Long events dominate. The same chat message, held open for ten minutes,
# pulls the value much higher.
print("long chat:", round(focus_value([("ide:edit", 40_000), ("chat:send", 600_000)], model, 10), 4))

# Instantaneous events have zero duration; without a buffer they carry no
# weight at all, and a window of only such events has no defined value.
burst = [("ide:edit", 0), ("chat:send", 0), ("ide:view", 0)]
print("burst with B=10 ms:", round(focus_value(burst, model, buffer_ms=10), 4))
try:
    focus_value(burst, model, buffer_ms=0)
except ValueError as exc:
    print("burst with B=0:", exc)

# A lone event has nothing to disagree with.
print("single event:", focus_value([("chat:send", 5_000)], model))

# Labels the model never saw sit at distance 0.5 from everything else.
print("unknown label:", focus_value([("ide:edit", 1000), ("mystery:tool", 1000)], model, 0))
