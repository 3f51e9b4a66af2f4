#!/usr/bin/env python3
# Copyright 2026  The twrnnt Authors
# Licensed under the Apache License, Version 2.0.
#
# Writes lattice_t3_u2.json.  The expected loss is found by listing every
# alignment path, independently of the C++ code.
import itertools
import json
import math
import random

T, U, V = 3, 2, 4
labels = [1, 3]
rng = random.Random(20260416)

logp = []
for _ in range(T * (U + 1)):
    raw = [rng.gauss(0.0, 1.5) for _ in range(V + 1)]
    m = max(raw)
    lse = m + math.log(sum(math.exp(x - m) for x in raw))
    logp.append([x - lse for x in raw])


def cell(t, u, k):
    return logp[t * (U + 1) + u][k]


total = 0.0
for emit_frames in itertools.combinations_with_replacement(range(T), U):
    # emit_frames[i]: frame at which label i+1 is emitted
    s, t, u = 0.0, 0, 0
    for target in list(emit_frames) + [None]:
        stop = T - 1 if target is None else target
        while t < stop:
            s += cell(t, u, V)
            t += 1
        if target is not None:
            s += cell(t, u, labels[u])
            u += 1
    s += cell(T - 1, U, V)
    total += math.exp(s)

out = {"t": T, "u": U, "v": V, "labels": labels,
       "logp": [x for row in logp for x in row],
       "expected_loss": -math.log(total)}
with open("lattice_t3_u2.json", "w") as f:
    json.dump(out, f, indent=1)
    f.write("\n")
