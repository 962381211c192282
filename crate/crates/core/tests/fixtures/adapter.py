"""Test adapter for the forecast protocol. Behaviour is picked by argv[1]."""

import json
import os
import sys
import time

MODE = sys.argv[1] if len(sys.argv) > 1 else "naive"
ARG = sys.argv[2] if len(sys.argv) > 2 else None


def send(obj):
    sys.stdout.write(json.dumps(obj) + "\n")
    sys.stdout.flush()


def seasonal_naive(row, h, period):
    n = len(row)
    return [row[n - period + (j % period)] for j in range(h)]


def capabilities():
    caps = {"protocol_version": 1, "name": "fixture_" + MODE, "supports_covariates": MODE == "covariates"}
    if MODE == "naive":
        caps["hyper_grid"] = {"L": [1, 4, 7, 12, 24]}
    if MODE == "wrong_version":
        caps["protocol_version"] = 2
    return caps


def forecast(req):
    h = req["horizon"]
    ctx = req["context"]
    if MODE == "naive":
        period = int((req.get("params") or {}).get("L", 1))
        if period > len(ctx[0]):
            return {"error": {"code": "InvalidPeriod", "message": "L exceeds context length"}}
        return {"values": [seasonal_naive(row, h, period) for row in ctx]}
    if MODE == "covariates":
        future = req["covariates_future"]
        if future:
            return {"values": [[sum(col) for col in zip(*future)] for _ in ctx]}
    if MODE == "bad_json":
        return "{not json"
    if MODE == "bad_shape":
        return {"values": [[row[-1]] * (h + 1) for row in ctx]}
    if MODE == "sleep":
        time.sleep(float(ARG or 10))
    if MODE == "crash":
        sys.stderr.write("fixture crashing\n")
        sys.exit(3)
    if MODE == "crash_once":
        # ARG is a marker path; crash the first time only.
        if not os.path.exists(ARG):
            open(ARG, "w").close()
            sys.exit(4)
    if MODE == "error":
        return {"error": {"code": "Unsupported", "message": "always fails"}}
    return {"values": [[row[-1]] * h for row in ctx]}


for line in sys.stdin:
    if not line.strip():
        continue
    msg = json.loads(line)
    if msg.get("op") == "hello":
        send(capabilities())
        continue
    out = forecast(msg)
    if isinstance(out, str):
        sys.stdout.write(out + "\n")
        sys.stdout.flush()
    else:
        send(out)
