"""The expert-in-the-loop workflow, driven programmatically.

Spins up the HTTP service in-process and walks the full loop a domain expert
would do in the browser: upload data, inspect slices of the initial
data-only model, state shape requirements, refit, and verify compliance.
Also demonstrates how a contradictory requirement is surfaced.
"""

import tempfile
import time

from fastapi.testclient import TestClient

from shapereg.service import create_app
from shapereg.toy import ToySpec, toy_csv, toy_sample


def wait_for_fit(client, sid):
    while True:
        status = client.get(f"/sessions/{sid}/job").json()
        if status["status"] != "fitting":
            return status
        time.sleep(0.2)


x, y = toy_sample(ToySpec(seed=4))
with tempfile.TemporaryDirectory() as tmp:
    client = TestClient(create_app(session_dir=tmp))

    # 1. create a session: the service immediately fits the data-only model
    r = client.post("/sessions", json={
        "csv": toy_csv(x, y),
        "config": {"degrees": [1, 5, 2, 2, 2], "lambda": 0.01, "delta": 1e-5,
                   "input_ranges": [[0, 1]] * 5},
    })
    sid = r.json()["id"]
    print("session", sid, "created; iteration 0 =", r.json()["iterations"][0]["kind"])

    # 2. where should the expert look?  far-from-data anchors expose the
    #    model's behavior where it is least supported
    anchors = client.get(f"/sessions/{sid}/anchors", params={"count": 3}).json()
    far = anchors["low_fidelity"][0]
    print(f"least-supported anchor: {['%.2f' % v for v in far['point']]} "
          f"(distance {far['distance']:.2f} from any sample)")

    # 3. inspect a slice of the initial model through that anchor
    slice0 = client.get(f"/sessions/{sid}/iterations/0/slice", params={
        "axis": 1, "anchor": ",".join(map(str, far["point"])), "resolution": 7}).json()
    ys0 = [p["yhat"] for p in slice0["curve"]]
    print("initial model along axis 2:", ["%.3f" % v for v in ys0])
    print("  (an expert knows this output must DEcrease along that axis)")

    # 4. specify the shape knowledge and refit
    ops = [
        {"op": "add", "constraint": {"kind": "monotone_increasing", "axis": 0}},
        {"op": "add", "constraint": {"kind": "monotone_decreasing", "axis": 1}},
        {"op": "add", "constraint": {"kind": "convex", "axis": 1}},
        {"op": "add", "constraint": {"kind": "lower_bound", "level": 0.0}},
        {"op": "add", "constraint": {"kind": "upper_bound", "level": 1.0}},
    ]
    client.post(f"/sessions/{sid}/constraints", json={"operations": ops})
    client.post(f"/sessions/{sid}/refit")
    print("refitting ...", wait_for_fit(client, sid)["status"])

    slice1 = client.get(f"/sessions/{sid}/iterations/1/slice", params={
        "axis": 1, "anchor": ",".join(map(str, far["point"])), "resolution": 7}).json()
    ys1 = [p["yhat"] for p in slice1["curve"]]
    print("refit model along axis 2:  ", ["%.3f" % v for v in ys1])

    audit = client.get(f"/sessions/{sid}/iterations/1/audit", params={"seed": 1}).json()
    print("audit of the refit model:", audit["total_violated"], "violations")

    # 5. a contradictory requirement is caught and named, not silently fit
    client.post(f"/sessions/{sid}/constraints", json={"operations": [
        {"op": "add", "constraint": {"kind": "lower_bound", "level": 2.0}},
    ]})
    client.post(f"/sessions/{sid}/refit")
    status = wait_for_fit(client, sid)
    print("contradictory lower bound ->", status["status"])
    print("  conflicting requirements:", status["failure"]["constraints"])
