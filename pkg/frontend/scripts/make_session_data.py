"""Write a one-frame synthetic dataset plus the click script for a session test.

Usage: python3 make_session_data.py OUT_DIR

Creates OUT_DIR/data (a dataset the service can serve) and
OUT_DIR/session_input.json describing which object to annotate and where
its true footprint corners are.  The session test clicks corners 0..2 of
that object and checks the service's responses at each step.
"""

import json
import sys
from pathlib import Path

from cornerbox.geometry import BoxBEV, corners_from_box
from cornerbox.synthetic import generate_dataset

SEED = 505
FRAMES = 1
DIMS = (3.9, 1.6)


def main() -> None:
    out = Path(sys.argv[1])
    manifest = generate_dataset(out / "data", frames=FRAMES, seed=SEED, dims=DIMS)
    frame, entry = next(iter(manifest["frames"].items()))
    target = next(o for o in entry["objects"] if o["recoverable"])
    x, y, _z, l, w, _h, theta = target["box"]
    footprint = corners_from_box(BoxBEV(x, y, l, w, theta))
    clicks = [
        {"n": n, "x": footprint.by_index(n).x, "y": footprint.by_index(n).y}
        for n in (0, 1, 2)
    ]
    path = out / "session_input.json"
    path.write_text(json.dumps({
        "seed": SEED,
        "frames": FRAMES,
        "dims": list(DIMS),
        "frame": frame,
        "object_id": target["id"],
        "truth_box": target["box"],
        "clicks": clicks,
    }))
    print(path)


if __name__ == "__main__":
    main()
