"""Smoke test for the figsep Python module.

Build and install the extension first:
    pip install maturin
    maturin develop -m crates/py/Cargo.toml     # or: pip install ./crates/py
then run:  python python/smoke_test.py
"""

import json
import math
import random
import tempfile
from pathlib import Path

import figsep


def two_panel_image():
    # textured left/right panels of different brightness, stitched at x=150;
    # perfectly flat panels would be discarded as margin
    w, h = 300, 240
    rng = random.Random(3)
    pixels = [(0.25 if x < 150 else 0.75) + rng.uniform(-0.08, 0.08) for _ in range(h) for x in range(w)]
    return figsep.Image(w, h, pixels)


def main():
    img = two_panel_image()
    assert (img.width, img.height) == (300, 240)

    params = figsep.Params()
    assert params.get("mindim") == 200
    params.set("mindim", 100)
    assert json.loads(params.to_json())["mindim"] == 100
    assert "edge_minseplength" in figsep.Params.names()

    boxes = figsep.separate(img, params, routing="edge")
    assert len(boxes) == 2, boxes
    assert sum(w * h for _, _, w, h in boxes) <= 300 * 240

    feats = figsep.extract_features(img, set="434", k=8)
    assert len(feats) == figsep.feature_dimensionality("434", 8) == 48

    assert figsep.feature_dimensionality("111", 16) == 512
    assert math.isclose(figsep.peak_threshold(2, 100.0, 0.25, 0.2, 1.5), 72.5)
    assert 0.345 <= figsep.decision_threshold(1.86) <= 0.350

    gt = [(0, 0, 100, 100), (100, 0, 100, 100)]
    assert figsep.imageclef_score(gt, gt) == 1.0
    assert figsep.imageclef_score(gt, [(0, 0, 130, 100)]) == 0.5
    assert figsep.nlm_true_positives(gt, [(0, 0, 130, 100)]) == 0
    agg = figsep.nlm_aggregate(1656, 1550, 1314)
    assert abs(agg["precision_pct"] - 84.8) < 0.05

    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "corpus"
        n = figsep.synth_generate(str(out), json.dumps({"count": 3}), seed=5)
        assert n == 3
        ann = out / "annotations.json"
        report = figsep.evaluate(str(out), str(ann), protocol="nlm")
        assert report["aggregate"]["f1_pct"] == 100.0
        loaded = figsep.Image.load(str(out / "images" / "synth-00000.png"))
        assert loaded.width > 0

    try:
        figsep.Params.preset("nonsense")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print("figsep python smoke test: ok")


if __name__ == "__main__":
    main()
