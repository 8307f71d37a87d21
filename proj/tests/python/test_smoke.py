"""End-to-end smoke of the python surface: synthesize, pseudo-label, score,
train a tiny model, round-trip a checkpoint. Runs against the build tree
(PYTHONPATH set by ctest) or an installed wheel."""

import json
import sys
import tempfile
from pathlib import Path

import contactseq as cs


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol


def main():
    assert cs.FEATURE_DIM == 11

    # metrics on hand-checkable sequences
    perfect = [0, 0, 1, 1, 0]
    assert cs.frame_accuracy(perfect, perfect) == 1.0
    p, r, f1 = cs.boundary_score(perfect, perfect)
    assert (p, r, f1) == (1.0, 1.0, 1.0)
    assert cs.edit_score(perfect, perfect) == 1.0
    assert cs.frame_accuracy([1, 1, 1, 1, 1], perfect) == 0.5
    assert cs.labeled_accuracy([-1, 0, 1, -1, 0], perfect) == 1.0
    summary = cs.evaluate([perfect], [perfect])
    assert summary["tracks"] == 1 and summary["frame_acc"] == 1.0

    bank = Path(__file__).resolve().parents[2] / "specs" / "bank"
    spec = bank / "grasp_static.json"
    assert spec.is_file(), f"missing {spec}"

    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)

        # synthesis is seed-deterministic
        track, truth = cs.generate_track(str(spec), seed=9, id="smoke")
        track2, truth2 = cs.generate_track(str(spec), seed=9, id="smoke")
        assert truth == truth2 and track.checksum() == track2.checksum()
        assert len(track) == len(truth) and set(truth) <= {0, 1}

        # track IO round trip
        cs.save_track(track, str(tmp / "smoke"), overwrite=True)
        loaded = cs.load_track(str(tmp / "smoke"))
        assert loaded.checksum() == track.checksum()

        # pseudo-labels reproduce the planted truth on this clean scene
        res = cs.pseudolabels(track)
        assert res["coverage"] == 1.0
        assert cs.labeled_accuracy(res["labels"], truth) == 1.0

        # labels file round trip
        cs.save_labels(res["labels"], str(tmp / "labels.txt"))
        assert cs.load_labels(str(tmp / "labels.txt")) == res["labels"]

        # features feed a quick training run that learns this one scene
        feats = cs.extract_features(track)
        assert feats.shape == (11, len(track))
        cfg = json.dumps({"iters": 150, "val_interval": 50, "seed": 1})
        out = cs.train([(feats, truth)], [(feats, truth)], cfg)
        model = out["model"]
        assert model.num_params > 0 and len(out["curve"]) == 150
        acc = cs.frame_accuracy(model.predict(feats), truth)
        assert acc is not None and acc > 0.9, f"train smoke accuracy {acc}"

        # checkpoint round trip preserves predictions
        model.save(str(tmp / "model.bin"))
        again = cs.Model.load(str(tmp / "model.bin"))
        assert again.predict(feats) == model.predict(feats)

        # correction loop API: one cheap round, labels stay tri-state ints
        gcfg = json.dumps(
            {
                "rounds": 1,
                "pretrain_iters": 30,
                "pretrain_g_iters": 30,
                "finetune_iters": 0,
                "m": 10,
                "train": {"iters": 30},
            }
        )
        g = cs.run_gplc([(feats, truth)], [(feats, truth)], gcfg, truth=[truth])
        assert len(g["rounds"]) == 1 and len(g["corrected"]) == 1
        assert set(g["corrected"][0]) <= {-1, 0, 1}

    print("python smoke: ok")


if __name__ == "__main__":
    sys.exit(main())
