import math
import os
import subprocess

import pytest

import ssvkit


def test_cosine():
    assert ssvkit.cosine([1, 2, 3], [4, 5, 6]) == pytest.approx(32 / math.sqrt(14 * 77), rel=1e-15)
    with pytest.raises(ssvkit.SsvError, match="zero-norm"):
        ssvkit.cosine([0, 0], [1, 0])


def test_eer_and_score():
    r = ssvkit.compute_eer([2, 4], [1, 3])
    assert r["eer"] == pytest.approx(0.5)
    assert r["threshold"] == pytest.approx(3.0)
    assert ssvkit.compute_eer([0.9, 0.8], [0.1, 0.2])["eer"] == 0.0
    row = [9.786, 10.645, 6.999, 7.606, 6.732, 10.756, 32.902, 29.303,
           34.593, 45.415, 18.714, 22.501, 36.657, 20.368, 9.530, 27.308]
    score = ssvkit.challenge_score([(f"Test-{i + 1}", v / 100) for i, v in enumerate(row)])
    assert abs(100 * score - 20.613) <= 0.001


def test_synth_trials_score():
    speaker, method, manifest = ssvkit.synth({"n_methods": "1", "alpha": "1", "sigma_noise": "0", "dim": "8"})
    assert len(speaker) == len(manifest) == 8 * 8 * 2
    assert ssvkit.join_validate(speaker, manifest) == ([], [])
    trials = ssvkit.generate_trials(manifest, per_scenario=20, seed=3)
    assert len(trials) == 80
    assert trials == ssvkit.generate_trials(manifest, per_scenario=20, seed=3)
    scores = ssvkit.score_trials(trials, speaker, jobs=2)
    tgt = [s for s, t in zip(scores, trials) if t[3] == "target"]
    non = [s for s, t in zip(scores, trials) if t[3] == "nontarget"]
    assert ssvkit.compute_eer(tgt, non)["eer"] == 0.0


def test_infeasible():
    _, _, manifest = ssvkit.synth({"n_source_speakers": "2", "n_target_speakers": "2", "n_methods": "1"})
    counts = ssvkit.eligible_pair_counts(manifest)
    with pytest.raises(ssvkit.InfeasibleError, match="scenario"):
        ssvkit.generate_trials(manifest, per_scenario=max(counts) + 1)


def test_osnn():
    settings = {"n_methods": "4", "sigma_noise": "0.1", "split": "train", "seed": "2"}
    _, method, manifest = ssvkit.synth(settings)
    model = ssvkit.osnn_fit(method, manifest, seed=1)
    assert sorted(model.centers) == ["vc001", "vc002", "vc003", "vc004"]
    assert 0 < model.threshold < 1
    label, nearest, ratio = model.classify(model.centers["vc002"])
    assert (label, nearest, ratio) == ("vc002", "vc002", 0.0)
    _, test_method, test_manifest = ssvkit.synth(dict(settings, split="test"))
    seen, unseen = ssvkit.osnn_evaluate(model, test_method, test_manifest)
    assert seen > 0.95 and unseen is None


def test_embedding_files(tmp_path):
    store = ssvkit.EmbeddingStore()
    store.add("a", [0.5, -1.25])
    store.add("b", [3.0, 4.0])
    for name in ("e.ssve", "e.txt"):
        path = str(tmp_path / name)
        ssvkit.save_embeddings(store, path)
        back = ssvkit.load_embeddings(path)
        assert back.ids() == ["a", "b"]
        assert back.vector("b") == [3.0, 4.0]
    with pytest.raises(ssvkit.SsvError):
        store.add("a", [1.0, 1.0])


def test_cli_binary():
    cli = os.environ.get("SSVKIT_CLI")
    if not cli:
        pytest.skip("SSVKIT_CLI not set")
    proc = subprocess.run([cli, "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "osnn-calibrate" in proc.stdout
