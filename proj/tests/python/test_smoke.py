# Copyright 2026 The instrec Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

import json
import math

import numpy as np
import pytest

import instrec

TAXONOMY = """
NODE 3 chordophones
NODE 31 simple chordophones
NODE 4 aerophones
NODE 42 non-free aerophones
ASSIGN yangqin 31
ASSIGN erhu 31
ASSIGN tuba 42
ASSIGN trombone 42
"""


@pytest.fixture(scope="module")
def space():
    taxonomy = instrec.load_taxonomy(TAXONOMY)
    return instrec.build_label_space(taxonomy, 2)


def test_label_space(space):
    assert space.instrument_count == 4
    assert space.group_count == 2
    assert len(space) == 6
    assert space.group_of("tuba").name == "non-free aerophones"
    hot = instrec.expand_labels(space, ["tuba", "trombone"])
    assert hot.sum() == 3


def test_label_space_errors(space):
    with pytest.raises(instrec.InstrecError):
        space.group_of("theremin")


def test_frame_labels(space):
    track = instrec.make_track("t", 3.0, {"tuba": [(1.0, 2.0)]})
    indices, labels = instrec.frame_labels(track, space)
    assert indices == [0, 1, 2]
    tuba = space.instrument_index("tuba")
    assert labels[0, tuba] == 0
    assert labels[1, tuba] == 1
    assert labels[2, tuba] == 0


def test_mfcc_shape():
    extractor = instrec.MfccExtractor(sample_rate=22050)
    rng = np.random.default_rng(3)
    audio = rng.standard_normal(22050).astype(np.float32)
    block = extractor.extract(audio)
    assert block.shape == (1, 80, 22)
    assert np.isfinite(block).all()
    # Determinism.
    assert np.array_equal(block, extractor.extract(audio))


def test_network_parameter_count():
    net = instrec.Network(instrec.NetworkSpec(output_dim=85), seed=1)
    assert net.parameter_count() == 1_649_685
    rows = [r.parameters for r in net.layer_summary() if r.parameters > 0]
    assert rows[0] == 640 and rows[-1] == 10_965


def test_network_forward_range():
    spec = instrec.NetworkSpec(
        output_dim=3, dropout_rate=0.0, conv_widths=[4, 6, 8], head_widths=[16, 8]
    )
    net = instrec.Network(spec, seed=5)
    rng = np.random.default_rng(5)
    batch = rng.standard_normal((2, 1, 80, 22)).astype(np.float32)
    out = net.forward(batch)
    assert out.shape == (2, 3)
    assert ((out > 0) & (out < 1)).all()


def test_loss_values():
    pred = np.array([[0.5]], dtype=np.float64)
    targ = np.array([[1]], dtype=np.uint8)
    value, _ = instrec.bce(pred, targ)
    assert value == pytest.approx(math.log(2))
    focal_value, _ = instrec.focal(pred, targ, gamma=2.0)
    assert focal_value == pytest.approx(0.25 * math.log(2))
    lw, _ = instrec.level_weighted(pred, targ, alpha=0.5, instrument_count=1)
    assert lw == pytest.approx(0.5 * math.log(2))


def test_class_weights():
    labels = np.zeros((100, 2), dtype=np.uint8)
    labels[:75, 0] = 1
    labels[:25, 1] = 1
    weights, zero = instrec.compute_class_weights(labels)
    assert weights == pytest.approx([0.5, 1.5])
    assert zero == []


def test_f1():
    assert instrec.f1_score(0.76, 0.72) == pytest.approx(0.7395, abs=1e-4)


def test_tiny_training_round_trip(space, tmp_path):
    # A 60-frame separable problem through the scaled-down topology.
    rng = np.random.default_rng(11)
    instruments = space.instruments
    rows = 60
    features = np.zeros((rows, 80 * 22), dtype=np.float32)
    labels = np.zeros((rows, len(space)), dtype=np.uint8)
    for r in range(rows):
        cls = r % len(instruments)
        labels[r] = instrec.expand_labels(space, [instruments[cls]])
        pattern = np.full(80 * 22, -0.5, dtype=np.float32)
        pattern[cls * 300 : cls * 300 + 300] = 1.0
        features[r] = pattern + 0.05 * rng.standard_normal(80 * 22).astype(
            np.float32
        )
    spec = instrec.NetworkSpec(
        output_dim=len(space), dropout_rate=0.1, conv_widths=[4, 8, 8],
        head_widths=[24, 16],
    )
    net, log = instrec.train_flat(
        features, labels, space, epochs=20, batch_size=16, seed=3,
        loss="focal", base_spec=spec,
    )
    assert len(log) == 20
    assert log[-1].mean_loss < log[0].mean_loss

    activations = instrec.infer(net, features)
    predictions = instrec.decide(activations, 0.5).reshape(rows, len(space))
    report = instrec.score(predictions, labels, space)
    assert report["micro_all"]["f1"] > 0.9

    audit = instrec.consistency_audit(predictions, space)
    assert isinstance(audit, list)

    path = tmp_path / "model.ckpt"
    instrec.save_checkpoint(
        path, net, epoch=20, seed=3, loss="focal",
        label_fingerprint=space.fingerprint(), labels=space.label_names(),
    )
    loaded, meta = instrec.load_checkpoint(path, space.fingerprint())
    assert meta["epoch"] == 20
    again = instrec.infer(loaded, features)
    assert np.allclose(activations, again, atol=1e-6)


def test_cooccurrence(space):
    targ = np.zeros((4, len(space)), dtype=np.uint8)
    targ[0] = instrec.expand_labels(space, ["tuba", "yangqin"])
    targ[1] = instrec.expand_labels(space, ["tuba", "erhu"])
    targ[2] = instrec.expand_labels(space, ["tuba", "erhu"])
    targ[3] = instrec.expand_labels(space, ["tuba"])
    result = instrec.cooccurrence(targ, space)
    names = result["labels"]
    raw = result["raw"]
    tuba, yangqin, erhu = names.index("tuba"), names.index("yangqin"), names.index("erhu")
    assert raw[tuba, yangqin] == 1
    assert raw[tuba, erhu] == 2
    assert (raw == raw.T).all()
    norm = result["normalized"]
    assert np.diag(norm).sum() == 0
    assert norm.min() >= 0 and norm.max() <= 1


def test_synthetic_corpus_and_split(space):
    spec = {
        "track_count": 6,
        "track_duration": 8.0,
        "sample_rate": 4000,
        "polyphony": [1.0],
        "instruments": [
            {"name": "tuba", "frequencies": [110.0]},
            {"name": "yangqin", "frequencies": [440.0]},
        ],
    }
    corpus = instrec.generate_synthetic_corpus(json.dumps(spec), seed=4)
    assert len(corpus.tracks) == 6
    assert corpus.audio(0).shape == (8 * 4000,)
    split = instrec.split_tracks(corpus.tracks, space, test_fraction=0.33, seed=4)
    assert len(split.train_tracks) + len(split.test_tracks) == 6
    assert split.divergence >= 0
