import numpy as np
import pytest

from ciliagraph import synthetic
from ciliagraph.classifier import ModelConfig, load_model, predict_many, save_model, train
from ciliagraph.datasets import GraphDataset, GraphInstance, SplitSpec, split
from ciliagraph.errors import ChecksumError, IntegrityError, TruncatedModelError, VersionMismatchError
from ciliagraph.persistence import FORMAT_VERSION, _PREFIX, dumps_model, model_file_size

import struct


@pytest.fixture(scope="module")
def trained():
    ds = synthetic.letters(classes=4, per_class=12, noise=0.3)
    train_set, test_set = split(ds, SplitSpec(seed=0, test_fraction=0.25))
    return train(train_set, ModelConfig(seed=0)), test_set


@pytest.mark.parametrize("variant", ["full", "record", "p3"])
def test_round_trip_predictions(tmp_path, variant):
    ds = synthetic.letters(classes=3, per_class=10, noise=0.3)
    model = train(ds, ModelConfig(seed=1, variant=variant))
    path = save_model(model, tmp_path / "m.chd")
    loaded = load_model(path)
    assert np.array_equal(predict_many(model, ds.graphs)[0], predict_many(loaded, ds.graphs)[0])
    assert dumps_model(loaded) == path.read_bytes()
    assert loaded.config == model.config
    for a, b in zip(model.banks, loaded.banks):
        assert np.array_equal(a.levels, b.levels)
        assert all(np.array_equal(x, y) for x, y in zip(a.flip_positions, b.flip_positions))


def test_checksum_corruption(tmp_path, trained):
    model, _ = trained
    raw = bytearray(dumps_model(model))
    raw[-40] ^= 0xFF
    path = tmp_path / "bad.chd"
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError):
        load_model(path)


def test_truncation(tmp_path, trained):
    model, _ = trained
    raw = dumps_model(model)
    for cut in (4, _PREFIX.size + 5, len(raw) - 10):
        with pytest.raises(TruncatedModelError):
            load_model_bytes(tmp_path, raw[:cut])


def test_trailing_bytes(tmp_path, trained):
    model, _ = trained
    with pytest.raises(IntegrityError):
        load_model_bytes(tmp_path, dumps_model(model) + b"\x00")


def test_version_mismatch(tmp_path, trained):
    model, _ = trained
    raw = bytearray(dumps_model(model))
    struct.pack_into("<H", raw, 8, FORMAT_VERSION + 1)
    with pytest.raises(VersionMismatchError):
        load_model_bytes(tmp_path, bytes(raw))


def test_bad_magic(tmp_path):
    with pytest.raises(IntegrityError, match="magic"):
        load_model_bytes(tmp_path, b"NOTAMODEL" + b"\x00" * 40)


def load_model_bytes(tmp_path, data):
    p = tmp_path / "x.chd"
    p.write_bytes(data)
    return load_model(p)


def test_size_matches_layout_and_is_small():
    rng = np.random.default_rng(0)
    graphs = [
        GraphInstance.from_edge_list(rng.normal(size=(4, 2)), [(0, 1), (1, 2), (2, 3)], i % 15) for i in range(45)
    ]
    ds = GraphDataset.from_graphs(graphs, class_count=15)
    model = train(ds, ModelConfig(dim=120, levels=8, seed=0))
    raw = dumps_model(model)
    header_len = struct.unpack_from("<I", raw, 10)[0]
    flips = [int(b.flip_counts.sum()) for b in model.banks]
    expected = model_file_size(2, 8, 120, 15, flips, False, header_len)
    assert len(raw) == expected
    # 2 banks * (120 packed bytes + 28 + ~276) + 15 * 240 * 8 * 2 + header: well under 1 MB
    assert expected < 1_000_000
