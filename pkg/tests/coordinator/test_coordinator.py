import json

import numpy as np
import pytest

from src.coordinator.coordinator import (
    SNAPSHOT_FORMAT,
    InitPackage,
    SnapshotError,
    StorageNoise,
    encode_storage,
    initialize,
    load_snapshot,
    save_snapshot,
)
from src.model_domain.model import GlobalModel
from src.permutation_engine.permutations import PermutationBundle
from src.validator.validator import ConfigValidationError


def test_encode_storage_zero(case1_config):
    storage = encode_storage(GlobalModel.zeros(case1_config), StorageNoise.zeros(case1_config), 1, case1_config)
    assert np.all(storage == 0)
    assert storage.shape == (case1_config.L,)


def test_encode_storage_hand_example(tiny_config):
    """ell=1, f_1=1, alpha_1=2, W=5, I=(3, 4): 5/(1-2) + 3 + 4*2 = 6 mod 31."""
    cfg = tiny_config
    GF = cfg.field.GF
    W = GlobalModel.zeros(cfg)
    W.W[0, 0] = GF(5)
    noise = StorageNoise.zeros(cfg)
    noise.I[0, 0] = GF([3, 4])
    assert int(encode_storage(W, noise, 1, cfg)[0]) == 6


def test_encode_storage_constant_noise_is_bijective(tiny_config):
    cfg = tiny_config
    GF = cfg.field.GF
    W = GlobalModel.random(cfg, seed=2)
    for n in range(1, cfg.N + 1):
        seen = set()
        for c in range(31):
            noise = StorageNoise.zeros(cfg)
            noise.I[0, 0, 0] = GF(c)
            noise.I[0, 0, 1] = GF(9)
            seen.add(int(encode_storage(W, noise, n, cfg)[0]))
        assert seen == set(range(31))


def test_initialize_case1_shapes(case1_setup, case1_config, case1_bundle):
    _, init = case1_setup
    assert init.user_bundle == case1_bundle
    assert len(init.db_packages) == 8
    for n, package in enumerate(init.db_packages, start=1):
        assert package.n == n
        assert len(package.within) == 3
        assert all(R.shape == (15, 15) for R in package.within)
        assert package.segment is None
        assert package.storage.shape == (45,)


def test_initialize_case2_includes_segment_matrix(case2_setup, case2_bundle):
    _, init = case2_setup
    assert init.user_bundle.segmentwise == (2, 3, 1)
    assert init.user_bundle.within == case2_bundle.within
    assert all(package.segment.shape == (9, 9) for package in init.db_packages)


def test_initialize_is_deterministic(case2_config):
    model = GlobalModel.random(case2_config, seed=1)
    first = initialize(case2_config, model, seed=21)
    second = initialize(case2_config, model, seed=21)
    assert first.to_dict() == second.to_dict()
    assert initialize(case2_config, model, seed=22).to_dict() != first.to_dict()


def test_noise_matrices_are_shared_across_databases(case1_setup, case1_config):
    _, init = case1_setup
    # R_n - Z-bar differs only in its Gamma_n blocks, so entries off the block pattern agree.
    mask = np.ones((15, 15), dtype=bool)
    for col_block, row_block in enumerate(init.user_bundle.within[0]):
        mask[(row_block - 1) * 3:row_block * 3, col_block * 3:(col_block + 1) * 3] = False
    first = init.db_packages[0].within[0]
    for package in init.db_packages[1:]:
        assert np.array_equal(package.within[0][mask], first[mask])


def test_initialize_rejects_invalid_config(case1_config):
    from dataclasses import replace

    bad = replace(case1_config, N=9)
    with pytest.raises(ConfigValidationError):
        initialize(bad, GlobalModel.zeros(case1_config), seed=0)


def test_snapshot_round_trip(tmp_path, case2_setup):
    _, init = case2_setup
    path = save_snapshot(init, tmp_path / "snapshot.json")
    assert json.loads(path.read_text())["format"] == SNAPSHOT_FORMAT

    restored = load_snapshot(path)
    assert restored.config == init.config
    assert restored.user_bundle == init.user_bundle
    for original, loaded in zip(init.db_packages, restored.db_packages):
        assert np.array_equal(original.storage, loaded.storage)
        assert np.array_equal(original.segment, loaded.segment)


def test_snapshot_rejects_unknown_format(case1_setup):
    _, init = case1_setup
    data = init.to_dict()
    data["format"] = "other/9"
    with pytest.raises(SnapshotError):
        InitPackage.from_dict(data)


def test_snapshot_missing_field(case1_setup):
    _, init = case1_setup
    data = init.to_dict()
    del data["user_bundle"]
    with pytest.raises(SnapshotError, match="missing"):
        InitPackage.from_dict(data)


@pytest.mark.parametrize("field, value", [("P", "x"), ("q", None), ("f", 5)])
def test_snapshot_bad_config_value(case1_setup, field, value):
    _, init = case1_setup
    data = init.to_dict()
    data["config"][field] = value
    with pytest.raises(SnapshotError, match="invalid value"):
        InitPackage.from_dict(data)


def test_snapshot_bad_storage_value(case1_setup):
    _, init = case1_setup
    data = init.to_dict()
    data["db_packages"][0]["storage"] = [0.5, 1.5]
    with pytest.raises(SnapshotError):
        InitPackage.from_dict(data)


def test_snapshot_must_be_an_object():
    with pytest.raises(SnapshotError, match="JSON object"):
        InitPackage.from_dict(["pfl-snapshot/1"])


def test_load_snapshot_invalid_json(tmp_path):
    path = tmp_path / "snapshot.json"
    path.write_text("{not json")
    with pytest.raises(SnapshotError, match="not valid JSON"):
        load_snapshot(path)


def test_snapshot_records_rounds_completed(case1_setup):
    _, init = case1_setup
    assert init.to_dict()["rounds_completed"] == 0
    data = init.to_dict()
    data["rounds_completed"] = 4
    assert InitPackage.from_dict(data).rounds_completed == 4
    del data["rounds_completed"]
    assert InitPackage.from_dict(data).rounds_completed == 0


def test_load_snapshot_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_snapshot(tmp_path / "absent.json")


def test_user_bundle_never_in_database_packages(case1_setup):
    _, init = case1_setup
    for package in init.db_packages:
        assert set(package.to_dict()) == {"n", "within", "segment", "storage"}
        assert isinstance(init.user_bundle, PermutationBundle)
