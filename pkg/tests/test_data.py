import numpy as np
import pytest

from transferhash.data import (
    MAGIC,
    load_matrix,
    load_model,
    make_split,
    save_matrix,
    save_model,
    zero_center,
)
from transferhash.errors import DataError, ParseError
from transferhash.itq_plus import itq_plus_objective, itq_plus_train
from transferhash.model import CenteringInfo, HashModel, LinearProjection


def test_csv_direct_parse(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("1.0,2.0\n3.0,4.0\n")
    assert np.array_equal(load_matrix(path, "csv"), [[1.0, 2.0], [3.0, 4.0]])


def test_csv_header_flag(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(ParseError):
        load_matrix(path, "csv")
    assert np.array_equal(load_matrix(path, "csv", skip_header=True), [[1.0, 2.0]])


def test_bin_zero_matrix(tmp_path):
    path = tmp_path / "z.bin"
    blob = MAGIC + bytes([1]) + (1).to_bytes(4, "little") + (3).to_bytes(4, "little")
    blob += bytes(8 * 3)
    path.write_bytes(blob)
    assert np.array_equal(load_matrix(path, "thpi-bin"), np.zeros((1, 3)))


@pytest.mark.parametrize("fmt", ["csv", "thpi-bin"])
def test_round_trip_bit_exact(tmp_path, fmt):
    rng = np.random.default_rng(0)
    m = rng.standard_normal((17, 5)) * 10.0 ** rng.integers(-8, 8, (17, 5))
    path = tmp_path / "m.dat"
    save_matrix(m, path, fmt)
    loaded = load_matrix(path, fmt)
    assert np.array_equal(loaded, m)
    # re-serialization reproduces the file byte for byte
    path2 = tmp_path / "m2.dat"
    save_matrix(loaded, path2, fmt)
    assert path.read_bytes() == path2.read_bytes()


def test_csv_errors_name_location(tmp_path):
    ragged = tmp_path / "ragged.csv"
    ragged.write_text("1,2\n3\n")
    with pytest.raises(ParseError, match="line 2"):
        load_matrix(ragged, "csv")
    junk = tmp_path / "junk.csv"
    junk.write_text("1,2\n3,oops\n")
    with pytest.raises(ParseError, match="line 2, field 2"):
        load_matrix(junk, "csv")


def test_bin_errors(tmp_path):
    bad_magic = tmp_path / "bad.bin"
    bad_magic.write_bytes(b"NOPE" + bytes(20))
    with pytest.raises(ParseError, match="magic"):
        load_matrix(bad_magic, "thpi-bin")
    truncated = tmp_path / "trunc.bin"
    truncated.write_bytes(
        MAGIC + bytes([1]) + (2).to_bytes(4, "little") + (2).to_bytes(4, "little") + bytes(8)
    )
    with pytest.raises(ParseError, match="payload"):
        load_matrix(truncated, "thpi-bin")


def test_non_finite_rejected(tmp_path):
    path = tmp_path / "nan.csv"
    path.write_text("1.0,nan\n")
    with pytest.raises(DataError):
        load_matrix(path, "csv")


def test_zero_center_symmetric_pair():
    centered, info = zero_center(np.array([[1.0, 1.0], [3.0, 3.0]]))
    assert np.array_equal(centered, [[-1.0, -1.0], [1.0, 1.0]])
    assert np.array_equal(info.mean, [2.0, 2.0])


def test_zero_center_fixed_point():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((50, 4)) + 5.0
    centered, _ = zero_center(x)
    assert np.abs(centered.sum(axis=0)).max() < 1e-9 * 50 * np.abs(x).max()
    again, info = zero_center(centered)
    assert np.abs(info.mean).max() < 1e-12
    assert np.allclose(again, centered)


def make_pair(n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, 4)), rng.standard_normal((n, 3))


def test_make_split_counts():
    target, source = make_pair(10)
    bundle = make_split(target, source, 0.5, 0.0, 0)
    assert bundle.n_corr == 5 and bundle.n_extra == 5
    assert bundle.target_test.shape[0] == 0


def test_make_split_alpha_one():
    target, source = make_pair(10)
    bundle = make_split(target, source, 1.0, 0.0, 0)
    assert bundle.n_extra == 0 and bundle.n_corr == 10


def test_make_split_deterministic_and_seed_sensitive():
    target, source = make_pair(40)
    first = make_split(target, source, 0.5, 0.2, 3)
    second = make_split(target, source, 0.5, 0.2, 3)
    assert np.array_equal(first.corr_idx, second.corr_idx)
    assert np.array_equal(first.test_idx, second.test_idx)
    differs = sum(
        not np.array_equal(
            make_split(target, source, 0.5, 0.2, s).corr_idx, first.corr_idx
        )
        for s in range(1, 21)
    )
    assert differs >= 1


def test_make_split_partitions_origin_indices():
    target, source = make_pair(37, seed=5)
    bundle = make_split(target, source, 0.4, 0.1, 9)
    merged = np.concatenate([bundle.corr_idx, bundle.extra_idx, bundle.test_idx])
    assert np.array_equal(np.sort(merged), np.arange(37))
    # row pairing by origin index
    assert np.array_equal(bundle.target_train, target[bundle.corr_idx])
    assert np.array_equal(bundle.source_corr, source[bundle.corr_idx])


def test_make_split_alpha_consistency():
    target, source = make_pair(100, seed=2)
    bundle = make_split(target, source, 0.3, 0.1, 1)
    n, ns = bundle.n_corr, bundle.n_extra
    assert abs(bundle.alpha - n / (n + ns)) <= 1.0 / (n + ns)


def test_make_split_validation():
    target, source = make_pair(10)
    with pytest.raises(ValueError):
        make_split(target, source, 0.0, 0.0, 0)
    with pytest.raises(ValueError):
        make_split(target, source, 0.5, 1.0, 0)
    with pytest.raises(ValueError):
        make_split(target, source, 0.01, 0.0, 0)  # n == 0
    with pytest.raises(DataError):
        make_split(target, source[:5], 0.5, 0.0, 0)


def identity_model(d=4, c=2):
    return HashModel(
        method="itq",
        centering=CenteringInfo(np.zeros(d)),
        preprocessing=LinearProjection.identity(d),
        rotation=np.eye(d)[:, :c],
        bits=c,
    )


def test_model_round_trip_identity(tmp_path):
    model = identity_model()
    path = tmp_path / "id.model"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.method == model.method
    assert loaded.bits == model.bits
    assert np.array_equal(loaded.rotation, model.rotation)
    assert np.array_equal(loaded.centering.mean, model.centering.mean)
    assert np.array_equal(loaded.preprocessing.matrix, model.preprocessing.matrix)
    assert loaded.hyperparams == model.hyperparams


def test_model_round_trip_trained(tmp_path):
    rng = np.random.default_rng(7)
    x_t = rng.standard_normal((60, 8)); x_t -= x_t.mean(0)
    x_s = rng.standard_normal((60, 6)); x_s -= x_s.mean(0)
    model, state = itq_plus_train(x_t, x_s, 4, 0.05, iters=25, seed=0)
    path = tmp_path / "trained.model"
    save_model(model, path)
    loaded = load_model(path)
    before = itq_plus_objective(state.codes, model.rotation, state.slack_rotation,
                                x_t, x_s, 0.05)
    after = itq_plus_objective(state.codes, loaded.rotation, state.slack_rotation,
                               x_t, x_s, 0.05)
    assert after == before
    assert loaded.hyperparams == model.hyperparams


def test_model_reserialization_is_byte_exact(tmp_path):
    rng = np.random.default_rng(8)
    x_t = rng.standard_normal((40, 6)); x_t -= x_t.mean(0)
    x_s = rng.standard_normal((40, 5)); x_s -= x_s.mean(0)
    model, _ = itq_plus_train(x_t, x_s, 3, 0.01, iters=10, seed=1)
    first = tmp_path / "one.model"
    second = tmp_path / "two.model"
    save_model(model, first)
    save_model(load_model(first), second)
    assert first.read_bytes() == second.read_bytes()


def test_model_wrong_magic(tmp_path):
    path = tmp_path / "bogus.model"
    path.write_bytes(b"XXXX" + bytes(40))
    with pytest.raises(ParseError, match="magic/version"):
        load_model(path)
