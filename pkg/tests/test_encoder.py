import numpy as np
import pytest

from src.encoder import (EncoderConfig, LatentTable, RoomEncoder, TinyEncoder, conv_index, encode, lookup,
                         sinusoidal_2d)
from src.errors import ConfigError, FormatError, ShapeError, UnknownSceneError
from src.ndgrad import Tape, grad, total
from src.preprocess import ImageTransform, InputImage
from src.utils.checkpoint import load_parameters, save_parameters


def tiny_config(**overrides):
    values = dict(mode="tiny", m=4, q=16, conv_widths=(4, 8), attention_layers=1, heads=2, seed=3)
    values.update(overrides)
    return EncoderConfig(**values)


@pytest.fixture
def image(rng):
    return InputImage(rng.uniform(0, 1, size=(256, 256, 2)), ImageTransform())


def test_mode_aliases_and_validation():
    assert EncoderConfig(mode="table").mode == "latent-table"
    assert tiny_config().mode == "tiny-encoder"
    with pytest.raises(ConfigError):
        EncoderConfig(mode="resnet")
    with pytest.raises(ConfigError):
        tiny_config(q=18, heads=3)
    with pytest.raises(ConfigError):
        EncoderConfig(m=0)


def test_conv_index_pads_with_minus_one():
    index, out_h, out_w = conv_index(4, 4)
    assert (out_h, out_w) == (2, 2)
    assert index.shape == (4, 9)
    np.testing.assert_array_equal(index[0], [-1, -1, -1, -1, 0, 1, -1, 4, 5])


def test_sinusoidal_encoding_layout():
    pos = sinusoidal_2d(2, 3, 8)
    assert pos.shape == (6, 8)
    np.testing.assert_allclose(pos[0], [0, 0, 1, 1, 0, 0, 1, 1])


def test_tiny_encoder_output_and_gradients(image):
    encoder = TinyEncoder(tiny_config())
    assert encoder.grid == (64, 64)
    with Tape() as tape:
        codes = encode(image, encoder)
        loss = total(codes)
    assert codes.shape == (4, 16)
    grads = grad(tape, loss)
    conv0 = encoder.params["encoder/conv0/weight"]
    assert conv0 in grads and np.abs(grads[conv0]).sum() > 0


def test_tiny_encoder_is_deterministic(image):
    a = TinyEncoder(tiny_config()).encode(image).value
    b = TinyEncoder(tiny_config()).encode(image).value
    np.testing.assert_array_equal(a, b)


def test_tiny_encoder_rejects_wrong_size():
    small = InputImage(np.zeros((128, 128, 2)), ImageTransform(size=128))
    with pytest.raises(ShapeError):
        TinyEncoder(tiny_config()).encode(small)


def test_latent_init_follows_configured_normal():
    code = LatentTable(100, 100, seed=0, init_std=0.02).register("scene_0000").value
    assert code.size == 10_000
    assert abs(code.mean()) < 1e-3
    assert code.var() == pytest.approx(0.02 ** 2, rel=0.06)


def test_density_only_encoder(image):
    single = InputImage(image.data[:, :, :1], image.transform)
    encoder = TinyEncoder(tiny_config(input_channels=1))
    assert encoder.encode(single).shape == (4, 16)
    # a two-channel image feeds its density channel only
    np.testing.assert_array_equal(encoder.encode(image).value, encoder.encode(single).value)
    with pytest.raises(ShapeError):
        TinyEncoder(tiny_config()).encode(single)
    with pytest.raises(ConfigError):
        tiny_config(input_channels=3)


def test_latent_codes_do_not_depend_on_registration_order():
    a, b = LatentTable(3, 8, seed=1), LatentTable(3, 8, seed=1)
    a.register_all(["s1", "s2"])
    b.register_all(["s2", "s1"])
    np.testing.assert_array_equal(lookup("s1", a).value, lookup("s1", b).value)
    assert a.scene_ids == ["s1", "s2"]
    assert lookup("s1", a).shape == (3, 8)
    assert not np.array_equal(a.lookup("s1").value, a.lookup("s2").value)


def test_unknown_scene_raises():
    table = LatentTable(2, 8)
    with pytest.raises(UnknownSceneError):
        table.lookup("missing")
    with pytest.raises(KeyError):
        table.lookup("missing")


def test_room_encoder_modes(image):
    table_encoder = RoomEncoder(EncoderConfig(mode="table", m=2, q=8))
    table_encoder.table.register("s")
    assert table_encoder.codes("s").shape == (2, 8)
    assert list(table_encoder.parameters()) == ["latent/s"]

    tiny_encoder = RoomEncoder(tiny_config())
    assert tiny_encoder.codes("s", image).shape == (4, 16)
    with pytest.raises(ValueError):
        tiny_encoder.codes("s")


def test_parameters_survive_checkpoint(tmp_path):
    encoder = RoomEncoder(EncoderConfig(mode="table", m=2, q=8, seed=4))
    encoder.table.register_all(["a", "b"])
    save_parameters(encoder.parameters(), tmp_path / "ckpt", {"seed": 4})
    arrays, metadata = load_parameters(tmp_path / "ckpt")
    assert metadata == {"seed": 4}
    restored = RoomEncoder(EncoderConfig(mode="table", m=2, q=8, seed=4))
    restored.restore(arrays)
    assert restored.table.scene_ids == ["a", "b"]
    np.testing.assert_array_equal(restored.codes("b").value, encoder.codes("b").value)


def test_missing_checkpoint_is_format_error(tmp_path):
    with pytest.raises(FormatError):
        load_parameters(tmp_path)
