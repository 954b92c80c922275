import struct
from pathlib import Path

import numpy as np
import pytest

from guardnet.errors import FormatError, ShapeError
from guardnet.models import ModelConfig, build_model, load_weights, save_weights
from guardnet.models.weights import FORMAT_VERSION, MAGIC, read_tensors, write_tensors


def _micronet(seed: int):
    return build_model(ModelConfig(variant="micronet-32", seed=seed))


def test_roundtrip_is_bit_exact(tmp_path: Path) -> None:
    source = _micronet(seed=1)
    source.state_dict()["block1.expand.bn.running_var"][...] = 0.75
    path = save_weights(source, tmp_path / "model.sdlw")

    target = load_weights(path, _micronet(seed=2))

    for name, value in source.state_dict().items():
        assert target.state_dict()[name].tobytes() == value.tobytes(), name
    assert path.read_bytes() == save_weights(target, tmp_path / "copy.sdlw").read_bytes()


def test_header_layout(tmp_path: Path) -> None:
    path = write_tensors(tmp_path / "one.sdlw", {"w": np.arange(6, dtype=np.float32).reshape(2, 3)})
    payload = path.read_bytes()

    assert payload[:4] == MAGIC
    assert struct.unpack("<I", payload[4:8])[0] == FORMAT_VERSION
    assert struct.unpack("<I", payload[8:12])[0] == 1
    assert payload[12:13] == b"w"
    assert struct.unpack("<III", payload[13:25]) == (2, 2, 3)
    assert len(payload) == 25 + 6 * 4


def test_scalar_and_empty_name_tensors(tmp_path: Path) -> None:
    tensors = {"": np.array([1.5], dtype=np.float32), "s": np.array(2.0, dtype=np.float32)}

    loaded = read_tensors(write_tensors(tmp_path / "odd.sdlw", tensors))

    assert loaded[""].tolist() == [1.5]
    assert loaded["s"].shape == ()


def test_truncated_file_is_format_error(tmp_path: Path) -> None:
    path = save_weights(_micronet(seed=0), tmp_path / "model.sdlw")
    payload = path.read_bytes()
    path.write_bytes(payload[: len(payload) - 7])

    with pytest.raises(FormatError, match="truncated"):
        read_tensors(path)


def test_bad_magic_is_format_error(tmp_path: Path) -> None:
    path = tmp_path / "bad.sdlw"
    path.write_bytes(b"NOPE" + struct.pack("<I", 1))

    with pytest.raises(FormatError, match="magic"):
        read_tensors(path)


def test_unknown_version_is_format_error(tmp_path: Path) -> None:
    path = tmp_path / "v2.sdlw"
    path.write_bytes(MAGIC + struct.pack("<I", 2))

    with pytest.raises(FormatError, match="version"):
        read_tensors(path)


def test_micronet_weights_into_mobilenet_is_shape_error(tmp_path: Path) -> None:
    path = save_weights(_micronet(seed=0), tmp_path / "micro.sdlw")
    model = build_model(ModelConfig(variant="mobilenetv2-224"))
    before = model.state_dict()["head.logits.W"].copy()

    with pytest.raises(ShapeError, match="stem.conv.W"):
        load_weights(path, model)
    assert model.state_dict()["head.logits.W"].tobytes() == before.tobytes()


def test_missing_tensor_leaves_model_untouched(tmp_path: Path) -> None:
    source = _micronet(seed=0).state_dict()
    source.pop("head.logits.b")
    path = write_tensors(tmp_path / "partial.sdlw", source)
    model = _micronet(seed=5)
    before = model.state_dict()["stem.conv.W"].copy()

    with pytest.raises(FormatError, match="head.logits.b"):
        load_weights(path, model)
    assert model.state_dict()["stem.conv.W"].tobytes() == before.tobytes()


def test_extra_tensor_is_format_error(tmp_path: Path) -> None:
    tensors = dict(_micronet(seed=0).state_dict())
    tensors["extra.W"] = np.zeros(2, dtype=np.float32)
    path = write_tensors(tmp_path / "extra.sdlw", tensors)

    with pytest.raises(FormatError, match="extra.W"):
        load_weights(path, _micronet(seed=1))
