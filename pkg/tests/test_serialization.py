import numpy as np
import pytest

from spectral_transfer.baselines import direct_standardization
from spectral_transfer.errors import FormatError
from spectral_transfer.gctpls import FitConfig, fit, predict
from spectral_transfer.graphreg import StandardsPair
from spectral_transfer.serialization import (
    dumps,
    load_model,
    load_transfer_map,
    model_to_dict,
    save_model,
    save_transfer_map,
)


def test_model_round_trip(tmp_path, rng):
    X = rng.normal(size=(15, 10)) * 1e-3 + 0.7
    y = rng.normal(size=15)
    std = StandardsPair(rng.normal(size=(3, 10)), rng.normal(size=(3, 10)))
    model = fit(X, y, std, FitConfig(gamma=1e4, n_components=3))
    path = tmp_path / "m.json"
    save_model(path, model)
    back = load_model(path)
    for name in ("W", "P", "c_vec", "b"):
        np.testing.assert_array_equal(getattr(back, name), getattr(model, name))
    np.testing.assert_array_equal(back.centering.x_mean, model.centering.x_mean)
    assert back.config == model.config
    assert [r.cross_norm for r in back.residuals] == [r.cross_norm for r in model.residuals]
    np.testing.assert_array_equal(predict(back, X), predict(model, X))
    assert dumps(model_to_dict(back)) == path.read_text()


def test_transfer_map_round_trip(tmp_path, rng):
    tmap = direct_standardization(StandardsPair(rng.normal(size=(2, 5)), rng.normal(size=(2, 5))),
                                  "m5", "mp6")
    save_transfer_map(tmp_path / "t.json", tmap)
    back = load_transfer_map(tmp_path / "t.json")
    np.testing.assert_array_equal(back.F, tmap.F)
    assert (back.source_label, back.target_label, back.rank) == ("m5", "mp6", 2)


def test_rejects_foreign_documents(tmp_path):
    (tmp_path / "bad.json").write_text('{"format": "spectral-transfer/latent-model", "version": 9}')
    with pytest.raises(FormatError):
        load_model(tmp_path / "bad.json")
    (tmp_path / "broken.json").write_text("{")
    with pytest.raises(FormatError):
        load_model(tmp_path / "broken.json")
    (tmp_path / "short.json").write_text(
        '{"format": "spectral-transfer/latent-model", "version": 1, "n_channels": 2}')
    with pytest.raises(FormatError):
        load_model(tmp_path / "short.json")
