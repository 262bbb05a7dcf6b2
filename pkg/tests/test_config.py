import pytest

from config import Config


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.setenv("HERZHAUS_OUTPUT_DIR", str(tmp_path / "out"))
    monkeypatch.setenv("HERZHAUS_NODES_PER_OCTAVE", "24")
    monkeypatch.setenv("HERZHAUS_CONCURRENT_ATOMS", "no")
    cfg = Config()
    assert cfg.NODES_PER_OCTAVE == 24
    assert cfg.CONCURRENT_ATOMS is False
    assert (tmp_path / "out").is_dir()
    assert cfg.grid_settings()["nodes_per_octave"] == 24
    assert set(cfg.tolerances()) >= {"tail", "drop", "moment", "size"}


@pytest.mark.parametrize(
    "name, value",
    [
        ("HERZHAUS_K_MIN", "30"),
        ("HERZHAUS_QUADRATURE_RULE", "trapezoid"),
        ("HERZHAUS_SIZE_TOLERANCE", "0"),
        ("HERZHAUS_NODES_PER_OCTAVE", "2"),
    ],
)
def test_invalid_settings_are_rejected(monkeypatch, tmp_path, name, value):
    monkeypatch.setenv("HERZHAUS_OUTPUT_DIR", str(tmp_path))
    monkeypatch.setenv(name, value)
    with pytest.raises(ValueError, match=name):
        Config()
