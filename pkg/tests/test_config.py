import pytest

from utils.config import RunConfig, load_run_config, parse_grid
from utils.errors import ValidationError
from utils.rng import DEFAULT_SEED


@pytest.fixture
def isolated(tmp_path, monkeypatch, clean_env):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_defaults(isolated):
    config = load_run_config(overrides={"seed": None})
    assert config == RunConfig()
    assert config.seed == DEFAULT_SEED
    assert config.track == "oval-short"
    assert config.mode == "am"


def test_dotenv_file_and_overrides(isolated):
    path = isolated / "run.env"
    path.write_text("RACEAM_SEED=7\nRACEAM_MODE=penalty\nRACEAM_GRID=4,5,8\nRACEAM_ITERS=1000\n",
                    encoding="utf-8")
    config = load_run_config(str(path), {"seed": 9, "out": "elsewhere"})
    assert config.seed == 9
    assert config.mode == "penalty"
    assert config.grid == (4, 5, 8)
    assert config.iters == 1000
    assert config.out == "elsewhere"


def test_environment_variables(isolated, monkeypatch):
    monkeypatch.setenv("RACEAM_MU_MAX", "1.0")
    monkeypatch.setenv("RACEAM_TRACK", "track-a-like")
    config = load_run_config()
    assert config.mu_max == 1.0
    assert config.track == "track-a-like"


@pytest.mark.parametrize("text", ["RACEAM_SEED=abc\n", "RACEAM_MODE=soft\n", "RACEAM_GRID=3,3\n",
                                  "RACEAM_MU_MAX=-1\n"])
def test_bad_values(isolated, text):
    path = isolated / "run.env"
    path.write_text(text, encoding="utf-8")
    with pytest.raises(ValidationError):
        load_run_config(str(path))


def test_missing_config_file(isolated):
    with pytest.raises(ValidationError):
        load_run_config(str(isolated / "missing.env"))


def test_parse_grid():
    assert parse_grid("64,64,72") == (64, 64, 72)
    for text in ("64,64", "a,b,c", "1,5,5"):
        with pytest.raises(ValidationError):
            parse_grid(text)


def test_require(isolated):
    config = RunConfig(table=str(isolated / "none.ambt"))
    with pytest.raises(ValidationError):
        config.require("table")
    with pytest.raises(ValidationError):
        config.require("checkpoint")
    (isolated / "t.ambt").write_bytes(b"")
    assert RunConfig(table=str(isolated / "t.ambt")).require("table").endswith("t.ambt")
