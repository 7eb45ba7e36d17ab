import numpy as np
import pytest

from td3.agent import TD3Agent, TD3Config
from td3.checkpoint import MAGIC, dump_checkpoint, load_checkpoint, parse_checkpoint, save_checkpoint
from td3.networks import NetworkSpec
from td3.replay import Batch
from utils.errors import TableFormatError, ValidationError
from utils.rng import SeededRNG

SPEC = NetworkSpec(obs_dim=4, action_dim=2, hidden=(8, 6))


@pytest.fixture
def trained():
    rng = SeededRNG(9)
    agent = TD3Agent(SPEC, TD3Config(), rng)
    data = np.random.default_rng(0)
    batch = Batch(
        obs=data.uniform(-1, 1, (16, 4)),
        actions=data.uniform(-1, 1, (16, 2)),
        rewards=data.normal(size=16),
        next_obs=data.uniform(-1, 1, (16, 4)),
        dones=np.zeros(16),
    )
    for _ in range(3):
        agent.update(batch)
    explore = rng.stream("explore")
    explore.normal(size=5)
    return agent, {"explore": explore}


def test_round_trip(tmp_path, trained):
    agent, streams = trained
    path = str(tmp_path / "checkpoint.td3c")
    save_checkpoint(agent, path, iteration=1234, rng_states=streams)
    restored, extra = load_checkpoint(path, spec=SPEC)

    assert extra["iteration"] == 1234
    assert restored.updates == agent.updates == 3
    for a, b in zip(agent.networks, restored.networks):
        for p, q in zip(a.params, b.params):
            np.testing.assert_array_equal(p, q)
    for a, b in zip(agent.optimizers, restored.optimizers):
        assert a.t == b.t
        for m, n in zip(a.moments, b.moments):
            np.testing.assert_array_equal(m, n)

    assert dump_checkpoint(restored, extra["iteration"], extra["rng"]) == dump_checkpoint(agent, 1234, streams)
    np.testing.assert_array_equal(extra["rng"]["explore"].normal(size=3), streams["explore"].normal(size=3))
    np.testing.assert_array_equal(restored.noise_rng.normal(size=3), agent.noise_rng.normal(size=3))


def test_layout_starts_with_magic(trained):
    assert dump_checkpoint(trained[0])[:4] == MAGIC


def test_dimension_mismatch(trained):
    payload = dump_checkpoint(trained[0])
    with pytest.raises(ValidationError):
        parse_checkpoint(payload, spec=NetworkSpec(obs_dim=5, hidden=(8, 6)))


def test_corrupted_payloads(trained):
    payload = dump_checkpoint(trained[0])
    with pytest.raises(TableFormatError):
        parse_checkpoint(b"NOPE" + payload[4:])
    with pytest.raises(TableFormatError):
        parse_checkpoint(payload[:-1])
    with pytest.raises(TableFormatError):
        parse_checkpoint(payload + b"\x00")
    with pytest.raises(TableFormatError):
        parse_checkpoint(payload[:4] + (7).to_bytes(4, "little") + payload[8:])


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_checkpoint(str(tmp_path / "none.td3c"))
