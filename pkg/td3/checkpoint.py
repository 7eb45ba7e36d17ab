"""
Checkpoint Module
Binary TD3 checkpoints (little-endian):

    magic "TD3C" | version u32 | obs_dim u32 | action_dim u32 | n_hidden u32
    | hidden sizes u32 x n_hidden | iteration u64 | updates u64
    | rng-state JSON length u32 | rng-state JSON (UTF-8)
    | six networks' parameters f64 (actor, actor target, critic 1, critic 2,
      critic 1 target, critic 2 target; each W then b per layer)
    | per optimizer (actor, critic 1, critic 2): step u64, first then second
      moments f64
"""

import json
import struct

import numpy as np

from utils.atomic import write_bytes_atomic
from utils.errors import TableFormatError, ValidationError
from utils.rng import generator_state, restore_generator

from .agent import TD3Agent
from .networks import NetworkSpec

MAGIC = b"TD3C"
FORMAT_VERSION = 1
HEAD = struct.Struct("<4sIIII")
COUNTERS = struct.Struct("<QQ")
U32 = struct.Struct("<I")
U64 = struct.Struct("<Q")


def dump_checkpoint(agent, iteration=0, rng_states=None):
    """Serialize an agent; rng_states maps names to numpy Generators to store."""
    spec = agent.spec
    states = {"target-noise": generator_state(agent.noise_rng)}
    for name, rng in (rng_states or {}).items():
        states[name] = generator_state(rng)
    blob = json.dumps(states, sort_keys=True).encode("utf-8")

    parts = [
        HEAD.pack(MAGIC, FORMAT_VERSION, spec.obs_dim, spec.action_dim, len(spec.hidden)),
        struct.pack(f"<{len(spec.hidden)}I", *spec.hidden),
        COUNTERS.pack(int(iteration), int(agent.updates)),
        U32.pack(len(blob)),
        blob,
    ]
    for net in agent.networks:
        parts.extend(p.astype("<f8").tobytes() for p in net.params)
    for opt in agent.optimizers:
        parts.append(U64.pack(opt.t))
        parts.extend(m.astype("<f8").tobytes() for m in opt.moments)
    return b"".join(parts)


def save_checkpoint(agent, path, iteration=0, rng_states=None):
    write_bytes_atomic(path, dump_checkpoint(agent, iteration, rng_states))


class _Reader:
    def __init__(self, payload, source):
        self.payload, self.offset, self.source = payload, 0, source

    def take(self, n):
        if self.offset + n > len(self.payload):
            raise TableFormatError(f"checkpoint {self.source} is truncated")
        chunk = self.payload[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt):
        return fmt.unpack(self.take(fmt.size))

    def array(self, shape):
        n = int(np.prod(shape))
        return np.frombuffer(self.take(8 * n), dtype="<f8").reshape(shape).astype(float)


def parse_checkpoint(payload, spec=None, config=None, source="<bytes>"):
    """
    Decode a checkpoint into a TD3Agent.

    Returns:
    --------
    tuple
        (agent, {"iteration": int, "rng": {name: Generator}})

    Raises:
    -------
    TableFormatError
        On bad magic, version or truncation
    ValidationError
        When the stored dimensions differ from the expected network spec
    """
    reader = _Reader(payload, source)
    magic, version, obs_dim, action_dim, n_hidden = reader.unpack(HEAD)
    if magic != MAGIC:
        raise TableFormatError(f"{source} is not a TD3 checkpoint (magic {magic!r})")
    if version != FORMAT_VERSION:
        raise TableFormatError(f"unsupported checkpoint version {version} in {source}")
    hidden = struct.unpack(f"<{n_hidden}I", reader.take(4 * n_hidden))
    stored = NetworkSpec(obs_dim, action_dim, tuple(hidden))
    if spec is not None and spec != stored:
        raise ValidationError(
            f"checkpoint {source} has dimensions obs={obs_dim}, action={action_dim}, hidden={hidden}; "
            f"expected obs={spec.obs_dim}, action={spec.action_dim}, hidden={spec.hidden}"
        )
    iteration, updates = reader.unpack(COUNTERS)
    (blob_len,) = reader.unpack(U32)
    try:
        states = json.loads(reader.take(blob_len).decode("utf-8"))
        generators = {name: restore_generator(state) for name, state in states.items()}
    except (ValueError, KeyError, TypeError, AttributeError) as e:
        raise TableFormatError(f"corrupted RNG state in checkpoint {source}: {e}") from None

    agent = TD3Agent(stored, config)
    for net in agent.networks:
        net.set_parameters([reader.array(p.shape) for p in net.params])
    for opt, net in zip(agent.optimizers, (agent.actor, agent.critic_1, agent.critic_2)):
        (t,) = reader.unpack(U64)
        opt.load_moments([reader.array(p.shape) for p in net.params * 2], t)
    if reader.offset != len(payload):
        raise TableFormatError(f"checkpoint {source} has {len(payload) - reader.offset} trailing bytes")

    agent.updates = int(updates)
    if "target-noise" in generators:
        agent.noise_rng = generators.pop("target-noise")
    return agent, {"iteration": int(iteration), "rng": generators}


def load_checkpoint(path, spec=None, config=None):
    try:
        with open(path, "rb") as handle:
            payload = handle.read()
    except OSError as e:
        raise ValidationError(f"cannot read checkpoint {path}: {e}") from e
    return parse_checkpoint(payload, spec=spec, config=config, source=str(path))
