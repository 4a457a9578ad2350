"""V2V message-stream attacks.

An attack is a 3-tuple of operation (mutate / fabricate / suppress),
frequency pattern (continuous / cluster / discrete), and a bias shape
for the payload deviation. Compiled against a step index it yields one
``V2VMessage`` per control step; outside the attack window or outside
the pattern's active steps the message is the benign one.

The bias clock starts at attack onset, so time-varying biases produce
the same deviation trajectory wherever the attack is placed in a run.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError


class Operation(enum.Enum):
    MUTATION = "mutation"
    FABRICATION = "fabrication"
    DELIVERY_PREVENTION = "delivery-prevention"


class PatternKind(enum.Enum):
    CONTINUOUS = "continuous"
    CLUSTER = "cluster"
    DISCRETE = "discrete"


class BiasShape(enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    SINUSOIDAL = "sinusoidal"
    RANDOM_UNIFORM = "random-uniform"


class ImpactLabel(enum.Enum):
    COLLISION = "collision"
    EFFICIENCY_DEGRADATION = "efficiency-degradation"
    INSTABILITY = "instability"


DEFAULT_DISCRETE_PERIOD = 5.0  # s, one poisoned message per period


@dataclass(frozen=True)
class V2VMessage:
    step_index: int
    payload_a_p: float
    delivered: bool = True
    fabricated: bool = False


@dataclass(frozen=True)
class FrequencyPattern:
    kind: PatternKind
    period: float | None = None  # s, cluster/discrete cadence
    burst: float | None = None   # s, cluster on-time

    def __post_init__(self):
        if self.kind is PatternKind.CLUSTER:
            if self.period is None or self.burst is None:
                raise ConfigError("cluster pattern needs period and burst")
            if not 0 < self.burst < self.period:
                raise ConfigError("cluster burst must lie in (0, period)")
        elif self.kind is PatternKind.DISCRETE:
            if self.period is None or self.period <= 0:
                raise ConfigError("discrete pattern needs a positive period")


@dataclass(frozen=True)
class BiasFunction:
    shape: BiasShape
    b: float = 0.0      # m/s^2 magnitude (amplitude for sinusoidal)
    f: float = 0.0      # rad/s, sinusoidal angular frequency
    lo: float = 0.0     # random-uniform support
    hi: float = 0.0
    sign: int = +1      # applied to the whole bias term

    def __post_init__(self):
        if self.shape is BiasShape.SINUSOIDAL and not self.f > 0:
            raise ConfigError("sinusoidal bias needs f > 0")
        if self.shape is BiasShape.RANDOM_UNIFORM and self.lo > self.hi:
            raise ConfigError("random-uniform bias needs lo <= hi")
        if self.sign not in (+1, -1):
            raise ConfigError("bias sign must be +1 or -1")


@dataclass(frozen=True)
class AttackSpec:
    operation: Operation
    pattern: FrequencyPattern
    bias: BiasFunction | None = None
    start: float = 0.0          # s, attack window
    end: float | None = None    # s, None means until end of run
    impact_label: ImpactLabel | None = None
    rng_seed: int = 0

    def __post_init__(self):
        if self.end is not None and not self.start < self.end:
            raise ConfigError("attack window needs start < end")
        if self.operation is not Operation.DELIVERY_PREVENTION and self.bias is None:
            raise ConfigError(f"{self.operation.value} attack needs a bias function")


def pattern_active(pattern: FrequencyPattern, t_attack: float, dt: float) -> bool:
    """Whether the pattern is on at ``t_attack`` seconds past onset."""
    if t_attack < 0:
        return False
    if pattern.kind is PatternKind.CONTINUOUS:
        return True
    if pattern.kind is PatternKind.CLUSTER:
        return math.fmod(t_attack, pattern.period) < pattern.burst
    # Discrete: only the single step nearest each multiple of the period.
    k = round(t_attack / dt)
    m = round(t_attack / pattern.period)
    return k == round(m * pattern.period / dt)


def bias_value(bias: BiasFunction, t_attack: float, rng_seed: int,
               step_index: int) -> float:
    """Signed payload deviation at ``t_attack`` seconds past onset."""
    if bias.shape is BiasShape.CONSTANT:
        mag = bias.b
    elif bias.shape is BiasShape.LINEAR:
        mag = bias.b * t_attack
    elif bias.shape is BiasShape.SINUSOIDAL:
        mag = bias.b * math.sin(bias.f * t_attack)
    else:
        # Counter-based draw: deterministic per (seed, step), order-free.
        mag = float(np.random.default_rng([rng_seed, step_index]).uniform(bias.lo, bias.hi))
    return bias.sign * mag


def apply_attack(spec: AttackSpec, step_index: int, a_p_true: float,
                 dt: float) -> V2VMessage:
    """Transform one benign payload into the attacked message."""
    t = step_index * dt
    t_attack = t - spec.start
    in_window = t_attack >= 0 and (spec.end is None or t <= spec.end)
    if not in_window or not pattern_active(spec.pattern, t_attack, dt):
        return V2VMessage(step_index, a_p_true)

    if spec.operation is Operation.DELIVERY_PREVENTION:
        return V2VMessage(step_index, a_p_true, delivered=False)

    dev = bias_value(spec.bias, t_attack, spec.rng_seed, step_index)
    if spec.operation is Operation.FABRICATION:
        return V2VMessage(step_index, dev, fabricated=True)
    return V2VMessage(step_index, a_p_true + dev)


def attack_active(spec: AttackSpec | None, step_index: int, dt: float) -> bool:
    """Ground-truth activity label, independent of any detector."""
    if spec is None:
        return False
    t = step_index * dt
    t_attack = t - spec.start
    if t_attack < 0 or (spec.end is not None and t > spec.end):
        return False
    return pattern_active(spec.pattern, t_attack, dt)


def nday_preset(name: str) -> AttackSpec:
    """Instances of well-known attacks expressed in the taxonomy."""
    key = name.strip().lower()
    if key == "mitm":
        return AttackSpec(
            operation=Operation.MUTATION,
            pattern=FrequencyPattern(PatternKind.CONTINUOUS),
            bias=BiasFunction(BiasShape.SINUSOIDAL, b=0.8, f=0.05),
            impact_label=ImpactLabel.INSTABILITY,
        )
    if key == "jamming":
        # Channel jammed 2 s out of every 20 s.
        return AttackSpec(
            operation=Operation.DELIVERY_PREVENTION,
            pattern=FrequencyPattern(PatternKind.CLUSTER, period=20.0, burst=2.0),
            impact_label=ImpactLabel.EFFICIENCY_DEGRADATION,
        )
    if key == "flooding":
        # Junk packets displace legitimate ones in 2 s bursts every 10 s;
        # modeled as delivery loss with the junk marked fabricated.
        return AttackSpec(
            operation=Operation.DELIVERY_PREVENTION,
            pattern=FrequencyPattern(PatternKind.CLUSTER, period=10.0, burst=2.0),
            impact_label=ImpactLabel.EFFICIENCY_DEGRADATION,
        )
    raise ConfigError(f"unknown n-day preset: {name!r}")


def apply_flooding_marker(spec: AttackSpec, msg: V2VMessage) -> V2VMessage:
    """Mark suppressed messages as displaced by fabricated traffic."""
    if spec.operation is Operation.DELIVERY_PREVENTION and not msg.delivered:
        return V2VMessage(msg.step_index, msg.payload_a_p, delivered=False,
                          fabricated=True)
    return msg


# --- JSON (de)serialization -------------------------------------------------

def spec_to_dict(spec: AttackSpec) -> dict:
    out = {
        "operation": spec.operation.value,
        "pattern": {"kind": spec.pattern.kind.value},
        "start": spec.start,
        "end": spec.end,
        "seed": spec.rng_seed,
    }
    if spec.pattern.period is not None:
        out["pattern"]["period"] = spec.pattern.period
    if spec.pattern.burst is not None:
        out["pattern"]["burst"] = spec.pattern.burst
    if spec.bias is not None:
        out["bias"] = {
            "shape": spec.bias.shape.value,
            "sign": "+" if spec.bias.sign > 0 else "-",
            "b": spec.bias.b,
            "f": spec.bias.f,
            "lo": spec.bias.lo,
            "hi": spec.bias.hi,
        }
    if spec.impact_label is not None:
        out["impact_label"] = spec.impact_label.value
    return out


def spec_from_dict(data: dict) -> AttackSpec:
    try:
        pattern = FrequencyPattern(
            kind=PatternKind(data["pattern"]["kind"]),
            period=data["pattern"].get("period"),
            burst=data["pattern"].get("burst"),
        )
        bias = None
        if "bias" in data and data["bias"] is not None:
            braw = data["bias"]
            bias = BiasFunction(
                shape=BiasShape(braw["shape"]),
                b=braw.get("b", 0.0),
                f=braw.get("f", 0.0),
                lo=braw.get("lo", 0.0),
                hi=braw.get("hi", 0.0),
                sign=+1 if braw.get("sign", "+") == "+" else -1,
            )
        label = data.get("impact_label")
        return AttackSpec(
            operation=Operation(data["operation"]),
            pattern=pattern,
            bias=bias,
            start=data.get("start", 0.0),
            end=data.get("end"),
            impact_label=ImpactLabel(label) if label else None,
            rng_seed=data.get("seed", 0),
        )
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad attack spec: {exc}") from exc


def load_campaign_file(path) -> dict[str, AttackSpec]:
    """A campaign file is a JSON array of named attack specs."""
    with open(path) as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ConfigError("campaign file must be a JSON array of named specs")
    out = {}
    for i, entry in enumerate(raw):
        if "name" not in entry:
            raise ConfigError(f"campaign entry {i} missing 'name'")
        out[entry["name"]] = spec_from_dict(entry)
    return out
