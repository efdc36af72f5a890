from .benchmarks import (EulerSmcController, EulerSmcGains, GeometricController, GeometricGains,
                         QuatPdController, QuatPdGains)
from .proposed import (AttitudeReference, AttitudeSmcGains, ControllerOutput, KappaChain,
                       PositionSmcGains, ProposedController)

CONTROLLERS = ("proposed", "geometric", "euler-smc", "quat-pd")


def make_controller(name: str, believed, gains: dict | None = None):
    """Instantiate a controller by id; ``gains`` maps gain-class field names to 3-tuples."""
    gains = dict(gains or {})
    allowed = {
        "proposed": {"lam_xi", "K_xi", "lam_q", "K_q"},
        "quat-pd": {"lam_xi", "K_xi", "K_q", "K_w"},
        "geometric": {"K_xi", "K_v", "K_j", "K_R", "K_w"},
        "euler-smc": {"lam_xi", "K_xi", "lam_phi", "K_phi"},
    }
    if name not in allowed:
        raise ValueError(f"unknown controller {name!r}; valid ids: {', '.join(CONTROLLERS)}")
    unknown = set(gains) - allowed[name]
    if unknown:
        raise ValueError(f"unknown gain keys for {name}: {sorted(unknown)}")
    if name == "proposed":
        return ProposedController(
            believed,
            PositionSmcGains(**_pick(gains, "lam_xi", "K_xi", rename={"lam_xi": "lam", "K_xi": "K"})),
            AttitudeSmcGains(**_pick(gains, "lam_q", "K_q", rename={"lam_q": "lam", "K_q": "K"})),
        )
    if name == "quat-pd":
        return QuatPdController(
            believed,
            PositionSmcGains(**_pick(gains, "lam_xi", "K_xi", rename={"lam_xi": "lam", "K_xi": "K"})),
            QuatPdGains(**_pick(gains, "K_q", "K_w")),
        )
    if name == "geometric":
        return GeometricController(believed, GeometricGains(**_pick(gains, "K_xi", "K_v", "K_j", "K_R", "K_w")))
    return EulerSmcController(believed, EulerSmcGains(**_pick(gains, "lam_xi", "K_xi", "lam_phi", "K_phi")))


def _pick(gains, *keys, rename=None):
    rename = rename or {}
    return {rename.get(k, k): tuple(float(x) for x in gains[k]) for k in keys if k in gains}
