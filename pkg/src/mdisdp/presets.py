"""Built-in scenarios, one or more per reproduced figure, written in the config grammar.

Grids are coarse on purpose: each sweep finishes in minutes on one core.
The device presets ``parameter1`` and ``parameter2`` are listed alongside.
"""
from __future__ import annotations

from .channel import PRESETS
from .config import Scenario, parse_config

_PHASE_GRID = "log(0.001, 0.5, 12)"
_DISTANCES = "0:100:10"

SCENARIO_TEXT: dict[str, str] = {
    "fig2": f"""
name = fig2
description = three-basis phase encoding against distance (compare with fig2_two_bases)
protocol.family = phase_encoding
protocol.num_bases = 3
device.preset = parameter1
sweep.axis = distance
sweep.values = {_DISTANCES}
grid.mu = {_PHASE_GRID}
methods = sdp, plob
""",
    "fig2_two_bases": f"""
name = fig2_two_bases
description = two-basis phase encoding against distance with the coin baseline
protocol.family = phase_encoding
protocol.num_bases = 2
device.preset = parameter1
sweep.axis = distance
sweep.values = {_DISTANCES}
grid.mu = {_PHASE_GRID}
methods = sdp, coin, plob
""",
    "fig3": f"""
name = fig3
description = phase encoding with Trojan-horse light nu = 1e-4, SDP against coin
protocol.family = phase_encoding_tha
protocol.num_bases = 2
protocol.nu = 1e-4
device.preset = parameter1
sweep.axis = distance
sweep.values = {_DISTANCES}
grid.mu = {_PHASE_GRID}
methods = sdp, coin, plob
""",
    "fig3_nu0": f"""
name = fig3_nu0
description = phase encoding with the Trojan-horse model switched off (nu = 0)
protocol.family = phase_encoding_tha
protocol.num_bases = 2
protocol.nu = 0
device.preset = parameter1
sweep.axis = distance
sweep.values = 0:50:25
grid.mu = {_PHASE_GRID}
methods = sdp, coin, plob
""",
    "fig4": """
name = fig4
description = decoy-state protocol with Trojan-horse light nu = 1e-4, SDP against coin
protocol.family = decoy_tha
protocol.nu = 1e-4
protocol.zeta_ratio = 0.3333333333333333
protocol.omega_ratio = 0.001
protocol.n_cut = 12
device.preset = parameter1
sweep.axis = distance
sweep.values = 0:150:25
grid.mu = log(0.05, 0.8, 7)
methods = sdp, coin, plob
""",
    "fig5": f"""
name = fig5
description = coherent-state phase encoding for the crossover with fig5_decoy
protocol.family = phase_encoding
protocol.num_bases = 2
device.preset = parameter1
sweep.axis = distance
sweep.values = 0:120:10
grid.mu = {_PHASE_GRID}
methods = sdp, plob
""",
    "fig5_decoy": """
name = fig5_decoy
description = decoy-state protocol without Trojan-horse light for the crossover with fig5
protocol.family = decoy_tha
protocol.nu = 0
device.preset = parameter1
sweep.axis = distance
sweep.values = 0:120:10
grid.mu = log(0.05, 0.8, 7)
methods = sdp, plob
""",
    "fig6a_two_states": """
name = fig6a_two_states
description = phase matching with two test states, loss only, against the repeaterless bound
protocol.family = phase_matching
protocol.num_bases = 2
device.p_dc = 0
device.eta_det = 1
device.e_ali = 0
sweep.axis = loss
sweep.values = 20:55:5
grid.mu0 = log(0.002, 0.02, 5)
grid.mu1 = 0.05, 0.1, 0.2, 0.4
methods = sdp, plob, infinite_test
""",
    "fig6b": """
name = fig6b
description = phase matching with four test states on Parameter 2 against the repeaterless bound
protocol.family = phase_matching
protocol.num_bases = 3
device.preset = parameter2
sweep.axis = loss
sweep.values = 40:70:5
grid.mu0 = 0.002, 0.004, 0.008
grid.mu1 = 0.1, 0.2
grid.mu2 = 0.1, 0.2
methods = sdp, plob
""",
}

DEVICE_DESCRIPTIONS = {
    "parameter1": "device preset: p_dc = 6.02e-6, eta_det = 14.5%, 0.2 dB/km, e_ali = 1.5%",
    "parameter2": "device preset: p_dc = 5e-8, eta_det = 85%, 0.2 dB/km, e_ali = 1.5%",
}


def scenario(name: str) -> Scenario:
    """Parse a built-in scenario by name."""
    try:
        return parse_config(SCENARIO_TEXT[name])
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(sorted(SCENARIO_TEXT))}") from None


def presets() -> list[tuple[str, str]]:
    """``(name, description)`` for every scenario and device preset."""
    out = [(name, scenario(name).description) for name in SCENARIO_TEXT]
    out += [(name, DEVICE_DESCRIPTIONS[name]) for name in sorted(PRESETS)]
    return out
