"""Scenario files: a line-oriented ``key = value`` format.

Grammar
-------
::

    file    := line*
    line    := blank | comment | entry
    comment := optional spaces, then ``#`` and anything
    entry   := key spaces? ``=`` spaces? value (a trailing ``# ...`` is a comment)
    key     := section ``.`` name | name        (letters, digits, ``_``)
    value   := scalar | list | log-range | linear-range
    list    := scalar (``,`` scalar)*
    log-range    := ``log(`` lo ``,`` hi ``,`` count ``)``   geometric, inclusive
    linear-range := start ``:`` stop ``:`` step                  inclusive of stop

Every key may appear at most once. Recognised keys:

==========================  ===============================================
``name``, ``description``   free text
``protocol.family``         phase_encoding | phase_encoding_tha | decoy_tha | phase_matching
``protocol.num_bases``      number of bases M (default 2)
``protocol.nu``             Trojan-horse intensity (default 0)
``protocol.zeta_ratio``     decoy intensity over signal (decoy family)
``protocol.omega_ratio``    weakest decoy over signal (decoy family)
``protocol.n_cut``          photon-number cutoff of the decoy LPs
``device.preset``           parameter1 | parameter2
``device.p_dc`` etc.        overrides: p_dc, eta_det, xi_db_per_km, e_ali
``sweep.axis``              distance (km) | loss (total dB)
``sweep.values``            sweep positions (list or range)
``grid.mu``                 signal intensities (phase encoding, decoy)
``grid.mu0``, ``grid.mu1``  per-basis intensities (phase matching), one key
                            per basis; the search runs over their product
``methods``                 subset of sdp, coin, plob, infinite_test
``solver.gap_tol``          solver options (also gap_tol, feas_tol,
``solver.max_iter``         max_iter, cert_tol, frame_floor)
``output.path``             CSV destination (the ``--out`` flag wins)
==========================  ===============================================

Errors are reported as :class:`ConfigError` with the offending line number.
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field, replace

from .channel import PRESETS, DeviceParams, device_preset
from .pipeline import METHODS, ProtocolChoice
from .rates import log_grid
from .solver import SolverOptions
from .states import Family

_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*(\.[A-Za-z_][A-Za-z0-9_]*)?$")
_LOG = re.compile(r"^log\(\s*([^,]+),\s*([^,]+),\s*([^,)]+)\)$")
_DEVICE_FIELDS = ("p_dc", "eta_det", "xi_db_per_km", "e_ali")
_SOLVER_FIELDS = ("gap_tol", "feas_tol", "max_iter", "cert_tol", "frame_floor")
_AXES = ("distance", "loss")


class ConfigError(ValueError):
    """Malformed scenario; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass
class Scenario:
    """A sweep: protocol, device, axis, intensity grid, methods and options."""

    name: str
    protocol: ProtocolChoice
    device: DeviceParams
    device_preset: str | None
    axis: str
    values: tuple[float, ...]
    grids: tuple[tuple[float, ...], ...]
    methods: tuple[str, ...] = METHODS
    solver: SolverOptions = field(default_factory=SolverOptions)
    output: str | None = None
    description: str = ""

    def __post_init__(self):
        if not self.values:
            raise ConfigError("sweep.values is empty")
        if not self.methods:
            raise ConfigError("methods is empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r}; known: {', '.join(METHODS)}")
        if self.axis not in _AXES:
            raise ConfigError(f"sweep.axis must be one of {_AXES}")
        if len(self.grids) != self.protocol.grid_width:
            raise ConfigError(f"need {self.protocol.grid_width} intensity grid(s) for {self.protocol.family.value}")
        for g in self.grids:
            if not g:
                raise ConfigError("intensity grid is empty")
            if any(not (v > 0 and math.isfinite(v)) for v in g):
                raise ConfigError("grid intensities must be positive")

    def search_grid(self) -> list[tuple[float, ...]]:
        """All grid points, last intensity varying fastest."""
        return [tuple(p) for p in itertools.product(*self.grids)]

    def to_config(self) -> str:
        """Serialise to the config grammar; :func:`parse_config` inverts it."""
        lines = [f"name = {self.name}"]
        if self.description:
            lines.append(f"description = {self.description}")
        pc = self.protocol
        lines += [
            f"protocol.family = {pc.family.value}",
            f"protocol.num_bases = {pc.num_bases}",
            f"protocol.nu = {pc.nu!r}",
        ]
        if pc.family is Family.DECOY_THA:
            lines += [
                f"protocol.zeta_ratio = {pc.zeta_ratio!r}",
                f"protocol.omega_ratio = {pc.omega_ratio!r}",
                f"protocol.n_cut = {pc.n_cut}",
            ]
        base = device_preset(self.device_preset) if self.device_preset else None
        if self.device_preset:
            lines.append(f"device.preset = {self.device_preset}")
        for name in _DEVICE_FIELDS:
            v = getattr(self.device, name)
            if base is None or getattr(base, name) != v:
                lines.append(f"device.{name} = {v!r}")
        lines.append(f"sweep.axis = {self.axis}")
        lines.append("sweep.values = " + _fmt_list(self.values))
        if pc.family is Family.PHASE_MATCHING:
            for k, g in enumerate(self.grids):
                lines.append(f"grid.mu{k} = " + _fmt_list(g))
        else:
            lines.append("grid.mu = " + _fmt_list(self.grids[0]))
        lines.append("methods = " + ", ".join(self.methods))
        default = SolverOptions()
        for name in _SOLVER_FIELDS:
            v = getattr(self.solver, name)
            if v != getattr(default, name):
                lines.append(f"solver.{name} = {v!r}")
        if self.output:
            lines.append(f"output.path = {self.output}")
        return "\n".join(lines) + "\n"


def _fmt_list(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def _number(text: str, line: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"expected a number, got {text.strip()!r}", line) from None


def _integer(text: str, line: int) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"expected an integer, got {text.strip()!r}", line) from None


def parse_values(text: str, line: int = 0) -> tuple[float, ...]:
    """Parse a list, ``log(lo, hi, n)`` or ``start:stop:step``."""
    text = text.strip()
    m = _LOG.match(text)
    if m:
        lo, hi = _number(m.group(1), line), _number(m.group(2), line)
        n = _integer(m.group(3).strip(), line)
        try:
            return tuple(log_grid(lo, hi, n))
        except ValueError as exc:
            raise ConfigError(str(exc), line) from None
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError("a range needs start:stop:step", line)
        start, stop, step = (_number(p, line) for p in parts)
        if step <= 0 or stop < start:
            raise ConfigError("a range needs step > 0 and stop >= start", line)
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + k * step for k in range(count))
    if not text:
        return ()
    return tuple(_number(p, line) for p in text.split(","))


def _entries(text: str) -> dict[str, tuple[str, int]]:
    entries: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not _KEY.match(key):
            raise ConfigError(f"malformed key {key!r}", lineno)
        if key in entries:
            raise ConfigError(f"duplicate key {key!r} (first set on line {entries[key][1]})", lineno)
        entries[key] = (value, lineno)
    return entries


def parse_config(text: str) -> Scenario:
    """Parse scenario text; raises :class:`ConfigError` with a line number."""
    entries = _entries(text)
    used: set[str] = set()

    def take(key, default=None, required=False):
        if key in entries:
            used.add(key)
            return entries[key]
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default, 0

    family_text, ln = take("protocol.family", required=True)
    try:
        family = Family(family_text)
    except ValueError:
        known = ", ".join(f.value for f in Family)
        raise ConfigError(f"unknown protocol family {family_text!r}; known: {known}", ln) from None

    proto_kwargs = {}
    for key, conv in (("num_bases", _integer), ("nu", _number), ("zeta_ratio", _number),
                      ("omega_ratio", _number), ("n_cut", _integer)):
        value, ln = take(f"protocol.{key}")
        if value is not None:
            proto_kwargs[key] = conv(value, ln)
    try:
        protocol = ProtocolChoice(family, **proto_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc), ln) from None

    preset, ln = take("device.preset")
    if preset is not None and preset not in PRESETS:
        raise ConfigError(f"unknown device preset {preset!r}; known: {', '.join(sorted(PRESETS))}", ln)
    overrides = {}
    for name in _DEVICE_FIELDS:
        value, ln2 = take(f"device.{name}")
        if value is not None:
            overrides[name] = _number(value, ln2)
    if preset is None and not {"p_dc", "eta_det"} <= set(overrides):
        raise ConfigError("device needs a preset or both device.p_dc and device.eta_det")
    try:
        device = replace(device_preset(preset), **overrides) if preset else DeviceParams(**overrides)
    except ValueError as exc:
        raise ConfigError(str(exc), ln) from None

    axis, ln = take("sweep.axis", "distance")
    if axis not in _AXES:
        raise ConfigError(f"sweep.axis must be one of {', '.join(_AXES)}", ln)
    values_text, ln = take("sweep.values", required=True)
    values = parse_values(values_text, ln)
    if not values:
        raise ConfigError("sweep.values is empty", ln)

    if family is Family.PHASE_MATCHING:
        grids = []
        for k in range(protocol.num_bases):
            g_text, ln = take(f"grid.mu{k}", required=True)
            grids.append(parse_values(g_text, ln))
    else:
        g_text, ln = take("grid.mu", required=True)
        grids = [parse_values(g_text, ln)]

    methods_text, ln = take("methods", ",".join(METHODS))
    methods = tuple(m.strip() for m in methods_text.split(",") if m.strip())
    if not methods:
        raise ConfigError("methods is empty", ln)

    solver_kwargs = {}
    for name in _SOLVER_FIELDS:
        value, ln2 = take(f"solver.{name}")
        if value is not None:
            solver_kwargs[name] = _integer(value, ln2) if name == "max_iter" else _number(value, ln2)

    name, _ = take("name", "scenario")
    description, _ = take("description", "")
    output, _ = take("output.path")

    unknown = sorted(set(entries) - used, key=lambda k: entries[k][1])
    if unknown:
        key = unknown[0]
        raise ConfigError(f"unknown key {key!r}", entries[key][1])
    try:
        return Scenario(name, protocol, device, preset, axis, values, tuple(grids), methods,
                        SolverOptions(**solver_kwargs), output, description)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


__all__ = ["ConfigError", "Scenario", "parse_config", "parse_values", "load_config"]
