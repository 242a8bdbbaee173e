"""Scenario catalog used by the command line runner.

Each scenario belongs to one subcommand, carries default parameters in
linear frequency (Hz) and seconds, and a runner that returns tables plus a
JSON-serializable summary. Runners convert to angular units internally and
rescale to a convenient time unit (ns for gates, us for open-system models)
so that the integrators work with numbers of order one.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError

TWO_PI = 2.0 * np.pi
COMMANDS = ("spectrum", "evolve", "readout", "gate", "code", "phasespace")


@dataclass
class PlotSpec:
    x: str
    y: list
    group: str | None = None
    xlabel: str | None = None
    ylabel: str | None = None
    logx: bool = False
    logy: bool = False
    kind: str = "line"  # "line" or "map"


@dataclass
class Table:
    name: str
    columns: list
    rows: list
    plot: PlotSpec | None = None


@dataclass
class RunOutput:
    tables: list
    summary: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)  # extra JSON files: name -> object


@dataclass
class Scenario:
    name: str
    command: str
    description: str
    defaults: dict
    runner: Callable
    sweep_axes: tuple = ()

    def default_config(self) -> dict:
        cfg = {"scenario": self.name}
        cfg.update(copy.deepcopy(self.defaults))
        return cfg


@dataclass
class ScenarioConfig:
    scenario: str
    command: str
    params: dict
    sweep: dict | None
    dims: dict
    tolerances: dict
    seed: int

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "command": self.command, "params": self.params, "sweep": self.sweep,
                "dims": self.dims, "tolerances": self.tolerances, "seed": self.seed}

    def axis(self) -> np.ndarray:
        return sweep_values(self.sweep)


SCENARIOS: dict = {}


def register(name, command, description, defaults, sweep_axes=()):
    def deco(fn):
        SCENARIOS[name] = Scenario(name, command, description, defaults, fn, tuple(sweep_axes))
        return fn
    return deco


def list_scenarios(command: str | None = None) -> list:
    return [s for s in SCENARIOS.values() if command is None or s.command == command]


# ----------------------------------------------------------------------------
# config validation

_TOP_KEYS = {"scenario", "params", "sweep", "dims", "tolerances", "seed"}
_SWEEP_KEYS = {"parameter", "start", "stop", "points", "values", "scale"}


def sweep_values(sweep: dict | None) -> np.ndarray:
    if sweep is None:
        return np.array([])
    if sweep.get("values") is not None:
        return np.asarray(sweep["values"], dtype=float)
    n = int(sweep["points"])
    if sweep.get("scale", "linear") == "log":
        return np.geomspace(float(sweep["start"]), float(sweep["stop"]), n)
    return np.linspace(float(sweep["start"]), float(sweep["stop"]), n)


def _check_number(key, v):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"'{key}' must be a finite number, got {v!r}")


def _merge_params(defaults: dict, given: dict, where: str) -> dict:
    out = copy.deepcopy(defaults)
    for k, v in given.items():
        if k not in defaults:
            raise ConfigError(f"unknown {where} parameter '{k}' (known: {sorted(defaults)})")
        d = defaults[k]
        if isinstance(d, bool):
            if not isinstance(v, bool):
                raise ConfigError(f"{where} parameter '{k}' must be true or false")
        elif isinstance(d, (int, float)):
            _check_number(f"{where}.{k}", v)
        elif isinstance(d, str):
            if not isinstance(v, str):
                raise ConfigError(f"{where} parameter '{k}' must be a string")
        elif isinstance(d, list):
            if not isinstance(v, list) or len(v) == 0:
                raise ConfigError(f"{where} parameter '{k}' must be a nonempty list")
            for x in v:
                if isinstance(x, str) and d and isinstance(d[0], str):
                    continue
                _check_number(f"{where}.{k}", x)
        out[k] = v
    return out


def _validate_sweep(sweep: dict, axes: tuple) -> dict:
    extra = set(sweep) - _SWEEP_KEYS
    if extra:
        raise ConfigError(f"unknown sweep keys {sorted(extra)}")
    if sweep.get("parameter") not in axes:
        raise ConfigError(f"sweep parameter {sweep.get('parameter')!r} is not one of {list(axes)}")
    if sweep.get("values") is not None:
        vals = sweep["values"]
        if not isinstance(vals, list) or len(vals) == 0:
            raise ConfigError("sweep values must be a nonempty list")
        for v in vals:
            _check_number("sweep.values", v)
        return sweep
    for k in ("start", "stop", "points"):
        if k not in sweep:
            raise ConfigError(f"sweep needs '{k}' (or an explicit 'values' list)")
        _check_number(f"sweep.{k}", sweep[k])
    if int(sweep["points"]) != sweep["points"] or sweep["points"] < 1:
        raise ConfigError(f"sweep points must be a positive integer, got {sweep['points']}")
    if sweep["points"] > 1 and sweep["start"] == sweep["stop"]:
        raise ConfigError("sweep range is empty (start == stop)")
    scale = sweep.get("scale", "linear")
    if scale not in ("linear", "log"):
        raise ConfigError(f"sweep scale must be 'linear' or 'log', got {scale!r}")
    if scale == "log" and (sweep["start"] <= 0 or sweep["stop"] <= 0):
        raise ConfigError("log sweep needs positive bounds")
    return sweep


def resolve_config(raw: dict, command: str, seed: int | None = None) -> ScenarioConfig:
    """Validate a parsed JSON config against the scenario catalog and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys {sorted(extra)}")
    name = raw.get("scenario")
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; available: {sorted(SCENARIOS)}")
    sc = SCENARIOS[name]
    if sc.command != command:
        raise ConfigError(f"scenario '{name}' belongs to '{sc.command}', not '{command}'")
    d = sc.defaults
    for key in ("params", "dims", "tolerances"):
        if key in raw and not isinstance(raw[key], dict):
            raise ConfigError(f"'{key}' must be an object")
    params = _merge_params(d.get("params", {}), raw.get("params", {}), "params")
    dims = _merge_params(d.get("dims", {}), raw.get("dims", {}), "dims")
    for k, v in dims.items():
        if int(v) != v or v < 0:
            raise ConfigError(f"dims.{k} must be a non-negative integer")
    tol = _merge_params(d.get("tolerances", {}), raw.get("tolerances", {}), "tolerances")
    sweep = None
    if d.get("sweep") is not None or raw.get("sweep") is not None:
        if "sweep" in raw and not isinstance(raw["sweep"], dict):
            raise ConfigError("'sweep' must be an object")
        sweep = dict(d.get("sweep") or {})
        given = raw.get("sweep") or {}
        if "values" in given:
            sweep = {"parameter": sweep.get("parameter")}
        sweep.update(given)
        sweep = _validate_sweep(sweep, sc.sweep_axes)
    s = raw.get("seed", 0) if seed is None else seed
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {s!r}")
    return ScenarioConfig(name, command, params, sweep, dims, tol, int(s))


# ----------------------------------------------------------------------------
# spectrum

@register("fig5", "spectrum", "Transmon levels w_j - w_0 versus offset charge for several EJ/EC at fixed plasma "
          "frequency",
          {"params": {"plasma_frequency": 5e9, "ratios": [1.0, 5.0, 10.0, 50.0], "levels": 3},
           "sweep": {"parameter": "ng", "start": -2.0, "stop": 2.0, "points": 81},
           "dims": {"ncut": 20}}, sweep_axes=("ng",))
def _fig5(cfg: ScenarioConfig) -> RunOutput:
    from .devices import TransmonParams, charge_dispersion, transmon_levels
    p = cfg.params
    nl = int(p["levels"])
    cols = ["EJ_over_EC", "ng"] + [f"f{j}0_Hz" for j in range(1, nl + 1)]
    rows, disp = [], {}
    for r in p["ratios"]:
        EC = p["plasma_frequency"] / np.sqrt(8 * r)
        for ng in cfg.axis():
            lv = transmon_levels(TransmonParams(r * EC, EC, ng=float(ng)), nl + 1, int(cfg.dims["ncut"]))
            rows.append([r, float(ng)] + list(lv[1:] / TWO_PI))
        disp[str(r)] = charge_dispersion(TransmonParams(r * EC, EC), ncut=int(cfg.dims["ncut"])) / TWO_PI
    return RunOutput([Table("levels", cols, rows, PlotSpec("ng", cols[2:], "EJ_over_EC", "offset charge ng",
                                                           "frequency (Hz)"))],
                     {"charge_dispersion_Hz": disp})


def fig9_system(p: dict, dims: dict):
    """Builder and metadata for the two-transmon bus model.

    Qubit 2 is a symmetric SQUID transmon parked by flux at ``f2_park``;
    qubit 1 is swept by its own flux. Returns (builder(flux1) -> (H, dims), f1(flux1) in Hz).
    """
    from .devices import TransmonParams, transmon_levels
    from .gates import charge_basis_bus_hamiltonian
    ncut = int(dims.get("ncut", 20))

    def f01(EJsum, EC, flux):
        lv = transmon_levels(TransmonParams(0.0, EC, EJ_sum=EJsum, flux=flux), 2, ncut)
        return lv[1] / TWO_PI

    if f01(p["EJ2"], p["EC2"], 0.0) < p["f2_park"]:
        raise ConfigError("qubit 2 cannot reach f2_park at any flux")
    flux2 = brentq(lambda f: f01(p["EJ2"], p["EC2"], f) - p["f2_park"], 0.0, 0.49, xtol=1e-13)
    q2 = TransmonParams(0.0, p["EC2"], EJ_sum=p["EJ2"], flux=flux2)

    def build(flux1):
        q1 = TransmonParams(0.0, p["EC1"], EJ_sum=p["EJ1"], flux=float(flux1))
        return charge_basis_bus_hamiltonian(q1, q2, TWO_PI * p["fr"], TWO_PI * p["g1"], TWO_PI * p["g2"],
                                            int(dims.get("transmon_levels", 5)),
                                            int(dims.get("resonator_levels", 5)), ncut)

    return build, (lambda flux1: f01(p["EJ1"], p["EC1"], float(flux1))), flux2


def fig9_anticrossings(p: dict, dims: dict) -> dict:
    """Qubit-qubit (2J) and 11-02 splittings, with the mediated-exchange estimate at the crossing."""
    from .gates import anticrossing, mediated_J
    build, f1, _ = fig9_system(p, dims)
    x1, gap1 = anticrossing(build, (1, 0, 0), (0, 1, 0), (0.0, 0.2), xatol=1e-7)
    x2, gap2 = anticrossing(build, (1, 1, 0), (0, 2, 0), (0.0, 0.4), xatol=1e-7)
    w1 = TWO_PI * f1(x1)
    J = mediated_J(TWO_PI * p["g1"], TWO_PI * p["g2"], w1 - TWO_PI * p["fr"], TWO_PI * (p["f2_park"] - p["fr"]))
    return {"flux1_qq": x1, "f1_qq_Hz": f1(x1), "gap_qq_Hz": gap1 / TWO_PI, "two_J_formula_Hz": 2 * J / TWO_PI,
            "flux1_11_02": x2, "f1_11_02_Hz": f1(x2), "zeta_gap_Hz": gap2 / TWO_PI}


_FIG9_LABELS = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (0, 2, 0), (2, 0, 0), (1, 0, 1), (0, 1, 1), (0, 0, 2)]


@register("fig9", "spectrum", "Two transmons on a bus: 1- and 2-excitation dressed levels versus qubit-1 "
          "frequency (2J and 11-02 anticrossings)",
          {"params": {"EJ1": 28.48e9, "EJ2": 42.34e9, "EC1": 317e6, "EC2": 297e6, "g1": 199e6, "g2": 190e6,
                      "fr": 7.0e9, "f2_park": 8.0e9, "anticrossings": True},
           "sweep": {"parameter": "flux1", "start": 0.0, "stop": 0.4, "points": 81},
           "dims": {"transmon_levels": 5, "resonator_levels": 5, "ncut": 20}}, sweep_axes=("flux1",))
def _fig9(cfg: ScenarioConfig) -> RunOutput:
    from .coupling import dressed_energies
    build, f1, flux2 = fig9_system(cfg.params, cfg.dims)
    cols = ["flux1", "f1_bare_Hz"] + ["E_" + "".join(map(str, l)) + "_Hz" for l in _FIG9_LABELS]
    rows = []
    for x in cfg.axis():
        H, dims = build(x)
        E = dressed_energies(H, dims)
        rows.append([float(x), f1(x)] + [(E[l] - E[0, 0, 0]) / TWO_PI for l in _FIG9_LABELS])
    summary = {"flux2": flux2}
    if cfg.params["anticrossings"]:
        summary.update(fig9_anticrossings(cfg.params, cfg.dims))
    return RunOutput([Table("levels", cols, rows, PlotSpec("f1_bare_Hz", cols[2:], None, "qubit-1 frequency (Hz)",
                                                          "dressed energy (Hz)"))], summary)


def nonlinear_pull(f01, f12, g, fr, levels, n_max, extra=12):
    """w_r,sigma(n) = E(sigma, n+1) - E(sigma, n) for a multilevel ladder with sqrt(j+1) couplings (Hz)."""
    from .coupling import dressed_energies
    nr = n_max + extra
    anh = f01 - f12
    j = np.arange(levels)
    wq = TWO_PI * (j * f01 - anh * j * (j - 1) / 2)
    a = np.diag(np.sqrt(np.arange(1, nr)), 1)
    up = np.diag(np.sqrt(np.arange(1, levels)), -1)  # |j+1><j| sqrt(j+1)
    H = np.kron(np.diag(wq), np.eye(nr)) + TWO_PI * fr * np.kron(np.eye(levels), a.T @ a)
    H = H + TWO_PI * g * (np.kron(up, a) + np.kron(up.T, a.T))
    E = dressed_energies(H, (levels, nr))
    return (E[:, 1:n_max + 2] - E[:, :n_max + 1]) / TWO_PI


@register("fig13", "spectrum", "Nonlinear cavity pull: effective resonator frequency per transmon state versus "
          "photon number for 2, 3 and 6 transmon levels",
          {"params": {"f01": 6.0e9, "f12": 5.75e9, "g": 0.1e9, "fr": 7.0e9, "levels": [2, 3, 6]},
           "sweep": {"parameter": "n_photons", "start": 0, "stop": 60, "points": 61}},
          sweep_axes=("n_photons",))
def _fig13(cfg: ScenarioConfig) -> RunOutput:
    p = cfg.params
    ns = np.unique(np.round(cfg.axis()).astype(int))
    if ns.min() < 0:
        raise ConfigError("photon numbers must be non-negative")
    rows = []
    for L in p["levels"]:
        L = int(L)
        pull = nonlinear_pull(p["f01"], p["f12"], p["g"], p["fr"], L, int(ns.max()))
        for s in range(min(L, 3)):
            for n in ns:
                rows.append([L, s, int(n), pull[s, n], pull[s, n] - p["fr"]])
    cols = ["transmon_levels", "state", "n", "f_r_sigma_Hz", "pull_Hz"]
    return RunOutput([Table("cavity_pull", cols, rows,
                            PlotSpec("n", ["pull_Hz"], "transmon_levels/state", "photon number",
                                     "f_r,sigma - f_r (Hz)"))],
                     {"ncrit": ((p["f01"] - p["fr"]) / (2 * p["g"])) ** 2})


@register("jc", "spectrum", "Jaynes-Cummings doublets versus qubit-resonator detuning",
          {"params": {"fr": 6.0e9, "g": 50e6, "n_max": 3},
           "sweep": {"parameter": "detuning", "start": -300e6, "stop": 300e6, "points": 121}},
          sweep_axes=("detuning",))
def _jc(cfg: ScenarioConfig) -> RunOutput:
    from .coupling import jc_spectrum
    p = cfg.params
    rows = []
    for D in cfg.axis():
        for n in range(1, int(p["n_max"]) + 1):
            lo, hi, _ = jc_spectrum(n, TWO_PI * D, TWO_PI * p["g"], TWO_PI * p["fr"])
            rows.append([float(D), n, lo / TWO_PI, hi / TWO_PI])
    cols = ["detuning_Hz", "n", "E_minus_Hz", "E_plus_Hz"]
    return RunOutput([Table("jc_ladder", cols, rows, PlotSpec("detuning_Hz", ["E_minus_Hz", "E_plus_Hz"], "n"))])


# ----------------------------------------------------------------------------
# evolve (open-system models; angular MHz and microseconds internally)

MHZ = TWO_PI * 1e-6  # Hz -> rad/us
_FIG8_REGIMES = {"bad-cavity": (10e6, 0.0, 1e6), "bad-qubit": (0.0, 10e6, 1e6), "strong": (0.1e6, 0.1e6, 100e6),
                 "strong-broad": (1e6, 1e6, 100e6)}


@register("fig8", "evolve", "Resonant qubit-resonator regimes: P_e(t) from |e,0> and |g,1>, and steady "
          "transmission versus drive detuning",
          {"params": {"regime": "strong", "kappa": -1.0, "gamma1": -1.0, "g": -1.0, "n_bar_kappa": 0.0,
                      "drive_photons": 0.01, "t_max": -1.0, "time_points": 401},
           "sweep": {"parameter": "drive_detuning", "start": -150e6, "stop": 150e6, "points": 601},
           "dims": {"resonator_levels": 0},
           "tolerances": {"rtol": 1e-8, "atol": 1e-10}}, sweep_axes=("drive_detuning",))
def _fig8(cfg: ScenarioConfig) -> RunOutput:
    """Negative kappa/gamma1/g/t_max mean 'take the regime preset'."""
    from .dynamics import evolve, jc_drive_frame_model, transmission_sweep
    p = cfg.params
    if p["regime"] not in _FIG8_REGIMES:
        raise ConfigError(f"regime must be one of {sorted(_FIG8_REGIMES)}")
    k0, y0, g0 = _FIG8_REGIMES[p["regime"]]
    kappa = (p["kappa"] if p["kappa"] >= 0 else k0) * MHZ
    gamma1 = (p["gamma1"] if p["gamma1"] >= 0 else y0) * MHZ
    g = (p["g"] if p["g"] > 0 else g0) * MHZ
    nbar = float(p["n_bar_kappa"])
    nr = int(cfg.dims["resonator_levels"]) or (4 if nbar == 0 else int(np.ceil(nbar + 6 * np.sqrt(nbar) + 5)))
    t_max = p["t_max"] * 1e6 if p["t_max"] > 0 else 6 * np.pi / max(kappa, gamma1, 0.05 * g) + 4 * np.pi / g
    times = np.linspace(0, t_max, int(p["time_points"]))
    model, a, sm = jc_drive_frame_model(0.0, 0.0, g, kappa, gamma1, 0.0, 0.0, nr, nbar)
    e_ops = {"Pe": sm.dag() @ sm, "n": a.dag() @ a}
    series = {}
    for label, (q, n) in (("e0", (1, 0)), ("g1", (0, 1))):
        psi = np.zeros(2 * nr, complex)
        psi[q * nr + n] = 1
        res = evolve(model, psi, times, e_ops, store_states=False, **cfg.tolerances)
        series[label] = res.expect
    t_rows = [[float(t) * 1e-6] + [float(np.real(series[s][k][i])) for s in ("e0", "g1") for k in ("Pe", "n")]
              for i, t in enumerate(times)]
    t_cols = ["t_s", "Pe_from_e0", "n_from_e0", "Pe_from_g1", "n_from_g1"]
    rate_ref = kappa if kappa > 0 else gamma1
    eps = np.sqrt(p["drive_photons"]) * rate_ref / 2
    det = cfg.axis()
    spec = transmission_sweep({"omega_r": 0.0, "omega_q": 0.0, "g": g},
                              det * MHZ, {"kappa": kappa, "gamma1": gamma1, "gamma_phi": 0.0,
                                          "n_bar_kappa": nbar}, eps, mode="master", resonator_dim=nr)
    s_rows = [[float(d), float(P), float(ph)] for d, P, ph in zip(det, spec.power / eps**2, spec.phase)]
    return RunOutput([Table("time_trace", t_cols, t_rows, PlotSpec("t_s", t_cols[1:], None, "time (s)")),
                      Table("transmission", ["drive_detuning_Hz", "A2_over_eps2", "phase"], s_rows,
                            PlotSpec("drive_detuning_Hz", ["A2_over_eps2"], None, "drive - resonator (Hz)",
                                     "|<a>|^2 / eps^2"))],
                     {"kappa_Hz": kappa / MHZ, "gamma1_Hz": gamma1 / MHZ, "g_Hz": g / MHZ, "n_bar_kappa": nbar,
                      "epsilon_Hz": eps / MHZ, "resonator_levels": nr})


@register("fig11", "evolve", "Power-broadened qubit line: closed form and master-equation steady state",
          {"params": {"rabi": [0.1e6, 0.5e6, 1.0e6], "gamma1": 0.1e6, "gamma_phi": 0.1e6, "master": True},
           "sweep": {"parameter": "qubit_detuning", "start": -3e6, "stop": 3e6, "points": 121}},
          sweep_axes=("qubit_detuning",))
def _fig11(cfg: ScenarioConfig) -> RunOutput:
    from .dynamics import lineshape_fwhm, qubit_lineshape
    p = cfg.params
    dq = cfg.axis()
    rows, fw = [], {}
    for Om in p["rabi"]:
        f = qubit_lineshape(Om * MHZ, p["gamma1"] * MHZ, p["gamma_phi"] * MHZ, dq * MHZ)
        m = (qubit_lineshape(Om * MHZ, p["gamma1"] * MHZ, p["gamma_phi"] * MHZ, dq * MHZ, mode="master")
             if p["master"] else np.full(dq.size, np.nan))
        rows += [[Om, float(d), float(a), float(b)] for d, a, b in zip(dq, f, m)]
        fw[str(Om)] = lineshape_fwhm(Om * MHZ, p["gamma1"] * MHZ, p["gamma_phi"] * MHZ) / MHZ
    cols = ["rabi_Hz", "qubit_detuning_Hz", "Pe_formula", "Pe_master"]
    return RunOutput([Table("lineshape", cols, rows, PlotSpec("qubit_detuning_Hz", ["Pe_formula", "Pe_master"],
                                                              "rabi_Hz", "drive detuning (Hz)", "P_e"))],
                     {"fwhm_Hz": fw})


@register("fig12", "evolve", "Two-tone ac-Stark spectroscopy: (a) weak dispersive with growing measurement "
          "tone, (b) number-split peaks in the strong dispersive regime",
          {"params": {"panel": "a", "chi": 0.1e6, "kappa": 0.1e6, "gamma1": 0.1e6, "rabi": 0.1e6,
                      "epsilons": [0.0, 0.2e6, 0.4e6], "delta_r": 0.0},
           "sweep": {"parameter": "spec_detuning", "start": -0.5e6, "stop": 3.5e6, "points": 101}},
          sweep_axes=("spec_detuning",))
def _fig12(cfg: ScenarioConfig) -> RunOutput:
    """Panel b preset: chi = 5 MHz, eps = 0.1 MHz with the tone at w_r - chi (delta_r = +chi)."""
    from .dynamics import two_tone_ac_stark
    p = cfg.params
    ds = cfg.axis()
    chi, kappa = p["chi"] * MHZ, p["kappa"] * MHZ
    rows, nbar = [], {}
    for e in p["epsilons"]:
        eps = e * MHZ
        dr = p["delta_r"] * MHZ
        pe = two_tone_ac_stark(chi, kappa, p["gamma1"] * MHZ, eps, dr, p["rabi"] * MHZ, ds * MHZ)
        rows += [[e, float(d), float(x)] for d, x in zip(ds, pe)]
        nbar[str(e)] = {"g": eps**2 / ((dr - chi) ** 2 + kappa**2 / 4),
                        "e": eps**2 / ((dr + chi) ** 2 + kappa**2 / 4)}
    cols = ["epsilon_Hz", "spec_detuning_Hz", "Pe"]
    return RunOutput([Table("ac_stark", cols, rows, PlotSpec("spec_detuning_Hz", ["Pe"], "epsilon_Hz",
                                                             "spectroscopy - qubit (Hz)", "P_e"))],
                     {"panel": p["panel"], "n_bar": nbar, "two_chi_Hz": 2 * p["chi"]})


FIG12B = {"params": {"panel": "b", "chi": 5e6, "epsilons": [0.1e6], "delta_r": 5e6},
          "sweep": {"parameter": "spec_detuning", "start": -5e6, "stop": 120e6, "points": 1251}}


@register("purcell", "evolve", "Excited-state decay of a dispersive qubit through the resonator",
          {"params": {"g": 10e6, "detuning": 100e6, "kappa": 1e6}})
def _purcell(cfg: ScenarioConfig) -> RunOutput:
    from .dynamics import purcell_decay_simulation
    p = cfg.params
    g, D, k = p["g"] * MHZ, p["detuning"] * MHZ, p["kappa"] * MHZ
    rate, t, pe = purcell_decay_simulation(g, D, k)
    rows = [[float(x) * 1e-6, float(y)] for x, y in zip(t, pe)]
    return RunOutput([Table("decay", ["t_s", "Pe"], rows, PlotSpec("t_s", ["Pe"], None, "time (s)", "P_e",
                                                                 logy=True))],
                     {"fitted_rate_per_s": rate * 1e6, "formula_rate_per_s": (g / D) ** 2 * k * 1e6,
                      "interpolated_rate_per_s": k * g**2 / ((k / 2) ** 2 + D**2) * 1e6})


# ----------------------------------------------------------------------------
# readout

@register("fig7", "readout", "Pointer-state paths for 2chi/kappa in {1, 10, 0.2} and SNR versus 2chi/kappa at "
          "tau_m kappa in {10, 200}",
          {"params": {"kappa": 1e6, "tau_kappa": [10.0, 200.0], "panels": [1.0, 10.0, 0.2], "eta": 1.0,
                      "time_points": 2001},
           "sweep": {"parameter": "two_chi_over_kappa", "start": 0.05, "stop": 4.0, "points": 80}},
          sweep_axes=("two_chi_over_kappa",))
def _fig7(cfg: ScenarioConfig) -> RunOutput:
    """Paths use a drive giving one steady photon for each ratio; the SNR sweep keeps the drive fixed at the
    value giving one photon at 2chi/kappa = 1."""
    from .readout import pointer_evolution, snr, snr_long_time
    p = cfg.params
    kappa = p["kappa"] * MHZ
    path_rows = []
    for r in p["panels"]:
        chi = r * kappa / 2
        eps = np.sqrt(chi**2 + kappa**2 / 4)
        t = np.linspace(0, 10 / kappa, int(p["time_points"]))
        tr = pointer_evolution(eps, 0.0, chi, kappa, t)
        path_rows += [[r, float(x) * 1e-6, a.real, a.imag, b.real, b.imag]
                      for x, a, b in zip(t, tr.alpha_g, tr.alpha_e)]
    eps = kappa / np.sqrt(2)
    rows = []
    for tk in p["tau_kappa"]:
        t = np.linspace(0, tk / kappa, int(p["time_points"]))
        for r in cfg.axis():
            tr = pointer_evolution(eps, 0.0, r * kappa / 2, kappa, t)
            rows.append([tk, float(r), snr(tr, eta=p["eta"]), snr_long_time(eps, r * kappa / 2, kappa, t[-1])])
    best = {}
    for tk in p["tau_kappa"]:
        sel = [row for row in rows if row[0] == tk]
        best[str(tk)] = max(sel, key=lambda row: row[2])[1]
    return RunOutput([Table("pointer_paths", ["two_chi_over_kappa", "t_s", "re_alpha_g", "im_alpha_g",
                                              "re_alpha_e", "im_alpha_e"], path_rows,
                            PlotSpec("re_alpha_g", ["im_alpha_g"], "two_chi_over_kappa", "Re alpha", "Im alpha")),
                      Table("snr", ["tau_kappa", "two_chi_over_kappa", "snr", "snr_long_time"], rows,
                            PlotSpec("two_chi_over_kappa", ["snr"], "tau_kappa", "2 chi / kappa", "SNR"))],
                     {"epsilon_over_kappa": 1 / np.sqrt(2), "best_two_chi_over_kappa": best})


@register("records", "readout", "Seeded synthetic heterodyne records: histograms and assignment fidelity",
          {"params": {"kappa": 1e6, "two_chi_over_kappa": 1.0, "n_photons": 1.0, "tau_kappa": 10.0, "eta": 0.5,
                      "shots": 20000, "bins": 80, "gamma1": 0.0}})
def _records(cfg: ScenarioConfig) -> RunOutput:
    from .readout import (histogram_fidelity, measurement_fidelity, pointer_evolution, snr,
                          synthesize_heterodyne_records)
    p = cfg.params
    kappa = p["kappa"] * MHZ
    chi = p["two_chi_over_kappa"] * kappa / 2
    eps = np.sqrt(p["n_photons"]) * np.sqrt(chi**2 + kappa**2 / 4)
    t = np.linspace(0, p["tau_kappa"] / kappa, 2001)
    tr = pointer_evolution(eps, 0.0, chi, kappa, t)
    if p["gamma1"] > 0:
        tr = tr.with_decay(p["gamma1"] * MHZ)
    rec = synthesize_heterodyne_records(tr, p["eta"], int(p["shots"]), seed=cfg.seed)
    edges, hg, he = rec.histograms(int(p["bins"]))
    rows = [[float(edges[k]), float(edges[k + 1]), int(hg[k]), int(he[k])] for k in range(hg.size)]
    s = snr(tr, eta=p["eta"])
    return RunOutput([Table("histogram", ["bin_left", "bin_right", "count_g", "count_e"], rows,
                            PlotSpec("bin_left", ["count_g", "count_e"], None, "integrated signal", "counts"))],
                     {"snr": s, "fidelity_erfc": measurement_fidelity(s),
                      "fidelity_histogram": histogram_fidelity(rec.combined("g"), rec.combined("e")),
                      "seed": cfg.seed})


# ----------------------------------------------------------------------------
# gates (angular GHz and ns internally)

GHZ = TWO_PI * 1e-9  # Hz -> rad/ns


@register("drag", "gate", "Leakage and fidelity of Gaussian versus DRAG pi pulses on a 3-level transmon",
          {"params": {"EC": 300e6, "theta": np.pi, "drag": 1.0},
           "sweep": {"parameter": "duration", "start": 4e-9, "stop": 16e-9, "points": 13},
           "dims": {"transmon_levels": 3}}, sweep_axes=("duration",))
def _drag(cfg: ScenarioConfig) -> RunOutput:
    from .gates import drag_envelope, gaussian_envelope, single_qubit_gate
    p = cfg.params
    EC = p["EC"] * GHZ
    d = int(cfg.dims["transmon_levels"])
    rows = []
    for T in cfg.axis():
        tn = float(T) * 1e9
        ga = single_qubit_gate(gaussian_envelope(p["theta"], tn), d, EC)
        dr = single_qubit_gate(drag_envelope(p["theta"], tn, EC, p["drag"]), d, EC)
        rows.append([float(T), ga.leakage, dr.leakage, 1 - ga.fidelity, 1 - dr.fidelity])
    cols = ["duration_s", "leakage_gaussian", "leakage_drag", "infidelity_gaussian", "infidelity_drag"]
    return RunOutput([Table("drag", cols, rows, PlotSpec("duration_s", cols[1:], None, "gate time (s)", "error",
                                                         logy=True))])


@register("iswap", "gate", "Exchange evolution of two resonant qubits against iSWAP and sqrt(iSWAP)",
          {"params": {"J": 10e6},
           "sweep": {"parameter": "time", "start": 0.0, "stop": 25e-9, "points": 101}}, sweep_axes=("time",))
def _iswap(cfg: ScenarioConfig) -> RunOutput:
    from .gates import ISWAP, SQRT_ISWAP, average_gate_fidelity, iswap_gate
    J = cfg.params["J"] * GHZ
    rows = []
    for t in cfg.axis():
        U = iswap_gate(J, float(t) * 1e9).unitary
        rows.append([float(t), average_gate_fidelity(U, SQRT_ISWAP), average_gate_fidelity(U, ISWAP)])
    res = iswap_gate(J)
    return RunOutput([Table("exchange", ["t_s", "fidelity_sqrt_iswap", "fidelity_iswap"], rows,
                            PlotSpec("t_s", ["fidelity_sqrt_iswap", "fidelity_iswap"], None, "time (s)"))],
                     {"sqrt_iswap_time_s": np.pi / (4 * J) * 1e-9, "sqrt_iswap_fidelity": res.fidelity})


@register("cz", "gate", "11-02 controlled phase: gap and conditional shift near the resonance, sudden-gate "
          "fidelity",
          {"params": {"f1": 6.0e9, "f2": 6.5e9, "EC1": 300e6, "EC2": 300e6, "J": 3e6},
           "sweep": {"parameter": "f1", "start": 6.1e9, "stop": 6.3e9, "points": 81},
           "dims": {"transmon_levels": 3}}, sweep_axes=("f1",))
def _cz(cfg: ScenarioConfig) -> RunOutput:
    from .gates import TwoQubitSystem, _gap_11_02, cz_11_02, zeta_exact
    p = cfg.params
    sys = TwoQubitSystem(p["f1"] * GHZ, p["f2"] * GHZ, p["EC1"] * GHZ, p["EC2"] * GHZ, p["J"] * GHZ,
                         int(cfg.dims["transmon_levels"]))
    rows = []
    for f in cfg.axis():
        w = float(f) * GHZ
        rows.append([float(f), _gap_11_02(sys, w) / GHZ, zeta_exact(sys, w) / GHZ])
    res = cz_11_02(sys, "sudden")
    return RunOutput([Table("cz_11_02", ["f1_Hz", "gap_11_02_Hz", "zeta_Hz"], rows,
                            PlotSpec("f1_Hz", ["gap_11_02_Hz", "zeta_Hz"], None, "qubit-1 frequency (Hz)"))],
                     {"sudden_fidelity": res.fidelity, "sudden_leakage": res.leakage,
                      "duration_s": (res.duration or 0) * 1e-9,
                      "gap_Hz": float(res.extra.get("gap", np.nan)) / GHZ},
                     {"cz_gate": res.to_dict()})


@register("cross-resonance", "gate", "Cross-resonance Pauli rates: second-order formulas versus the dressed "
          "3-level block generator",
          {"params": {"Delta12": 100e6, "J": 2e6, "EC1": 300e6, "EC2": 300e6},
           "sweep": {"parameter": "epsilon", "start": 1e6, "stop": 10e6, "points": 10},
           "dims": {"transmon_levels": 3}}, sweep_axes=("epsilon",))
def _cr(cfg: ScenarioConfig) -> RunOutput:
    from .gates import cross_resonance_effective, cross_resonance_simulated
    p = cfg.params
    D, J, E1, E2 = (p[k] * GHZ for k in ("Delta12", "J", "EC1", "EC2"))
    rows = []
    for e in cfg.axis():
        eps = float(e) * GHZ
        f = cross_resonance_effective(D, J, E1, E2, eps)
        s = cross_resonance_simulated(D, J, E1, E2, eps, int(cfg.dims["transmon_levels"]))
        rows.append([float(e), f.ZX / GHZ, s["ZX"] / GHZ, f.IX / GHZ, s["IX"] / GHZ, f.ZZ / GHZ, s["ZZ"] / GHZ])
    cols = ["epsilon_Hz", "ZX_formula_Hz", "ZX_sim_Hz", "IX_formula_Hz", "IX_sim_Hz", "ZZ_formula_Hz",
            "ZZ_sim_Hz"]
    return RunOutput([Table("cr_rates", cols, rows, PlotSpec("epsilon_Hz", cols[1:3], None, "drive (Hz)",
                                                             "rate (Hz)"))])


@register("parametric", "gate", "First-sideband exchange rate J |J1(eps/omega_m)| versus modulation depth",
          {"params": {"J": 5e6, "Delta12": 100e6, "simulate": False, "t_max": 2e-6},
           "sweep": {"parameter": "eps_over_omega", "start": 0.0, "stop": 4.0, "points": 41}},
          sweep_axes=("eps_over_omega",))
def _parametric(cfg: ScenarioConfig) -> RunOutput:
    from .gates import dominant_frequency, parametric_exchange_simulation, parametric_sideband
    p = cfg.params
    J, D = p["J"] * GHZ, p["Delta12"] * GHZ
    rows = []
    t = np.linspace(0, p["t_max"] * 1e9, 8001)
    for z in cfg.axis():
        sb = parametric_sideband(J, float(z) * D, D, D, n=1)
        sim = np.nan
        if p["simulate"] and z > 0:
            P = parametric_exchange_simulation(J, float(z) * D, D, D, t)
            sim = dominant_frequency(t, P) / 2
        rows.append([float(z), abs(sb.coupling) / GHZ, sim / GHZ])
    return RunOutput([Table("sideband", ["eps_over_omega", "coupling_formula_Hz", "coupling_sim_Hz"], rows,
                            PlotSpec("eps_over_omega", ["coupling_formula_Hz", "coupling_sim_Hz"], None,
                                     "eps / omega_m", "exchange rate (Hz)"))])


# ----------------------------------------------------------------------------
# codes

@register("recovery", "code", "Logical infidelity versus kappa dt for the binomial and 4-qubit codes with "
          "recovery, and the unencoded qubit",
          {"params": {},
           "sweep": {"parameter": "kappa_t", "start": 1e-3, "stop": 3e-2, "points": 8, "scale": "log"}},
          sweep_axes=("kappa_t",))
def _recovery(cfg: ScenarioConfig) -> RunOutput:
    from .codes import (amplitude_damping_kraus, binomial_code, four_qubit_code, knill_laflamme_check,
                        qubit_amplitude_damping_kraus, recovery_benchmark, trivial_code)
    ks = cfg.axis()
    if np.any(ks < 0) or np.any(ks >= 1):
        raise ConfigError("kappa_t values must lie in [0, 1)")
    b, q, u = binomial_code(), four_qubit_code(), trivial_code()
    runs = {"binomial": recovery_benchmark(b, kappa_ts=ks),
            "four-qubit": recovery_benchmark(q, lambda k: qubit_amplitude_damping_kraus(k, 4), ks),
            "unencoded": recovery_benchmark(u, kappa_ts=ks, recovery="none")}
    rows = [[name, k, f, i] for name, r in runs.items() for k, f, i in r.rows()]
    kl = {"binomial": knill_laflamme_check(b, lambda k: amplitude_damping_kraus(k, 5).kraus_operators[:2]),
          "four-qubit": knill_laflamme_check(q, lambda k: qubit_amplitude_damping_kraus(k, 4, 1).kraus_operators),
          "unencoded": knill_laflamme_check(u)}
    return RunOutput([Table("infidelity", ["code", "kappa_t", "fidelity", "infidelity"], rows,
                            PlotSpec("kappa_t", ["infidelity"], "code", "kappa dt", "1 - F", True, True))],
                     {"exponents": {n: r.exponent for n, r in runs.items()},
                      "knill_laflamme": {n: {"status": r.status, "residual": r.residual,
                                             "scaling_exponent": r.scaling_exponent} for n, r in kl.items()}},
                     {"codes": {"binomial": b.to_dict(), "four-qubit": q.to_dict()}})


@register("cat", "code", "Two-leg cat bit-flip matrix element and four-leg codeword photon numbers versus alpha",
          {"params": {}, "sweep": {"parameter": "alpha", "start": 0.5, "stop": 3.0, "points": 26}},
          sweep_axes=("alpha",))
def _cat(cfg: ScenarioConfig) -> RunOutput:
    from .codes import cat_code
    from .hilbert import destroy
    rows = []
    for al in cfg.axis():
        c2 = cat_code(float(al), 2)
        w0, w1 = c2.encoder().T
        elem = abs(np.vdot(w1, destroy(c2.dim).matrix @ w0))
        nb = cat_code(float(al), 4).mean_excitation()
        rows.append([float(al), elem, float(al) * np.exp(-2 * al**2), nb[0], nb[1]])
    cols = ["alpha", "bit_flip_element", "alpha_exp_minus_2alpha2", "nbar_0L_4leg", "nbar_1L_4leg"]
    return RunOutput([Table("cat", cols, rows, PlotSpec("alpha", cols[1:3], None, "alpha", "|<1L|a|0L>|",
                                                        logy=True))])


# ----------------------------------------------------------------------------
# phase space

def _grid_rows(func):
    return [[float(x), float(p), float(func.values[i, j])] for i, p in enumerate(func.grid.p)
            for j, x in enumerate(func.grid.x)]


@register("fig17", "phasespace", "Squeezed vacuum: quadrature variance versus angle for r in {0.5, 1, 1.5} "
          "(theta = pi) and the Wigner function at r = 0.75, theta = pi/2",
          {"params": {"r_values": [0.5, 1.0, 1.5], "theta": np.pi, "wigner_r": 0.75, "wigner_theta": np.pi / 2,
                      "extent": 3.0},
           "sweep": {"parameter": "phi", "start": 0.0, "stop": np.pi, "points": 181},
           "dims": {"fock": 60, "resolution": 81}}, sweep_axes=("phi",))
def _fig17(cfg: ScenarioConfig) -> RunOutput:
    from .phasespace import (PhaseSpaceGrid, SqueezeParams, squeezed_vacuum, squeezed_vacuum_variance,
                             squeezing_db, wigner)
    p = cfg.params
    rows = []
    for r in p["r_values"]:
        sp = SqueezeParams(float(r), p["theta"])
        rows += [[r, float(phi), squeezed_vacuum_variance(sp, phi), squeezing_db(sp, phi)] for phi in cfg.axis()]
    L = p["extent"]
    grid = PhaseSpaceGrid((-L, L), (-L, L), int(cfg.dims["resolution"]))
    W = wigner(squeezed_vacuum(SqueezeParams(p["wigner_r"], p["wigner_theta"]), int(cfg.dims["fock"])), grid)
    return RunOutput([Table("variance", ["r", "phi", "variance", "squeezing_dB"], rows,
                            PlotSpec("phi", ["variance"], "r", "quadrature angle", "variance")),
                      Table("wigner", ["x", "p", "wigner"], _grid_rows(W), PlotSpec("x", ["wigner"], kind="map"))],
                     {"vacuum_variance": 0.5})


@register("fig18", "phasespace", "Wigner functions of the four-leg |0_L> and two-leg |+_L> cat states at alpha=4",
          {"params": {"alpha": 4.0, "extent": 6.0}, "dims": {"resolution": 81}})
def _fig18(cfg: ScenarioConfig) -> RunOutput:
    from .codes import cat_code
    from .hilbert import QuantumState
    from .phasespace import PhaseSpaceGrid, wigner
    p = cfg.params
    L = p["extent"]
    grid = PhaseSpaceGrid((-L, L), (-L, L), int(cfg.dims["resolution"]))
    c4 = cat_code(p["alpha"], 4)
    c2 = cat_code(p["alpha"], 2)
    plus = QuantumState(c2.space, ket=c2.metadata["plus"])
    W4, W2 = wigner(c4.codewords[0], grid), wigner(plus, grid)
    return RunOutput([Table("wigner_cat4", ["x", "p", "wigner"], _grid_rows(W4), PlotSpec("x", ["wigner"],
                                                                                          kind="map")),
                      Table("wigner_cat2", ["x", "p", "wigner"], _grid_rows(W2), PlotSpec("x", ["wigner"],
                                                                                          kind="map"))],
                     {"min_wigner_cat4": float(W4.values.min()), "min_wigner_cat2": float(W2.values.min())})


@register("wigner", "phasespace", "Wigner or Husimi Q function of a coherent, Fock, cat or squeezed state",
          {"params": {"state": "coherent", "alpha": 1.0, "n": 1, "r": 0.5, "theta": 0.0, "kind": "wigner",
                      "extent": 4.0},
           "dims": {"fock": 40, "resolution": 81}})
def _wigner(cfg: ScenarioConfig) -> RunOutput:
    from .codes import cat_code
    from .hilbert import fock_state
    from .phasespace import PhaseSpaceGrid, SqueezeParams, coherent_state, husimi_q, squeezed_vacuum, wigner
    p = cfg.params
    d = int(cfg.dims["fock"])
    kind = p["kind"]
    if kind not in ("wigner", "husimi"):
        raise ConfigError("kind must be 'wigner' or 'husimi'")
    makers = {"coherent": lambda: coherent_state(p["alpha"], d), "fock": lambda: fock_state(d, int(p["n"])),
              "cat": lambda: cat_code(p["alpha"], 2, d).codewords[0],
              "squeezed": lambda: squeezed_vacuum(SqueezeParams(p["r"], p["theta"]), d)}
    if p["state"] not in makers:
        raise ConfigError(f"state must be one of {sorted(makers)}")
    L = p["extent"]
    grid = PhaseSpaceGrid((-L, L), (-L, L), int(cfg.dims["resolution"]))
    f = (wigner if kind == "wigner" else husimi_q)(makers[p["state"]](), grid)
    return RunOutput([Table(kind, ["x", "p", kind], _grid_rows(f), PlotSpec("x", [kind], kind="map"))],
                     {"integral": f.integral()})


def _fig12b_defaults():
    d = copy.deepcopy(SCENARIOS["fig12"].defaults)
    d["params"].update(FIG12B["params"])
    d["sweep"] = dict(FIG12B["sweep"])
    return d


SCENARIOS["fig12b"] = Scenario("fig12b", "evolve", "Two-tone spectroscopy in the strong dispersive regime "
                               "(number-split peaks, tone at w_r - chi)", _fig12b_defaults(), _fig12,
                               ("spec_detuning",))
