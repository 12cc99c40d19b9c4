"""Monte Carlo simulation of the sequential fluorescence-detection runs.

The physics of one shot is exact 3x3 quantum mechanics: prepare a density
matrix, apply the compiled setting unitary, swap the interrogated slot onto
the dark state |3>, and detect. Collapse always follows the TRUE projection
outcome; readout errors affect only the recorded symbol and the decision to
continue a sequential pair, exactly as the physical apparatus behaves.

Shot loops are vectorized: each branch probability is computed once from the
density matrix and the per-shot randomness reduces to uniform (and Poisson)
draws, which keeps full-roster runs at paper shot budgets fast while staying
sample-for-sample equivalent to the one-shot `detect` below.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import linalg
from .model import KSModel, ray_unit
from .pulses import MeasurementSetting, compile_setting, pulse_matrix, swap_pulse

DARK = np.diag([0.0, 0.0, 1.0]).astype(complex)  # |3><3|
BRIGHT = linalg.IDENTITY - DARK


@dataclass(frozen=True)
class StateSpec:
    label: str
    kind: str  # "pure" | "mixed"
    rho: np.ndarray

    @staticmethod
    def pure(label: str, amplitudes) -> "StateSpec":
        return StateSpec(label, "pure", linalg.pure_state_dm(amplitudes))

    @staticmethod
    def mixed(label: str, rho) -> "StateSpec":
        return StateSpec(label, "mixed", linalg.validate_density_matrix(np.asarray(rho, dtype=complex)))


def default_state_roster() -> list[StateSpec]:
    """Twelve initial states: basis states, ray-aligned and generic
    superpositions, and three mixed states."""
    s2 = math.sqrt(2)
    psi7 = np.array([1, 1, s2]) / 2
    roster = [
        StateSpec.pure("psi1", [1, 0, 0]),
        StateSpec.pure("psi2", [0, 1, 0]),
        StateSpec.pure("psi3", [0, 0, 1]),
        StateSpec.pure("psi4", ray_unit(13)),
        StateSpec.pure("psi5", ray_unit(10)),
        StateSpec.pure("psi6", ray_unit(4)),
        StateSpec.pure("psi7", psi7),
        StateSpec.pure("psi8", np.array([1, np.exp(1j * math.pi / 4), 1]) / math.sqrt(3)),
        StateSpec.pure("psi9", np.array([s2, 1j, 1]) / 2),
        StateSpec.mixed("rho10", linalg.IDENTITY / 3),
        StateSpec.mixed("rho11", np.diag([0.5, 0.5, 0.0])),
        StateSpec.mixed("rho12", 0.8 * np.outer(psi7, psi7.conj()) + 0.2 * np.eye(3) / 3),
    ]
    for spec in roster:
        linalg.validate_density_matrix(spec.rho)
    return roster


@dataclass(frozen=True)
class NoiseModel:
    mode: str = "flip"  # "ideal" | "flip" | "photon-count"
    eps_dark_to_bright: float = 0.010
    eps_bright_to_dark: float = 0.021
    lambda_bright: float = 10.0
    lambda_dark: float = 0.0
    threshold: int = 1
    prep_depolarization: float = 0.0

    def __post_init__(self):
        if self.mode not in ("ideal", "flip", "photon-count"):
            raise ValueError(f"unknown noise mode {self.mode!r}")
        for p in (self.eps_dark_to_bright, self.eps_bright_to_dark,
                  self.prep_depolarization):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.threshold < 1:
            raise ValueError("photon threshold must be >= 1")

    @staticmethod
    def ideal() -> "NoiseModel":
        return NoiseModel(mode="ideal", eps_dark_to_bright=0.0, eps_bright_to_dark=0.0)

    @staticmethod
    def paper() -> "NoiseModel":
        return NoiseModel(mode="flip")


@dataclass(frozen=True)
class SubExperiment:
    setting_id: str
    chain: tuple[int, ...]  # 1 ray (single) or 2 rays (sequential pair)
    shots: int = 10_000

    @property
    def key(self) -> str:
        return f"{'single' if len(self.chain) == 1 else 'pair'}:" \
               f"{'-'.join(f'{r:02d}' for r in self.chain)}:{self.setting_id}"


@dataclass
class CountTable:
    subexperiment: SubExperiment
    state_label: str
    counts: dict[str, int]
    seed_key: str

    @property
    def shots(self) -> int:
        return sum(self.counts.values())


def build_plan(model: KSModel, settings: list[MeasurementSetting],
               shots: int = 10_000) -> list[SubExperiment]:
    """Deterministic plan: one single per observable at its first covering
    setting, plus one sequential pair per graph edge.

    Returns 13 + 24 = 37 sub-experiments; total realizations = 37 * shots.
    """
    by_id = {s.id: s for s in settings}
    order = [s.id for s in settings]

    plan: list[SubExperiment] = []
    for ray in range(1, 14):
        sid = next((i for i in order if ray in by_id[i].mapping.values()), None)
        if sid is None:
            raise ValueError(f"no setting maps ray v{ray}")
        plan.append(SubExperiment(sid, (ray,), shots))
    for edge in sorted(model.edges):
        sid = next(
            (i for i in order
             if set(edge) <= set(by_id[i].mapping.values())), None)
        if sid is None:
            raise ValueError(f"no setting covers edge {edge}")
        plan.append(SubExperiment(sid, edge, shots))
    return plan


def derive_rng(master_seed: int, *parts: str) -> np.random.Generator:
    """Independent stream keyed by (seed, labels); order-independent across
    parallel execution because the key, not the call sequence, decides it."""
    digest = hashlib.sha256(
        ("/".join([str(master_seed), *parts])).encode()).digest()
    words = [int.from_bytes(digest[i:i + 8], "little") for i in range(0, 32, 8)]
    return np.random.default_rng(np.random.SeedSequence(words))


def _prepare(state: StateSpec, noise: NoiseModel) -> np.ndarray:
    rho = state.rho
    p = noise.prep_depolarization
    if p > 0.0:
        rho = (1 - p) * rho + p * linalg.IDENTITY / 3
    return rho


def _slot_of(setting: MeasurementSetting, ray: int) -> int:
    for basis, r in setting.mapping.items():
        if r == ray:
            return basis
    raise ValueError(f"ray v{ray} is not mapped in setting {setting.id}")


def _readout_dark(true_dark: np.ndarray, noise: NoiseModel,
                  rng: np.random.Generator) -> np.ndarray:
    """Vector of readout outcomes (True = dark) for a vector of true ones."""
    n = true_dark.size
    if noise.mode == "ideal":
        return true_dark.copy()
    if noise.mode == "flip":
        u = rng.random(n)
        flip = np.where(true_dark, u < noise.eps_dark_to_bright,
                        u < noise.eps_bright_to_dark)
        return true_dark ^ flip
    counts = np.where(true_dark,
                      rng.poisson(noise.lambda_dark, n),
                      rng.poisson(noise.lambda_bright, n))
    return counts < noise.threshold


def detect(rho: np.ndarray, noise: NoiseModel,
           rng: np.random.Generator) -> tuple[str, np.ndarray, str]:
    """One fluorescence detection: sample the true outcome with
    p_dark = <3|rho|3>, collapse accordingly, then apply readout noise.

    Returns (readout, collapsed state, true outcome), outcomes as
    "dark" / "bright".
    """
    rho = linalg.validate_density_matrix(rho)
    p_dark = float(rho[2, 2].real)
    true_dark = bool(rng.random() < p_dark)
    if true_dark:
        collapsed = DARK.copy()
    else:
        trb = float(np.trace(BRIGHT @ rho @ BRIGHT).real)
        if trb <= 0.0:
            raise ValueError("bright collapse requested for a dark-only state")
        collapsed = BRIGHT @ rho @ BRIGHT / trb
    read_dark = bool(_readout_dark(np.array([true_dark]), noise, rng)[0])
    return ("dark" if read_dark else "bright", collapsed,
            "dark" if true_dark else "bright")


def _dark_prob(rho: np.ndarray) -> float:
    return min(max(float(rho[2, 2].real), 0.0), 1.0)


def run_single(state: StateSpec, setting: MeasurementSetting, ray: int,
               noise: NoiseModel, shots: int,
               rng: np.random.Generator) -> dict[str, int]:
    """Single-observable run: dark counts estimate the projector average."""
    slot = _slot_of(setting, ray)
    rho = _prepare(state, noise)
    u = compile_setting(setting)
    rho = u @ rho @ linalg.adjoint(u)
    if slot != 3:
        w = pulse_matrix(swap_pulse(slot))
        rho = w @ rho @ linalg.adjoint(w)
    p_dark = _dark_prob(rho)
    true_dark = rng.random(shots) < p_dark
    read_dark = _readout_dark(true_dark, noise, rng)
    n_dark = int(read_dark.sum())
    return {"D": n_dark, "B": shots - n_dark}


def run_pair(state: StateSpec, setting: MeasurementSetting, ray_i: int,
             ray_j: int, noise: NoiseModel, shots: int,
             rng: np.random.Generator) -> dict[str, int]:
    """Sequential pair run with symbols B (first bright), DB, DD.

    The stop/continue decision follows the noisy readout; the collapse
    follows the true outcome.
    """
    slot_i = _slot_of(setting, ray_i)
    slot_j = _slot_of(setting, ray_j)
    rho = _prepare(state, noise)
    u = compile_setting(setting)
    rho = u @ rho @ linalg.adjoint(u)

    if slot_i != 3:
        w1 = pulse_matrix(swap_pulse(slot_i))
        rho = w1 @ rho @ linalg.adjoint(w1)
        if slot_j == 3:
            slot_j = slot_i  # the first swap moved ray_j out of |3>
    w2 = pulse_matrix(swap_pulse(slot_j))

    p1 = _dark_prob(rho)
    # Post-first-measurement branches, then second swap.
    rho_dark2 = w2 @ DARK @ linalg.adjoint(w2)
    p2_given_dark = _dark_prob(rho_dark2)
    if p1 < 1.0:
        rho_bright = BRIGHT @ rho @ BRIGHT / (1.0 - p1)
        rho_bright2 = w2 @ rho_bright @ linalg.adjoint(w2)
        p2_given_bright = _dark_prob(rho_bright2)
    else:
        p2_given_bright = 0.0

    true1 = rng.random(shots) < p1
    read1 = _readout_dark(true1, noise, rng)
    true2 = rng.random(shots) < np.where(true1, p2_given_dark, p2_given_bright)
    read2 = _readout_dark(true2, noise, rng)

    n_b = int((~read1).sum())
    n_dd = int((read1 & read2).sum())
    n_db = shots - n_b - n_dd
    return {"B": n_b, "DB": n_db, "DD": n_dd}


def run_subexperiment(state: StateSpec, sub: SubExperiment,
                      settings_by_id: dict[str, MeasurementSetting],
                      noise: NoiseModel, master_seed: int) -> CountTable:
    setting = settings_by_id[sub.setting_id]
    seed_key = f"{master_seed}/{state.label}/{sub.key}"
    rng = derive_rng(master_seed, state.label, sub.key)
    if len(sub.chain) == 1:
        counts = run_single(state, setting, sub.chain[0], noise, sub.shots, rng)
    else:
        counts = run_pair(state, setting, *sub.chain, noise, sub.shots, rng)
    return CountTable(sub, state.label, counts, seed_key)


def run_roster(roster: list[StateSpec], plan: list[SubExperiment],
               settings: list[MeasurementSetting], noise: NoiseModel,
               master_seed: int) -> dict[str, list[CountTable]]:
    """Full run; deterministic for a given master seed regardless of the
    order in which sub-experiments execute."""
    by_id = {s.id: s for s in settings}
    return {
        state.label: [
            run_subexperiment(state, sub, by_id, noise, master_seed)
            for sub in plan
        ]
        for state in roster
    }


def counts_to_csv(tables: dict[str, list[CountTable]]) -> str:
    lines = ["state,setting,chain,symbol,count,seed"]
    for label in tables:
        for t in tables[label]:
            chain = "-".join(str(r) for r in t.subexperiment.chain)
            for symbol in sorted(t.counts):
                lines.append(f"{label},{t.subexperiment.setting_id},{chain},"
                             f"{symbol},{t.counts[symbol]},{t.seed_key}")
    return "\n".join(lines) + "\n"
