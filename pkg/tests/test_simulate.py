import numpy as np
import pytest

from qutrit_ks import analysis, linalg, simulate
from qutrit_ks.model import build_model, ray_unit
from qutrit_ks.pulses import settings_table


@pytest.fixture(scope="module")
def model():
    return build_model()


@pytest.fixture(scope="module")
def settings():
    return settings_table()


@pytest.fixture(scope="module")
def by_id(settings):
    return {s.id: s for s in settings}


def test_default_roster(model):
    roster = simulate.default_state_roster()
    assert [s.label for s in roster] == [
        "psi1", "psi2", "psi3", "psi4", "psi5", "psi6",
        "psi7", "psi8", "psi9", "rho10", "rho11", "rho12"]
    by_label = {s.label: s for s in roster}
    assert np.allclose(by_label["psi1"].rho, np.diag([1, 0, 0]))
    assert np.allclose(by_label["psi4"].rho, np.full((3, 3), 1 / 3), atol=1e-12)
    assert np.allclose(np.linalg.eigvalsh(by_label["rho10"].rho), [1 / 3] * 3)
    for s in roster:
        linalg.validate_density_matrix(s.rho)


def test_noise_model_validation():
    with pytest.raises(ValueError):
        simulate.NoiseModel(mode="nope")
    with pytest.raises(ValueError):
        simulate.NoiseModel(eps_dark_to_bright=1.5)
    with pytest.raises(ValueError):
        simulate.NoiseModel(threshold=0)
    paper = simulate.NoiseModel.paper()
    assert paper.eps_dark_to_bright == 0.010
    assert paper.eps_bright_to_dark == 0.021


def test_build_plan_structure(model, settings):
    plan = simulate.build_plan(model, settings, shots=10_000)
    singles = [p for p in plan if len(p.chain) == 1]
    pairs = [p for p in plan if len(p.chain) == 2]
    assert len(singles) == 13
    assert len(pairs) == 24
    assert {p.chain[0] for p in singles} == set(range(1, 14))
    assert {p.chain for p in pairs} == set(model.edges)
    assert sum(p.shots for p in plan) == 37 * 10_000
    # edge (1, 4) is co-mapped first in M3
    assert next(p for p in pairs if p.chain == (1, 4)).setting_id == "M3"


def test_detect_dark_state_ideal():
    rng = np.random.default_rng(0)
    rho = linalg.pure_state_dm([0, 0, 1])
    for _ in range(20):
        readout, collapsed, true = simulate.detect(
            rho, simulate.NoiseModel.ideal(), rng)
        assert readout == true == "dark"
        assert np.allclose(collapsed, simulate.DARK)


def test_detect_flip_rates():
    rng = np.random.default_rng(1)
    noise = simulate.NoiseModel.paper()
    n = 20_000
    dark = linalg.pure_state_dm([0, 0, 1])
    flips = sum(simulate.detect(dark, noise, rng)[0] == "bright"
                for _ in range(n))
    assert flips / n == pytest.approx(0.010, abs=0.004)
    bright = linalg.pure_state_dm([1, 0, 0])
    flips = sum(simulate.detect(bright, noise, rng)[0] == "dark"
                for _ in range(n))
    assert flips / n == pytest.approx(0.021, abs=0.005)


def test_detect_collapse_correctness():
    rng = np.random.default_rng(2)
    rho = linalg.pure_state_dm([1, 1, 1])
    for _ in range(50):
        _, collapsed, true = simulate.detect(rho, simulate.NoiseModel.ideal(), rng)
        if true == "dark":
            assert np.allclose(collapsed, simulate.DARK)
        else:
            assert abs(collapsed[2, 2]) < 1e-12
        linalg.validate_density_matrix(collapsed)


def test_photon_count_mode_dark_error():
    lam = -np.log(0.99)
    noise = simulate.NoiseModel(mode="photon-count", lambda_dark=lam)
    rng = np.random.default_rng(3)
    dark = linalg.pure_state_dm([0, 0, 1])
    n = 40_000
    bright_reads = sum(simulate.detect(dark, noise, rng)[0] == "bright"
                       for _ in range(n))
    assert bright_reads / n == pytest.approx(0.01, abs=0.003)
    # a bright state essentially never reads dark at Poisson mean 10
    bright = linalg.pure_state_dm([1, 0, 0])
    dark_reads = sum(simulate.detect(bright, noise, rng)[0] == "dark"
                     for _ in range(n))
    assert dark_reads / n < 5e-4


def test_run_single_trivial(by_id):
    rng = np.random.default_rng(4)
    psi3 = simulate.StateSpec.pure("psi3", [0, 0, 1])
    counts = simulate.run_single(psi3, by_id["M1"], 3,
                                 simulate.NoiseModel.ideal(), 1000, rng)
    assert counts == {"D": 1000, "B": 0}


def test_run_single_unmapped_ray_errors(by_id):
    rng = np.random.default_rng(5)
    psi1 = simulate.StateSpec.pure("psi1", [1, 0, 0])
    with pytest.raises(ValueError, match="not mapped"):
        simulate.run_single(psi1, by_id["M1"], 13,
                            simulate.NoiseModel.ideal(), 10, rng)


def test_run_single_matches_trace(by_id, model):
    """Dark fraction concentrates on Tr(rho V) for every mapped slot."""
    rng = np.random.default_rng(6)
    shots = 20_000
    roster = simulate.default_state_roster()[::3]
    for state in roster:
        for sid in ("M1", "M6", "M13"):
            setting = by_id[sid]
            for ray in setting.mapping.values():
                counts = simulate.run_single(state, setting, ray,
                                             simulate.NoiseModel.ideal(),
                                             shots, rng)
                p = float(np.trace(state.rho @ model.projectors[ray]).real)
                bound = 4 * np.sqrt(max(p * (1 - p), 1e-9) / shots) + 1e-3
                assert abs(counts["D"] / shots - p) < bound


def test_run_pair_ideal_dd_is_zero(by_id, model):
    rng = np.random.default_rng(7)
    state = simulate.StateSpec.mixed("rho10", np.eye(3) / 3)
    for edge in sorted(model.edges)[:8]:
        sid = next(s.id for s in settings_table()
                   if set(edge) <= set(s.mapping.values()))
        counts = simulate.run_pair(state, by_id[sid], *edge,
                                   simulate.NoiseModel.ideal(), 4000, rng)
        assert counts["DD"] == 0


def test_run_pair_aligned_state(by_id):
    # state prepared on v4, measured as first element of edge (4, 10) in M5
    state = simulate.StateSpec.pure("v4", ray_unit(4))
    rng = np.random.default_rng(8)
    counts = simulate.run_pair(state, by_id["M5"], 4, 10,
                               simulate.NoiseModel.ideal(), 2000, rng)
    assert counts["B"] == 0
    assert counts["DB"] == 2000


def test_run_pair_flip_dd_small(by_id):
    rng = np.random.default_rng(9)
    state = simulate.StateSpec.mixed("rho10", np.eye(3) / 3)
    counts = simulate.run_pair(state, by_id["M5"], 4, 10,
                               simulate.NoiseModel.paper(), 20_000, rng)
    assert 0 < counts["DD"] / 20_000 < 0.05


def test_roster_determinism(model, settings):
    plan = simulate.build_plan(model, settings, shots=500)
    roster = simulate.default_state_roster()[:3]
    noise = simulate.NoiseModel.paper()
    a = simulate.run_roster(roster, plan, settings, noise, 99)
    b = simulate.run_roster(roster, plan, settings, noise, 99)
    assert simulate.counts_to_csv(a) == simulate.counts_to_csv(b)
    c = simulate.run_roster(roster, plan, settings, noise, 100)
    assert simulate.counts_to_csv(a) != simulate.counts_to_csv(c)


def test_stream_independence_of_execution_order(model, settings, by_id):
    """A sub-experiment's counts depend only on its key, not on which other
    sub-experiments ran before it."""
    plan = simulate.build_plan(model, settings, shots=500)
    roster = simulate.default_state_roster()[:2]
    noise = simulate.NoiseModel.paper()
    full = simulate.run_roster(roster, plan, settings, noise, 7)
    solo = simulate.run_subexperiment(roster[1], plan[5], by_id, noise, 7)
    match = [t for t in full[roster[1].label]
             if t.subexperiment == plan[5]][0]
    assert match.counts == solo.counts


def test_counts_csv_shape(model, settings):
    plan = simulate.build_plan(model, settings, shots=100)
    roster = simulate.default_state_roster()[:1]
    tables = simulate.run_roster(roster, plan, settings,
                                 simulate.NoiseModel.ideal(), 1)
    csv = simulate.counts_to_csv(tables)
    lines = csv.strip().splitlines()
    assert lines[0] == "state,setting,chain,symbol,count,seed"
    # 13 singles x 2 symbols + 24 pairs x 3 symbols
    assert len(lines) - 1 == 13 * 2 + 24 * 3
