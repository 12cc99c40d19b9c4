import numpy as np
import pytest

from qutrit_ks import linalg, simulate, tomography as tg


@pytest.fixture(scope="module")
def settings():
    return tg.tomography_settings()


def test_settings_rank_nine(settings):
    a = tg.response_matrix(settings)
    assert np.linalg.matrix_rank(a, tol=tg.RANK_TOL) == 9
    assert len(settings) >= 5


def test_base_five_settings_are_rank_deficient():
    base = tg.tomography_settings()[:5]
    assert np.linalg.matrix_rank(tg.response_matrix(base), tol=tg.RANK_TOL) < 9


def test_identity_setting_yields_diagonal(settings):
    rho = np.diag([0.5, 0.3, 0.2]).astype(complex)
    probs = tg.exact_probabilities(rho, settings)
    assert np.allclose(probs["T1"], [0.5, 0.3, 0.2])


def test_exact_round_trip_100_states(settings):
    rng = np.random.default_rng(13)
    for _ in range(100):
        rho = linalg.random_density_matrix(rng)
        res = tg.reconstruct(tg.exact_probabilities(rho, settings), settings, rho)
        assert linalg.frobenius_distance(res.rho, rho) < tg.ROUND_TRIP_TOL
        assert res.residual < 1e-10


def test_reconstruction_is_always_physical(settings):
    """Even corrupted tables must come back as a valid density matrix."""
    rng = np.random.default_rng(17)
    for _ in range(20):
        tables = {s.id: np.clip(rng.normal(1 / 3, 0.3, 3), 0, 1)
                  for s in settings}
        res = tg.reconstruct(tables, settings)
        linalg.validate_density_matrix(res.rho)


def test_simulated_tomography_trivia(settings):
    rng = np.random.default_rng(19)
    psi3 = simulate.StateSpec.pure("psi3", [0, 0, 1])
    tables = tg.simulate_tomography(psi3, settings,
                                    simulate.NoiseModel.ideal(), 2000, rng)
    assert tables["T1"][2] == 1.0

    mixed = simulate.StateSpec.mixed("rho10", np.eye(3) / 3)
    tables = tg.simulate_tomography(mixed, settings,
                                    simulate.NoiseModel.ideal(), 40_000, rng)
    for sid in tables:
        assert np.allclose(tables[sid], 1 / 3, atol=0.02)


def test_simulated_tomography_half_probability(settings):
    rng = np.random.default_rng(23)
    psi1 = simulate.StateSpec.pure("psi1", [1, 0, 0])
    tables = tg.simulate_tomography(psi1, settings,
                                    simulate.NoiseModel.ideal(), 40_000, rng)
    assert tables["T2"][2] == pytest.approx(0.5, abs=0.02)


def test_statistical_round_trip_ideal(settings):
    """Shot noise alone limits 10k-shot fidelity to ~0.994 typical; the
    reconstruction must stay within that statistical envelope."""
    psi7 = simulate.default_state_roster()[6]
    fids = []
    for seed in range(5):
        rng = np.random.default_rng(seed)
        tables = tg.simulate_tomography(psi7, settings,
                                        simulate.NoiseModel.ideal(), 10_000, rng)
        res = tg.reconstruct(tables, settings, psi7.rho)
        fids.append(res.fidelity_to_target)
    assert min(fids) >= 0.985
    assert np.mean(fids) >= 0.99


def test_paper_noise_fidelities(settings):
    noise = simulate.NoiseModel.paper()
    for state in simulate.default_state_roster()[:9]:
        rng = simulate.derive_rng(101, state.label, "tomo")
        tables = tg.simulate_tomography(state, settings, noise, 10_000, rng)
        res = tg.reconstruct(tables, settings, state.rho)
        assert res.fidelity_to_target >= 0.98


def test_reconstruct_rejects_rank_deficient():
    base = tg.tomography_settings()[:5]
    tables = {s.id: np.full(3, 1 / 3) for s in base}
    with pytest.raises(ValueError, match="rank"):
        tg.reconstruct(tables, base)


def test_format_density_matrix():
    text = tg.format_density_matrix(np.eye(3, dtype=complex) / 3)
    assert len(text.strip().splitlines()) == 3
    assert "0.333333333333" in text
