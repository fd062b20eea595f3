import numpy as np
import pytest

from photonmesh import (
    FidelityReport,
    ValidationError,
    decompose,
    haar_random_unitary,
    histogram,
    ideal_model,
    measure_all,
    paper_model,
    run_haar_experiment,
    run_single,
    unit_cell_matrix,
)
from photonmesh.hardware import PAPER_PHASE_NOISE_RAD
from photonmesh.mesh import _cell_arrays


def test_run_single_ideal_is_lossless_and_faithful():
    model = ideal_model(12)
    u = haar_random_unitary(12, 5)
    record, fidelity = run_single(u, model, seed=0)
    assert fidelity >= 1.0 - 1e-9
    assert record.intensities.shape == (12, 12)
    # lossless device: each input's power is fully accounted for
    assert np.allclose(record.intensities.sum(axis=0), 1e-3, atol=1e-15)


def test_measured_intensities_match_block_product_oracle():
    # multiply the embedded 2x2 blocks by hand, bypassing the compiled kernel
    model = paper_model(3)
    model.phase_set_noise_sigma = 0.0
    settings = decompose(haar_random_unitary(12, 8))
    order, modes, thetas, phis = _cell_arrays(settings)
    t = np.eye(12, dtype=complex)
    for pos in range(len(order)):
        cell = model.cells[pos]
        block = unit_cell_matrix(thetas[pos], phis[pos], cell.kappa1, cell.kappa2)
        full = np.eye(12, dtype=complex)
        m = modes[pos]
        full[m : m + 2, m : m + 2] = block
        t = full @ t
    t = np.exp(1j * settings.output_phases)[:, None] * t
    t = (
        np.sqrt(model.output_efficiencies())[:, None]
        * t
        * np.sqrt(model.input_efficiencies())[None, :]
    )
    expected = np.abs(t) ** 2 * 1e-3 + model.detector.dark_offset[:, None]
    measured = measure_all(model, settings, 1e-3, seed=None)
    assert np.max(np.abs(measured - expected)) < 1e-12


def test_run_single_rejects_shape_mismatch():
    with pytest.raises(ValidationError):
        run_single(haar_random_unitary(3, 0), ideal_model(4), seed=0)


def test_experiment_deterministic_per_master_seed():
    model = paper_model(0)
    a = run_haar_experiment(5, model, seed=77)
    b = run_haar_experiment(5, model, seed=77)
    c = run_haar_experiment(5, model, seed=78)
    assert a.fidelities == b.fidelities
    assert a.seeds == b.seeds
    assert a.fidelities != c.fidelities


def test_experiment_single_matrix_has_zero_std():
    report = run_haar_experiment(1, ideal_model(4), seed=0)
    assert report.count == 1
    assert report.std == 0.0


def test_experiment_rejects_bad_count():
    with pytest.raises(ValidationError):
        run_haar_experiment(0, ideal_model(4), seed=0)


def test_fidelity_degrades_monotonically_with_phase_noise():
    means = []
    for sigma in [0.0, 0.05, 0.12, 0.25, 0.5]:
        model = paper_model(0)
        model.phase_set_noise_sigma = sigma
        means.append(run_haar_experiment(40, model, seed=11).mean)
    assert all(a > b for a, b in zip(means, means[1:]))


def test_paper_model_reaches_published_operating_point():
    # light version of the 100-matrix benchmark
    report = run_haar_experiment(30, paper_model(0), seed=2024)
    assert report.phase_noise_sigma == PAPER_PHASE_NOISE_RAD
    assert 0.97 < report.mean < 0.999
    assert report.std < 0.02


def test_report_validation_catches_inconsistency():
    with pytest.raises(ValidationError):
        FidelityReport(
            fidelities=[0.9, 1.0], mean=0.5, std=0.0, count=2,
            master_seed=0, model_fingerprint="x",
        ).validate()
    with pytest.raises(ValidationError):
        FidelityReport(
            fidelities=[0.9], mean=0.9, std=0.0, count=2,
            master_seed=0, model_fingerprint="x",
        ).validate()


def test_report_save_is_byte_identical(tmp_path):
    model = paper_model(1)
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    run_haar_experiment(3, model, seed=5).save(p1)
    run_haar_experiment(3, model, seed=5).save(p2)
    assert p1.read_bytes() == p2.read_bytes()
    doc = __import__("json").loads(p1.read_text())
    assert doc["count"] == 3
    assert doc["model_fingerprint"] == model.fingerprint()


def test_histogram_hand_example():
    report = FidelityReport(
        fidelities=[0.981, 0.984, 0.9851, 0.992, 0.995],
        mean=float(np.mean([0.981, 0.984, 0.9851, 0.992, 0.995])),
        std=float(np.std([0.981, 0.984, 0.9851, 0.992, 0.995], ddof=1)),
        count=5, master_seed=0, model_fingerprint="x",
    ).validate()
    bins = histogram(report, 0.005)
    assert sum(c for _, c in bins) == 5
    lookup = {round(left, 10): c for left, c in bins}
    assert lookup[0.98] == 2
    assert lookup[0.985] == 1
    assert lookup[0.99] == 1
    assert lookup[0.995] == 1
    # empty bins inside the occupied range are still emitted
    wide = histogram(report, 0.001)
    assert any(c == 0 for _, c in wide)
    assert sum(c for _, c in wide) == 5


def test_histogram_top_edge_and_errors():
    report = FidelityReport(
        fidelities=[1.0], mean=1.0, std=0.0, count=1,
        master_seed=0, model_fingerprint="x",
    )
    bins = histogram(report, 0.01)
    assert sum(c for _, c in bins) == 1
    with pytest.raises(ValidationError):
        histogram(report, 0.0)
