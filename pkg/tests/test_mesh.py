import numpy as np
import pytest

from photonmesh import (
    MeshSettings,
    UnitCellAddress,
    UnitCellSettings,
    ValidationError,
    decompose,
    haar_random_unitary,
    identity_settings,
    mesh_topology,
    reconstruct,
    unit_cell_matrix,
    unitarity_deviation,
    wrap_phase,
)
from photonmesh.mesh import BAR_STATE, TWO_PI


def test_topology_smallest_mesh():
    assert mesh_topology(2) == [UnitCellAddress(0, 0)]


def test_topology_n3_enumeration():
    assert mesh_topology(3) == [
        UnitCellAddress(0, 0),
        UnitCellAddress(1, 1),
        UnitCellAddress(2, 0),
    ]


def test_topology_n12_census():
    topo = mesh_topology(12)
    assert len(topo) == 66
    assert len({a.column for a in topo}) == 12


@pytest.mark.parametrize("n", range(2, 17))
def test_topology_counts_and_parity(n):
    topo = mesh_topology(n)
    assert len(topo) == n * (n - 1) // 2
    assert len(set(topo)) == len(topo)
    for a in topo:
        assert a.column % 2 == a.top_mode % 2
        assert 0 <= a.column < n


@pytest.mark.parametrize("n", [2, 5, 8, 12])
def test_topology_light_cone(n):
    # every input reaches every output by walking the columns
    reach = {m: {m} for m in range(n)}
    for a in sorted(mesh_topology(n)):
        merged = reach[a.top_mode] | reach[a.top_mode + 1]
        reach[a.top_mode] = set(merged)
        reach[a.top_mode + 1] = set(merged)
    for m in range(n):
        assert reach[m] == set(range(n))


def test_topology_rejects_small_n():
    with pytest.raises(ValidationError):
        mesh_topology(1)


def test_unit_cell_is_unitary():
    for theta, phi in [(0.0, 0.0), (1.0, 2.0), (np.pi, np.pi), (5.5, 0.3)]:
        assert unitarity_deviation(unit_cell_matrix(theta, phi)) < 1e-14


def test_unit_cell_bar_and_cross():
    bar = np.abs(unit_cell_matrix(np.pi, 0.4))
    assert np.allclose(bar, np.eye(2), atol=1e-15)
    cross = np.abs(unit_cell_matrix(0.0, 0.4))
    assert np.allclose(cross, [[0, 1], [1, 0]], atol=1e-15)
    # (theta, phi) = (pi, pi) is exactly the identity cell
    assert np.allclose(unit_cell_matrix(*BAR_STATE), np.eye(2), atol=1e-15)


def test_unit_cell_balanced_point():
    m = np.abs(unit_cell_matrix(np.pi / 2, 1.1))
    assert np.allclose(m, np.full((2, 2), 1 / np.sqrt(2)), atol=1e-15)


def test_unit_cell_matches_direct_product_oracle():
    theta, phi = np.pi / 2, np.pi / 3

    def dc(kappa):
        a, b = np.sqrt(1 - kappa), np.sqrt(kappa)
        return np.array([[a, 1j * b], [1j * b, a]])

    oracle = (
        dc(0.5)
        @ np.diag([np.exp(1j * theta), 1])
        @ dc(0.5)
        @ np.diag([np.exp(1j * phi), 1])
    )
    assert np.max(np.abs(unit_cell_matrix(theta, phi) - oracle)) < 1e-15


def test_unit_cell_power_split_sums_to_one():
    for theta in np.linspace(0, 2 * np.pi, 17):
        m = unit_cell_matrix(theta, 0.7)
        assert abs(m[0, 0]) ** 2 + abs(m[1, 0]) ** 2 == pytest.approx(1.0, abs=1e-14)


def test_wrap_phase():
    assert wrap_phase(0.0) == 0.0
    assert wrap_phase(TWO_PI) == 0.0
    assert wrap_phase(-0.5) == pytest.approx(TWO_PI - 0.5, abs=1e-15)
    assert wrap_phase(7.0) == pytest.approx(7.0 - TWO_PI, abs=1e-15)
    assert wrap_phase(-1e-18) < TWO_PI  # rounding guard
    with pytest.raises(ValidationError):
        wrap_phase(float("nan"))


def test_decompose_identity_roundtrip():
    u = np.eye(12, dtype=complex)
    assert np.max(np.abs(reconstruct(decompose(u)) - u)) <= 1e-12


def test_decompose_haar_roundtrip():
    u = haar_random_unitary(12, 42)
    assert np.max(np.abs(reconstruct(decompose(u)) - u)) <= 1e-10


def test_decompose_swap_is_single_cross_cell():
    swap = np.array([[0, 1], [1, 0]], dtype=complex)
    settings = decompose(swap)
    assert len(settings.cells) == 1
    assert settings.cells[0].theta == pytest.approx(0.0, abs=1e-15)  # cross state
    assert np.max(np.abs(reconstruct(settings) - swap)) < 1e-14


def test_decompose_rejects_non_unitary():
    with pytest.raises(ValidationError) as err:
        decompose(np.ones((3, 3), dtype=complex))
    assert "not unitary" in str(err.value)


def test_decompose_emits_exact_topology():
    for n in [2, 3, 7, 12]:
        settings = decompose(haar_random_unitary(n, n))
        assert [c.address for c in settings.cells] == mesh_topology(n)


def test_decompose_phases_wrapped():
    for seed in range(5):
        settings = decompose(haar_random_unitary(9, seed))
        for c in settings.cells:
            assert 0.0 <= c.theta < TWO_PI
            assert 0.0 <= c.phi < TWO_PI


@pytest.mark.parametrize("n", range(2, 13))
def test_roundtrip_fuzz(n):
    for seed in range(20):
        u = haar_random_unitary(n, seed)
        assert np.max(np.abs(reconstruct(decompose(u)) - u)) <= 1e-10


def test_reconstruct_bar_mesh_is_identity():
    for n in [2, 5, 12]:
        assert np.max(np.abs(reconstruct(identity_settings(n)) - np.eye(n))) < 1e-14


def test_reconstruct_single_cell_equals_unit_cell():
    settings = MeshSettings(
        2, [UnitCellSettings(UnitCellAddress(0, 0), 1.2, 2.3)], np.zeros(2)
    )
    assert np.max(np.abs(reconstruct(settings) - unit_cell_matrix(1.2, 2.3))) < 1e-15


def test_reconstruct_random_settings_is_unitary():
    rng = np.random.default_rng(5)
    for _ in range(10):
        cells = [
            UnitCellSettings(a, rng.uniform(0, TWO_PI), rng.uniform(0, TWO_PI))
            for a in mesh_topology(5)
        ]
        settings = MeshSettings(5, cells, rng.uniform(0, TWO_PI, 5))
        assert unitarity_deviation(reconstruct(settings)) <= 1e-12


def test_reconstruct_rejects_malformed_topology():
    cells = [
        UnitCellSettings(UnitCellAddress(0, 0), 1.0, 1.0),
        UnitCellSettings(UnitCellAddress(0, 0), 1.0, 1.0),
        UnitCellSettings(UnitCellAddress(2, 0), 1.0, 1.0),
    ]
    with pytest.raises(ValidationError):
        reconstruct(MeshSettings(3, cells, np.zeros(3)))
    with pytest.raises(ValidationError):  # parity violation
        MeshSettings(
            2, [UnitCellSettings(UnitCellAddress(1, 0), 1.0, 1.0)], np.zeros(2)
        ).validate()
    with pytest.raises(ValidationError):  # wrong cell count
        MeshSettings(3, [], np.zeros(3)).validate()


def test_mesh_settings_json_roundtrip(tmp_path):
    settings = decompose(haar_random_unitary(6, 17))
    path = tmp_path / "mesh.json"
    settings.save(path)
    loaded = MeshSettings.load(path)
    assert loaded.n == settings.n
    assert loaded.cells == settings.cells
    assert np.array_equal(loaded.output_phases, settings.output_phases)
    # cells are serialized in column-major evaluation order
    doc_cells = settings.to_dict()["cells"]
    keys = [(c["column"], c["top_mode"]) for c in doc_cells]
    assert keys == sorted(keys)
