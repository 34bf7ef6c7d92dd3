# test_filling.py
"""
Filling sequences for rectangles and circuit-bounded regions, and the
per-step certificate.

Run:
    pytest test_filling.py
"""

import pytest

from operators.errors import FillingError
from operators.filling import (
    admissible_rectangle_targets,
    circuit_ball_target,
    fill_circuit_bounded,
    fill_rectangle,
    prefix_checks,
    verify_filling_step,
)
from operators.lattice import (
    Region,
    bonds_in_box,
    build_rectangle,
    interior,
    is_approximate_rectangle,
    is_connected,
    is_slc,
)

L_CELLS = [(0, 0), (1, 0), (2, 0), (0, 1), (0, 2)]


@pytest.fixture
def box5() -> Region:
    return build_rectangle((0, 0), (4, 4))


@pytest.fixture
def box3() -> Region:
    return build_rectangle((0, 0), (2, 2))


@pytest.fixture
def box4() -> Region:
    return build_rectangle((0, 0), (3, 3))


def _cells(cells) -> Region:
    return Region({b for x, y in cells for b in bonds_in_box((x, y), (x + 1, y + 1))})


def _assert_rectangle_prefixes(region, sequence):
    for prefix in sequence.prefixes():
        assert is_approximate_rectangle(prefix), prefix
        assert is_connected(set(region.bonds) - set(prefix)), prefix


# =============================================================================
# Rectangles
# =============================================================================

class TestFillRectangle:
    def test_domino_target(self, box5):
        target = bonds_in_box((1, 1), (3, 1))
        sequence = fill_rectangle(box5, target)
        assert set(sequence.order) == set(target)
        assert sequence.certified
        _assert_rectangle_prefixes(box5, sequence)

    def test_interior_cell_goes_bottom_first(self, box5):
        target = bonds_in_box((1, 1), (2, 2))
        sequence = fill_rectangle(box5, target)
        assert sequence.order[0] == ((1, 1), (2, 1))
        assert set(sequence.order) == set(target)
        assert sequence.certified
        _assert_rectangle_prefixes(box5, sequence)

    def test_target_on_the_boundary(self, box5):
        target = bonds_in_box((0, 0), (2, 0))
        sequence = fill_rectangle(box5, target)
        assert set(sequence.order) == set(target)
        assert sequence.certified
        _assert_rectangle_prefixes(box5, sequence)

    def test_corner_target_across_two_faces(self, box4):
        target = bonds_in_box((0, 0), (2, 3))
        sequence = fill_rectangle(box4, target)
        assert set(sequence.order) == set(target)
        assert sequence.certified, [s.reason for s in sequence.steps if not s.ok]
        _assert_rectangle_prefixes(box4, sequence)

    def test_prefix_only_mode_skips_neighborhoods(self, box5):
        sequence = fill_rectangle(box5, bonds_in_box((1, 1), (2, 2)), certify_steps=False)
        assert all(step.witness == () for step in sequence.steps)
        assert sequence.certified

    def test_every_admissible_target(self, box3):
        targets = admissible_rectangle_targets(box3)
        assert targets
        for target in targets:
            sequence = fill_rectangle(box3, target)
            assert set(sequence.order) == set(target)
            assert sequence.certified, target
            _assert_rectangle_prefixes(box3, sequence)

    @pytest.mark.slow
    def test_every_admissible_target_4x4(self, box4):
        for target in admissible_rectangle_targets(box4):
            sequence = fill_rectangle(box4, target)
            assert sequence.certified, target
            _assert_rectangle_prefixes(box4, sequence)

    @pytest.mark.slow
    def test_every_admissible_target_5x5(self, box5):
        for target in admissible_rectangle_targets(box5):
            sequence = fill_rectangle(box5, target)
            assert sequence.certified, target
            _assert_rectangle_prefixes(box5, sequence)

    def test_single_bond_target(self, box5):
        with pytest.raises(FillingError):
            fill_rectangle(box5, [((1, 1), (2, 1))])

    def test_region_must_be_a_rectangle(self):
        with pytest.raises(FillingError):
            fill_rectangle(_cells(L_CELLS), bonds_in_box((0, 0), (1, 0)))

    def test_thin_region_is_rejected(self):
        with pytest.raises(FillingError):
            fill_rectangle(build_rectangle((0, 0), (3, 1)), bonds_in_box((0, 0), (2, 0)))

    def test_target_outside_region(self, box3):
        with pytest.raises(FillingError):
            fill_rectangle(box3, bonds_in_box((3, 3), (5, 3)))

    def test_trace_json(self, box5):
        sequence = fill_rectangle(box5, bonds_in_box((1, 1), (3, 1)), certify_steps=False)
        data = sequence.to_json()
        assert data["family"] == "rectangle"
        assert len(data["steps"]) == 2
        assert data["certified"] is True


# =============================================================================
# Circuit-Bounded Regions
# =============================================================================

class TestFillCircuitBounded:
    def test_star_around_the_centre(self, box3):
        sequence = fill_circuit_bounded(box3, (1, 1), radius=1)
        assert len(sequence.order) == 4
        assert all((1, 1) in b for b in sequence.order)
        assert all(is_slc(p) for p in sequence.prefixes())
        assert sequence.certified, [s.reason for s in sequence.steps if not s.ok]

    def test_l_shape(self):
        region = _cells(L_CELLS)
        sequence = fill_circuit_bounded(region, (1, 1), radius=1)
        assert set(sequence.order) == {((1, 0), (1, 1)), ((0, 1), (1, 1))}
        assert all(is_slc(p) for p in sequence.prefixes())
        assert sequence.certified, [s.reason for s in sequence.steps if not s.ok]

    def test_ball_target_needs_a_circuit(self, strip):
        with pytest.raises(FillingError):
            circuit_ball_target(strip, (2, 0), 1)

    def test_centre_outside_region(self, box3):
        with pytest.raises(FillingError):
            circuit_ball_target(box3, (9, 9), 1)

    def test_three_dimensions_rejected(self):
        with pytest.raises(FillingError):
            fill_circuit_bounded(build_rectangle((0, 0, 0), (1, 1, 1)), (0, 0, 0))


# =============================================================================
# Step Certificates
# =============================================================================

class TestStepCertificate:
    def test_prefix_checks_keys(self, box5):
        checks = prefix_checks(box5, bonds_in_box((1, 1), (2, 1)), "rectangle")
        assert checks["approximate_rectangle"]
        assert checks["complement_connected"]
        assert checks["slc"]

    def test_step_on_an_empty_prefix(self, box5):
        report = verify_filling_step(box5, [], ((2, 2), (3, 2)))
        assert report.ok, report.reason
        assert report.case in ("c'", "c''")
        assert ((2, 2), (3, 2)) in report.witness

    def test_boundary_step_beside_the_filled_face(self, box4):
        # interior of the corner target plus the bottom face and the lower left face
        target = set(bonds_in_box((0, 0), (2, 3)))
        prefix = sorted(target & set(interior(box4))) + [
            ((0, 0), (1, 0)),
            ((1, 0), (2, 0)),
            ((0, 0), (0, 1)),
            ((0, 1), (0, 2)),
        ]
        report = verify_filling_step(box4, prefix, ((0, 2), (0, 3)))
        assert report.ok, report.reason
        assert report.case == "c'"
        assert is_approximate_rectangle(report.witness)

    def test_irregular_prefix_fails(self, box5):
        # the left side of the bounding box is in, the middle rung it abuts is not
        prefix = [((1, 1), (2, 1)), ((1, 1), (1, 2)), ((1, 2), (1, 3))]
        report = verify_filling_step(box5, prefix, ((3, 3), (4, 3)))
        assert not report.ok
        assert report.reason

    def test_bond_outside_region(self, box3):
        with pytest.raises(ValueError):
            verify_filling_step(box3, [], ((5, 5), (6, 5)))

    def test_bond_already_filled(self, box3):
        bond = ((0, 0), (1, 0))
        with pytest.raises(ValueError):
            verify_filling_step(box3, [bond], bond)

    def test_unknown_family(self, box3):
        with pytest.raises(ValueError):
            verify_filling_step(box3, [], ((0, 0), (1, 0)), family="hexagon")
