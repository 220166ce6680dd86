import io
import math

import numpy as np
import pytest

import orosoar as oro
from orosoar.errors import (
    IncompleteLattice,
    InsideBody,
    MalformedRow,
    NonMonotoneCoordinates,
    OutOfBounds,
)
from orosoar.windfield import ScaledField, ScaleSchedule

from helpers import cylinder_oracle


class TestCylinder:
    def test_top_speedup(self, cylinder9):
        w = oro.sample_cylinder(cylinder9, 0.0, 1.0)
        assert w.wx == pytest.approx(18.0, abs=1e-12)
        assert w.wz == pytest.approx(0.0, abs=1e-12)

    def test_windward_stagnation(self, cylinder9):
        w = oro.sample_cylinder(cylinder9, -1.0, 0.0)
        assert w.wx == pytest.approx(0.0, abs=1e-12)
        assert w.wz == pytest.approx(0.0, abs=1e-12)

    def test_far_field(self, cylinder9):
        w = oro.sample_cylinder(cylinder9, 1000.0, 0.0)
        assert abs(w.wx - 9.0) / 9.0 < 1e-4
        assert abs(w.wz) / 9.0 < 1e-4

    def test_inside_body_rejected(self, cylinder9):
        with pytest.raises(InsideBody):
            oro.sample_cylinder(cylinder9, 0.3, 0.2)

    def test_against_complex_potential_oracle(self, cylinder9):
        w = oro.sample_cylinder(cylinder9, -1.0, 1.0)
        assert w.wx == pytest.approx(9.0, abs=1e-12)
        assert w.wz == pytest.approx(4.5, abs=1e-12)
        rng = np.random.RandomState(7)
        for _ in range(200):
            x = rng.uniform(-6, 6)
            z = rng.uniform(-6, 6)
            if math.hypot(x, z) < 1.0:
                continue
            ox, oz = cylinder_oracle(9.0, 1.0, (0.0, 0.0), x, z)
            w = oro.sample_cylinder(cylinder9, x, z)
            assert w.wx == pytest.approx(ox, abs=1e-9)
            assert w.wz == pytest.approx(oz, abs=1e-9)

    def test_oracle_with_offset_center(self):
        field = oro.CylinderField(freestream=4.0, radius=0.5, center=(2.0, -1.0))
        ox, oz = cylinder_oracle(4.0, 0.5, (2.0, -1.0), 1.0, 0.5)
        w = oro.sample_cylinder(field, 1.0, 0.5)
        assert (w.wx, w.wz) == pytest.approx((ox, oz), abs=1e-12)

    def test_no_penetration(self, cylinder9):
        r = 1.0 * (1.0 + 1e-8)
        for theta in np.linspace(0.0, 2.0 * math.pi, 73):
            x, z = r * math.cos(theta), r * math.sin(theta)
            w = oro.sample_cylinder(cylinder9, x, z)
            v_r = w.wx * math.cos(theta) + w.wz * math.sin(theta)
            assert abs(v_r) < 1e-6 * 9.0

    def test_incompressible(self, cylinder9):
        h = 1e-4
        rng = np.random.RandomState(3)
        for _ in range(100):
            r = rng.uniform(1.1, 8.0)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            x, z = r * math.cos(theta), r * math.sin(theta)
            dwx = (oro.sample_cylinder(cylinder9, x + h, z).wx
                   - oro.sample_cylinder(cylinder9, x - h, z).wx) / (2 * h)
            dwz = (oro.sample_cylinder(cylinder9, x, z + h).wz
                   - oro.sample_cylinder(cylinder9, x, z - h).wz) / (2 * h)
            assert abs(dwx + dwz) < 1e-6 * 9.0 / 1.0

    def test_mirror_symmetry(self, cylinder9):
        rng = np.random.RandomState(11)
        for _ in range(100):
            x = rng.uniform(0.1, 6.0)
            z = rng.uniform(-6.0, 6.0)
            if math.hypot(x, z) <= 1.0:
                continue
            w_pos = oro.sample_cylinder(cylinder9, x, z)
            w_neg = oro.sample_cylinder(cylinder9, -x, z)
            assert w_neg.wx == pytest.approx(w_pos.wx, abs=1e-12)
            assert w_neg.wz == pytest.approx(-w_pos.wz, abs=1e-12)

    def test_upper_windward_quadrant_has_updraft(self, cylinder9):
        rng = np.random.RandomState(13)
        for _ in range(200):
            x = rng.uniform(-6.0, -0.05)
            z = rng.uniform(0.05, 6.0)
            if math.hypot(x, z) <= 1.0:
                continue
            assert oro.sample_cylinder(cylinder9, x, z).wz > 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            oro.CylinderField(freestream=0.0, radius=1.0)
        with pytest.raises(ValueError):
            oro.CylinderField(freestream=9.0, radius=-1.0)


class TestGrid:
    def _field(self):
        xs = np.array([0.0, 1.0, 2.0])
        zs = np.array([0.0, 1.0])
        wx = np.arange(6.0).reshape(3, 2)
        wz = np.arange(6.0).reshape(3, 2) * 0.1
        return oro.GridField(xs, zs, wx, wz)

    def test_node_identity(self):
        field = self._field()
        w = oro.sample_grid(field, 1.0, 1.0)
        assert w.wx == 3.0
        assert w.wz == pytest.approx(0.3)

    def test_bilinear_midpoint(self):
        xs = np.array([0.0, 1.0])
        zs = np.array([0.0, 1.0])
        wz = np.array([[0.0, 1.0], [0.0, 1.0]])
        field = oro.GridField(xs, zs, np.zeros((2, 2)), wz)
        assert oro.sample_grid(field, 0.5, 0.5).wz == pytest.approx(0.5)

    def test_out_of_bounds(self):
        field = self._field()
        with pytest.raises(OutOfBounds) as exc:
            oro.sample_grid(field, 2.5, 0.5)
        assert exc.value.axis == "x"
        assert exc.value.value == 2.5
        with pytest.raises(OutOfBounds) as exc:
            oro.sample_grid(field, 0.5, -0.1)
        assert exc.value.axis == "z"

    def test_reproduces_bilinear_function_exactly(self):
        f = lambda x, z: 2.0 + 3.0 * x - 1.5 * z + 0.25 * x * z
        xs = np.array([-1.0, 0.5, 2.0, 4.0])
        zs = np.array([0.0, 1.5, 3.0])
        wx = np.array([[f(x, z) for z in zs] for x in xs])
        field = oro.GridField(xs, zs, wx, wx * 0.5)
        rng = np.random.RandomState(5)
        for _ in range(100):
            x = rng.uniform(-1.0, 4.0)
            z = rng.uniform(0.0, 3.0)
            assert oro.sample_grid(field, x, z).wx == pytest.approx(f(x, z), abs=1e-12)

    def test_non_monotone_rejected(self):
        xs = np.array([0.0, 2.0, 1.0])
        with pytest.raises(NonMonotoneCoordinates):
            oro.GridField(xs, np.array([0.0, 1.0]),
                          np.zeros((3, 2)), np.zeros((3, 2)))

    def test_samples_are_read_only(self):
        field = self._field()
        with pytest.raises(ValueError):
            field.wx_samples[0, 0] = 99.0


class TestScaleSchedule:
    def test_identity(self, cylinder9):
        schedule = ScaleSchedule(((0.0, 1.0),))
        base = oro.sample(cylinder9, None, -2.0, 1.0, 0.0)
        scaled = oro.sample(cylinder9, schedule, -2.0, 1.0, 5.0)
        assert scaled == base

    def test_wind_speed_step_scaling(self):
        # 8.5 -> 9.5 m/s free stream as a pure magnitude scale
        lam = 9.5 / 8.5
        schedule = ScaleSchedule(((0.0, 1.0), (10.0, lam)))
        field = oro.GridField(
            np.array([-1.0, 1.0]), np.array([-1.0, 1.0]),
            np.full((2, 2), 8.5), np.full((2, 2), 1.0))
        w = oro.sample(field, schedule, 0.0, 0.0, 20.0)
        assert w.wx == pytest.approx(9.5, abs=1e-12)
        assert w.wz == pytest.approx(1.1176470588235294, abs=1e-12)

    def test_piecewise_linear_midpoint(self):
        schedule = ScaleSchedule(((0.0, 1.0), (10.0, 2.0)))
        assert schedule.value(5.0) == pytest.approx(1.5)
        assert schedule.value(-1.0) == 1.0
        assert schedule.value(11.0) == 2.0

    def test_uniform_scaling_is_exact(self, cylinder9):
        schedule = ScaleSchedule(((0.0, 1.37),))
        rng = np.random.RandomState(17)
        for _ in range(100):
            x = rng.uniform(-5.0, 5.0)
            z = rng.uniform(-5.0, 5.0)
            if math.hypot(x, z) <= 1.0:
                continue
            base = oro.sample(cylinder9, None, x, z, 0.0)
            scaled = oro.sample(cylinder9, schedule, x, z, 0.0)
            assert scaled.wx == 1.37 * base.wx
            assert scaled.wz == 1.37 * base.wz

    def test_scaled_field_wrapper_composes(self, cylinder9):
        inner = ScaleSchedule(((0.0, 2.0),))
        outer = ScaleSchedule(((0.0, 3.0),))
        wrapped = ScaledField(cylinder9, inner)
        base = oro.sample(cylinder9, None, -2.0, 2.0, 0.0)
        w = oro.sample(wrapped, outer, -2.0, 2.0, 0.0)
        assert w.wx == pytest.approx(6.0 * base.wx, rel=1e-15)
        assert w.wz == pytest.approx(6.0 * base.wz, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            ScaleSchedule(((0.0, 1.0), (0.0, 2.0)))
        with pytest.raises(ValueError):
            ScaleSchedule(((0.0, -1.0),))
        with pytest.raises(ValueError):
            ScaleSchedule(())


class TestLoadGrid:
    def test_unit_cell(self):
        csv_text = "x,z,wx,wz\n0,0,1,0.1\n1,0,2,0.2\n0,1,3,0.3\n1,1,4,0.4\n"
        field = oro.load_grid(io.StringIO(csv_text))
        assert field.x_coords.tolist() == [0.0, 1.0]
        assert field.z_coords.tolist() == [0.0, 1.0]
        assert field.wx_samples[1, 1] == 4.0

    def test_row_order_is_arbitrary(self):
        shuffled = "x,z,wx,wz\n1,1,4,0.4\n0,0,1,0.1\n1,0,2,0.2\n0,1,3,0.3\n"
        field = oro.load_grid(io.StringIO(shuffled))
        assert field.wx_samples[0, 1] == 3.0

    def test_missing_point(self):
        csv_text = "x,z,wx,wz\n0,0,1,0.1\n1,0,2,0.2\n0,1,3,0.3\n"
        with pytest.raises(IncompleteLattice):
            oro.load_grid(io.StringIO(csv_text))

    def test_malformed_cell_reports_line(self):
        csv_text = "x,z,wx,wz\n0,0,1,0.1\n1,0,oops,0.2\n"
        with pytest.raises(MalformedRow) as exc:
            oro.load_grid(io.StringIO(csv_text))
        assert exc.value.line == 3

    def test_bad_header(self):
        with pytest.raises(MalformedRow) as exc:
            oro.load_grid(io.StringIO("a,b,c,d\n0,0,1,1\n"))
        assert exc.value.line == 1

    def test_duplicate_point(self):
        csv_text = "x,z,wx,wz\n0,0,1,0.1\n0,0,2,0.2\n"
        with pytest.raises(MalformedRow):
            oro.load_grid(io.StringIO(csv_text))

    def test_coordinate_jitter_is_merged(self):
        csv_text = (
            "x,z,wx,wz\n"
            "0,0,1,0.1\n"
            "1,0,2,0.2\n"
            "1e-13,1,3,0.3\n"
            "1.0000000000001,1,4,0.4\n"
        )
        field = oro.load_grid(io.StringIO(csv_text))
        assert field.x_coords.size == 2
        assert field.wx_samples[0, 1] == 3.0
