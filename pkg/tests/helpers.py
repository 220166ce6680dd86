"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the package's own code paths: the
cylinder oracle evaluates the complex potential, the contour oracle does
a direct sign scan, and the PID oracle is a separate hand-rolled
implementation.
"""

import math

import numpy as np

import orosoar as oro
from orosoar.control import PidGains, SoaringControllerConfig

CYLINDER = oro.CylinderField(freestream=8.5, radius=1.0)
DOMAIN = oro.Domain(x_min=-6.0, x_max=1.0, z_min=0.0, z_max=5.0)

# Three target lines crossing the contour at distinct polar points
# (horizontal wind ~7.90, ~8.77, ~9.39 m/s against the 9.0 m/s minimum-sink
# speed). The slow and near lines are radial; the fast line is aligned
# with the local excess-updraft gradient, i.e. perpendicular to the
# contour.
TGL_SPECS = {
    "slow": {"origin": (0.0, 0.0), "angle": math.radians(90.0 - 157.0),
             "z_range": (0.6, 4.5), "z_start": 0.8},
    "near": {"origin": (0.0, 0.0), "angle": math.radians(90.0 - 120.94),
             "z_range": (1.0, 5.0), "z_start": 2.2},
    "fast": {"origin": (-0.7432, 2.7737), "angle": math.radians(49.49),
             "z_range": (0.5, 4.2), "z_start": 2.3},
}


def make_tgl(kind):
    spec = TGL_SPECS[kind]
    return oro.make_tgl(spec["origin"], spec["angle"])


def controller_config(theta0=0.08):
    return oro.default_controller_config(theta0)


def airframe_for(v_ref):
    return oro.AirframeParams(
        m=1.2, S=0.3, rho=1.225, g=9.81, a0=0.035, a1=-0.07, a2=0.06,
        theta0=0.08, v_ref=v_ref, k_v=20.0, tau_v=0.5, tau_theta=0.3,
        v_min=5.0, v_max=14.0,
    )


def build_scenario(kind, plant_mode="lag", duration=90.0, schedule=None,
                   tgl_schedule=None, z_start=None, dt=0.02):
    """Closed-loop scenario on the cylinder field for one of the three
    canonical target lines, trimmed at the predicted equilibrium wind."""
    spec = TGL_SPECS[kind]
    tgl = make_tgl(kind)
    polar = oro.default_polar()
    eq = oro.predict_equilibrium(
        tgl, CYLINDER, None, polar, spec["z_range"], 0.0)
    v_ref = eq.local_wind[0]
    z0 = spec["z_start"] if z_start is None else z_start
    x0 = -(tgl.b * z0 + tgl.c) / tgl.a
    scenario = oro.Scenario(
        field_spec=CYLINDER,
        schedule=schedule,
        airframe=airframe_for(v_ref),
        polar=polar,
        controller=controller_config(),
        tgl_schedule=tgl_schedule if tgl_schedule is not None else ((0.0, tgl),),
        domain=DOMAIN,
        plant_mode=plant_mode,
        dt=dt,
        duration=duration,
        initial=oro.UavState(0.0, x0, z0, v_ref, 0.08),
        z_range=spec["z_range"],
    )
    return scenario, eq, tgl


def constant_wind_grid(wx, wz, x_span=(-10.0, 10.0), z_span=(-10.0, 10.0)):
    xs = np.array(x_span)
    zs = np.array(z_span)
    return oro.GridField(
        xs, zs,
        np.full((2, 2), float(wx)),
        np.full((2, 2), float(wz)),
    )


def linear_updraft_grid(wx, wz_of_z, z_span=(0.0, 2.0), x_span=(-5.0, 5.0)):
    """Grid with constant horizontal wind and wz linear in z (exact under
    bilinear interpolation)."""
    xs = np.array(x_span)
    zs = np.array(z_span)
    wz = np.array([[wz_of_z(z) for z in zs] for _ in xs])
    return oro.GridField(xs, zs, np.full((2, 2), float(wx)), wz)


# independent oracles ----------------------------------------------------

def cylinder_oracle(freestream, radius, center, x, z):
    """Complex-potential evaluation W'(zeta) = U (1 - R^2 / zeta^2)."""
    zeta = complex(x - center[0], z - center[1])
    w = freestream * (1.0 - (radius * radius) / (zeta * zeta))
    return w.real, -w.imag


def pid_oracle(kp, ki, kd, tau, int_limit, out_limit, errors, dt):
    """Separate discrete PID: trapezoidal integral, filtered derivative,
    integral clamp, freeze while saturated. Returns the output sequence."""
    integral = 0.0
    deriv = 0.0
    prev = None
    outputs = []
    for e in errors:
        p = e if prev is None else prev
        new_integral = integral
        if ki != 0.0:
            new_integral = integral + 0.5 * dt * (e + p)
            new_integral = max(min(new_integral, int_limit), -int_limit)
        if kd != 0.0:
            raw = 0.0 if prev is None else (e - p) / dt
            deriv = raw if tau == 0.0 else deriv + (dt / (tau + dt)) * (raw - deriv)
        u = kp * e + ki * new_integral + kd * deriv
        if abs(u) > out_limit:
            new_integral = max(min(integral, int_limit), -int_limit)
            u = kp * e + ki * new_integral + kd * deriv
            u = max(min(u, out_limit), -out_limit)
        integral = new_integral
        prev = e
        outputs.append(u)
    return outputs


def excess_scan_cells(field, polar, domain, nx, nz, t=0.0, schedule=None):
    """Direct corner-sign scan: set of (i, j) cells whose corners have
    mixed sign, and the set of cells with any unknown corner."""
    xs = [domain.x_min + (domain.x_max - domain.x_min) * i / nx for i in range(nx + 1)]
    zs = [domain.z_min + (domain.z_max - domain.z_min) * j / nz for j in range(nz + 1)]
    vals = {}
    for i, x in enumerate(xs):
        for j, z in enumerate(zs):
            try:
                vals[(i, j)] = oro.excess_updraft(field, schedule, polar, x, z, t)
            except oro.errors.OrosoarError:
                vals[(i, j)] = None
    changed = set()
    unknown = set()
    for i in range(nx):
        for j in range(nz):
            corners = [vals[(i, j)], vals[(i + 1, j)],
                       vals[(i + 1, j + 1)], vals[(i, j + 1)]]
            if any(v is None for v in corners):
                unknown.add((i, j))
                continue
            inside = [v > 0.0 for v in corners]
            if any(inside) and not all(inside):
                changed.add((i, j))
    return changed, unknown


def polyline_cells(contour, domain, nx, nz):
    """Cells crossed by the contour polylines, from segment midpoints."""
    dx = (domain.x_max - domain.x_min) / nx
    dz = (domain.z_max - domain.z_min) / nz
    cells = set()
    for poly in contour.polylines:
        for (x0, z0), (x1, z1) in zip(poly, poly[1:]):
            mx, mz = 0.5 * (x0 + x1), 0.5 * (z0 + z1)
            i = min(max(int((mx - domain.x_min) / dx), 0), nx - 1)
            j = min(max(int((mz - domain.z_min) / dz), 0), nz - 1)
            cells.add((i, j))
    return cells
