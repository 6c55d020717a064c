"""Closed-form reference fields for the benchmark wave problems.

Includes the smooth compactly supported bump, separable standing-wave
solutions, periodic traveling profiles, and an exact two-medium d'Alembert
field built by ray tracing (finitely many reflections/transmissions within
the time horizon).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .analysis import ExactField


def bump(s):
    """Smooth bump: exp(1 + 1/(s^2 - 1)) on (-1, 1), zero outside."""
    s = float(s)
    if abs(s) >= 1.0:
        return 0.0
    return math.exp(1.0 + 1.0 / (s * s - 1.0))


def bump_derivative(s):
    s = float(s)
    if abs(s) >= 1.0:
        return 0.0
    d = s * s - 1.0
    return bump(s) * (-2.0 * s / (d * d))


# ---------------------------------------------------------------------------
# separable standing solutions
# ---------------------------------------------------------------------------

def oscillating_string(omega_factor=1.25):
    """``sin(pi x) sin^2(omega t)`` with ``omega = omega_factor * pi``.

    Zero initial data; the matching source for unit speed is returned as a
    separable term list.
    """
    w = omega_factor * math.pi

    def s(t):
        return math.sin(w * t) ** 2

    def sp(t):
        return w * math.sin(2 * w * t)

    def spp(t):
        return 2 * w * w * math.cos(2 * w * t)

    field = ExactField(
        value=lambda x, t: math.sin(math.pi * x) * s(t),
        dt=lambda x, t: math.sin(math.pi * x) * sp(t),
        grad=lambda x, t: (math.pi * math.cos(math.pi * x) * s(t),),
    )
    velocity = ExactField(
        value=lambda x, t: math.sin(math.pi * x) * sp(t),
        dt=lambda x, t: math.sin(math.pi * x) * spp(t),
        grad=lambda x, t: (math.pi * math.cos(math.pi * x) * sp(t),),
    )
    source = [(lambda x: math.sin(math.pi * x),
               lambda t: spp(t) + math.pi**2 * s(t))]
    return field, velocity, source


def harmonic_mode(k):
    """``sin(k pi x) sin(k pi t)``: source-free, nonzero initial velocity."""
    kp = k * math.pi
    field = ExactField(
        value=lambda x, t: math.sin(kp * x) * math.sin(kp * t),
        dt=lambda x, t: kp * math.sin(kp * x) * math.cos(kp * t),
        grad=lambda x, t: (kp * math.cos(kp * x) * math.sin(kp * t),),
    )
    velocity = ExactField(
        value=lambda x, t: kp * math.sin(kp * x) * math.cos(kp * t),
        dt=lambda x, t: -kp * kp * math.sin(kp * x) * math.sin(kp * t),
        grad=lambda x, t: (kp * kp * math.cos(kp * x) * math.cos(kp * t),),
    )
    V0 = lambda x: kp * math.sin(kp * x)
    return field, velocity, V0


def conserved_energy_mode():
    """``(cos(pi t) + sin(pi t)) sin(pi x)``: constant energy pi^2/2."""
    def timefac(t):
        return math.cos(math.pi * t) + math.sin(math.pi * t)

    def dtimefac(t):
        return math.pi * (-math.sin(math.pi * t) + math.cos(math.pi * t))

    field = ExactField(
        value=lambda x, t: timefac(t) * math.sin(math.pi * x),
        dt=lambda x, t: dtimefac(t) * math.sin(math.pi * x),
        grad=lambda x, t: (timefac(t) * math.pi * math.cos(math.pi * x),),
    )
    U0 = lambda x: math.sin(math.pi * x)
    V0 = lambda x: math.pi * math.sin(math.pi * x)
    energy = math.pi**2 / 2.0
    return field, U0, V0, energy


# ---------------------------------------------------------------------------
# periodic traveling profiles
# ---------------------------------------------------------------------------

def tent_profile():
    """C0 tent on [0, 1/2], zero elsewhere; values and derivative."""
    def u0(x):
        x = x % 1.0
        if x > 0.5:
            return 0.0
        return 1.0 - abs(4.0 * x - 1.0)

    def du0(x):
        x = x % 1.0
        if x > 0.5:
            return 0.0
        return 4.0 if x < 0.25 else -4.0

    return u0, du0


def bump_profile():
    """Smooth bump on [0, 1/2], zero elsewhere."""
    def u0(x):
        x = x % 1.0
        if x > 0.5:
            return 0.0
        return bump(4.0 * x - 1.0)

    def du0(x):
        x = x % 1.0
        if x > 0.5:
            return 0.0
        return 4.0 * bump_derivative(4.0 * x - 1.0)

    return u0, du0


def traveling_profile(u0, du0):
    """Right-moving periodic wave ``U(x, t) = u0(x - t)`` with V = -u0'."""
    field = ExactField(
        value=lambda x, t: u0(x - t),
        dt=lambda x, t: -du0(x - t),
        grad=lambda x, t: (du0(x - t),),
    )
    V0 = lambda x: -du0(x)
    return field, V0


def profile_fourier_coefficient(u0, mode, npieces=512, npoints=6):
    """``int_0^1 u0(x) exp(-2 pi i mode x) dx`` by composite Gauss."""
    gx, gw = np.polynomial.legendre.leggauss(npoints)
    total = 0.0 + 0.0j
    edges = np.linspace(0.0, 1.0, npieces + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        xs = a + (gx + 1) / 2 * (b - a)
        ws = gw * (b - a) / 2
        total += sum(w * u0(x) * np.exp(-2j * math.pi * mode * x)
                     for x, w in zip(xs, ws))
    return total


def traveling_coefficient(u0, mode):
    """Exact Fourier coefficient of the traveling wave at any time."""
    c0 = profile_fourier_coefficient(u0, mode)
    return lambda t: c0 * np.exp(-2j * math.pi * mode * t)


def largest_modes(u0, count=4, search=12):
    mags = [(abs(profile_fourier_coefficient(u0, n)), n)
            for n in range(1, search + 1)]
    mags.sort(reverse=True)
    return sorted(n for _, n in mags[:count])


# ---------------------------------------------------------------------------
# two-medium d'Alembert ray field
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ray:
    amplitude: float
    segment: int      # index into the media list
    direction: int    # +1 right, -1 left
    x_birth: float
    offset: float     # pulse coordinate: xi = offset - t + direction*(x-x_birth)/c


class TwoMediaWave:
    """Exact field for a right-moving pulse in a piecewise-two-speed interval.

    Walls reflect with the sign of the boundary condition (+1 Neumann,
    -1 Dirichlet); the interior interface splits rays with the classical
    displacement reflection/transmission coefficients
    ``R = (c_in - c_out)/(c_in + c_out)``, ``T = 2 c_in/(c_in + c_out)``.
    The ray tree is expanded up to the time horizon.
    """

    def __init__(self, pulse, dpulse, support, interface, speeds,
                 domain=(0.0, 1.0), horizon=1.0, wall_sign=1.0):
        self.f = pulse
        self.df = dpulse
        self.support = support
        self.x_if = interface
        self.speeds = speeds
        self.domain = domain
        self.horizon = horizon
        self.wall_sign = wall_sign
        self.segments = [(domain[0], interface), (interface, domain[1])]
        self.rays = self._trace()

    def _trace(self):
        f_lo, f_hi = self.support
        rays = []
        frontier = [Ray(1.0, 0, +1, self.domain[0], 0.0)]
        while frontier:
            ray = frontier.pop()
            # earliest presence of any pulse feature on this ray
            if ray.offset - f_hi > self.horizon:
                continue
            rays.append(ray)
            lo, hi = self.segments[ray.segment]
            c = self.speeds[ray.segment]
            x_exit = hi if ray.direction > 0 else lo
            a_child = ray.offset + ray.direction * (x_exit - ray.x_birth) / c
            at_wall = x_exit in self.domain
            if at_wall:
                frontier.append(Ray(ray.amplitude * self.wall_sign,
                                    ray.segment, -ray.direction, x_exit, a_child))
            else:
                other = 1 - ray.segment
                c_in, c_out = c, self.speeds[other]
                refl = (c_in - c_out) / (c_in + c_out)
                trans = 2.0 * c_in / (c_in + c_out)
                frontier.append(Ray(ray.amplitude * refl, ray.segment,
                                    -ray.direction, x_exit, a_child))
                frontier.append(Ray(ray.amplitude * trans, other,
                                    ray.direction, x_exit, a_child))
        return rays

    def _sum(self, x, t, fn, factor):
        total = 0.0
        # half-open segment ownership so the interface point is counted once
        # (the field is continuous there, either side gives the same value)
        seg_of_x = 0 if x < self.x_if else 1
        for ray in self.rays:
            if ray.segment != seg_of_x:
                continue
            lo, hi = self.segments[ray.segment]
            if not (lo - 1e-14 <= x <= hi + 1e-14):
                continue
            c = self.speeds[ray.segment]
            xi = ray.offset - t + ray.direction * (x - ray.x_birth) / c
            if xi <= self.support[0] or xi >= self.support[1]:
                continue
            total += ray.amplitude * fn(xi) * factor(ray, c)
        return total

    def value(self, x, t):
        return self._sum(x, t, self.f, lambda ray, c: 1.0)

    def dt(self, x, t):
        return self._sum(x, t, self.df, lambda ray, c: -1.0)

    def dx(self, x, t):
        return self._sum(x, t, self.df, lambda ray, c: ray.direction / c)

    def as_exact_field(self):
        return ExactField(value=self.value, dt=self.dt,
                          grad=lambda x, t: (self.dx(x, t),))


def singular_interface_problem(horizon=1.0):
    """Right-moving smooth pulse hitting a 1:2 speed interface at x = 1/2.

    Initial data ``U0 = bump(5x - 1)``, ``V0 = -U0'`` on (0, 1) with
    homogeneous Neumann walls.  Returns (field, U0, V0).
    """
    f = lambda s: bump(5.0 * s - 1.0)
    df = lambda s: 5.0 * bump_derivative(5.0 * s - 1.0)
    wave = TwoMediaWave(pulse=f, dpulse=df, support=(0.0, 0.4),
                        interface=0.5, speeds=(1.0, 2.0), domain=(0.0, 1.0),
                        horizon=horizon, wall_sign=1.0)
    U0 = lambda x: f(x)
    V0 = lambda x: -df(x)
    return wave, U0, V0


def velocity_exact_field(wave: TwoMediaWave, eps=1e-6):
    """V = dU/dt with numerically differentiated second derivatives."""
    def dt(x, t):
        return (wave.dt(x, t + eps) - wave.dt(x, t - eps)) / (2 * eps)

    def gx(x, t):
        return (wave.dx(x, t + eps) - wave.dx(x, t - eps)) / (2 * eps)

    return ExactField(value=wave.dt, dt=dt, grad=lambda x, t: (gx(x, t),))


def gaussian_2d(center, delta):
    cx, cy = center

    def u0(x, y):
        return math.exp(-((x - cx) ** 2 + (y - cy) ** 2) / delta**2)

    return u0
