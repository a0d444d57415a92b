from __future__ import annotations

import logging
import math
from typing import Any, Callable, Optional, Union

import numpy as np
from scipy import fft

from ._arcs import TWO_PI
from ._branch import CUT_GUARD, SqrtRBranch
from ._exceptions import ArcError, EquilibriumError, QuadratureError
from ._measures import DensityProfile, DiscreteMeasure, cosine_nodes
from ._types import Angles, ComplexArray, FloatArray

logger = logging.getLogger(__name__)

ComplexFunction = Callable[[FloatArray], ComplexArray]

START_NODES = 256
MAX_NODES = 2**15
DOUBLING_TOL = 1e-9
NEAR_ZONE = 2.0


def is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def cosine_coefficients(values: Any) -> Any:
    """Coefficients b_n of sum b_n cos(n s) interpolating values at the midpoint nodes.

    Works along the last axis; complex input is split into real and
    imaginary parts.
    """
    vals = np.asarray(values)
    if np.iscomplexobj(vals):
        return cosine_coefficients(vals.real) + 1j * cosine_coefficients(vals.imag)
    n = vals.shape[-1]
    coeffs = fft.dct(vals, type=2, axis=-1) / n
    coeffs[..., 0] /= 2.0
    return coeffs


def glauert_pv(values: Any, s0: FloatArray) -> Any:
    """PV of int_0^pi phi(s) / (cos s - cos s0) ds from samples of phi.

    ``values`` has one row of midpoint samples per target in ``s0``.
    """
    coeffs = cosine_coefficients(values)
    n = coeffs.shape[-1]
    orders = np.arange(1, n)
    s0 = np.asarray(s0, dtype=float)
    sines = np.sin(np.outer(s0, orders))
    return math.pi * np.sum(coeffs[..., 1:] * sines, axis=-1) / np.sin(s0)


def log_product(values: Any, x0: FloatArray) -> Any:
    """int_0^pi phi(s) log|cos s - x0| ds from samples of phi, any real x0."""
    coeffs = cosine_coefficients(values)
    n = coeffs.shape[-1]
    orders = np.arange(1, n)
    x0 = np.asarray(x0, dtype=float)
    out = np.zeros(x0.shape, dtype=coeffs.dtype)
    inside = np.abs(x0) <= 1.0
    if np.any(inside):
        s0 = np.arccos(x0[inside])
        series = np.cos(np.outer(s0, orders)) / orders
        out[inside] = -math.pi * coeffs[inside, 0] * math.log(2.0) - math.pi * np.sum(
            coeffs[inside, 1:] * series, axis=-1
        )
    outside = ~inside
    if np.any(outside):
        xo = x0[outside]
        rho = xo + np.sign(xo) * np.sqrt(xo**2 - 1.0)
        series = rho[:, None] ** (-orders[None, :].astype(float)) / orders
        out[outside] = math.pi * coeffs[outside, 0] * np.log(
            np.abs(rho) / 2.0
        ) - math.pi * np.sum(coeffs[outside, 1:] * series, axis=-1)
    return out


def conjugate_function(samples: Any) -> FloatArray:
    """Periodic Hilbert transform on the uniform grid: mode m -> -i sgn(m)."""
    values = np.asarray(samples)
    if np.iscomplexobj(values):
        raise EquilibriumError("`samples` must be real.")
    values = values.astype(float)
    n = values.size
    if n < 8 or not is_power_of_two(n):
        raise EquilibriumError(
            "`samples` must have a power-of-two length >= 8; "
            f"resize the grid (got {n})."
        )
    spectrum = np.fft.rfft(values)
    multiplier = np.full(spectrum.size, -1j)
    multiplier[0] = 0.0
    multiplier[-1] = 0.0
    return np.fft.irfft(spectrum * multiplier, n=n)


def _doubling(
    compute: Callable[[int], ComplexArray],
    *,
    start: int = START_NODES,
    tol: float = DOUBLING_TOL,
    max_nodes: int = MAX_NODES,
) -> ComplexArray:
    n = start
    previous = compute(n)
    while n < max_nodes:
        n *= 2
        current = compute(n)
        change = np.max(np.abs(current - previous), initial=0.0)
        scale = max(1.0, float(np.max(np.abs(current), initial=0.0)))
        if change <= tol * scale:
            logger.debug("Arc quadrature settled at %d nodes (change %.3e)", n, change)
            return current
        previous = current
    raise QuadratureError(
        f"Arc quadrature did not settle below {tol:g} with {max_nodes} nodes.",
        stage="circlemath",
    )


def _as_targets(z: Any) -> ComplexArray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def pv_cauchy_on_arcs(
    branch: SqrtRBranch,
    g_eval: ComplexFunction,
    z: Any,
    *,
    start: int = START_NODES,
    tol: float = DOUBLING_TOL,
    subtracted: bool = False,
) -> Any:
    """int over the arcs of g(zeta) dzeta / (sqrt(R(zeta)) (zeta - z)), inside values.

    Targets on an arc get the principal value through the cosine-series
    product rule. Targets on the unit circle off the arcs use subtraction
    of g(z), whose integral is pi i / sqrt(R(z)) in closed form; with
    ``subtracted`` that closed-form term is left out.
    """
    targets = _as_targets(z)
    arcs = branch.arcs
    on_circle = np.abs(np.abs(targets) - 1.0) < CUT_GUARD
    index, unwrapped = arcs.locate(np.angle(targets))
    index = np.where(on_circle, index, -1)
    if np.any(on_circle & (arcs.endpoint_distance(np.angle(targets)) < CUT_GUARD)):
        raise ArcError(
            "Cauchy integral requested at an arc endpoint.", stage="circlemath"
        )
    subtract = on_circle & (index < 0)
    g_sub = np.zeros(targets.shape, dtype=complex)
    if np.any(subtract):
        g_sub[subtract] = g_eval(np.angle(targets[subtract]))

    def compute(n: int) -> ComplexArray:
        s = cosine_nodes(n)
        total = np.zeros(targets.shape, dtype=complex)
        for k in range(arcs.k):
            theta, _, inv = branch.on_arc(k, s)
            zeta = np.exp(1j * theta)
            weight = 1j * zeta * inv
            g_vals = g_eval(theta)
            on_k = index == k
            regular = ~on_k
            if np.any(regular):
                numer = g_vals[None, :] - g_sub[regular][:, None]
                kernel = 1.0 / (zeta[None, :] - targets[regular][:, None])
                total[regular] += (numer * weight[None, :] * kernel).sum(axis=1) * (
                    math.pi / n
                )
            if np.any(on_k):
                m = arcs.midpoints[k]
                h = arcs.halfwidths[k]
                theta0 = unwrapped[on_k]
                x0 = np.clip((theta0 - m) / h, -1.0, 1.0)
                s0 = np.arccos(x0)
                delta = np.cos(s)[None, :] - x0[:, None]
                half = h * delta / 2.0
                scale = np.sinc(half / math.pi)
                rotor = np.exp(1j * (theta[None, :] + theta0[:, None]) / 2.0)
                psi = (g_vals * weight)[None, :] / (1j * h * rotor * scale)
                total[on_k] += glauert_pv(psi, s0)
        return total

    result = _doubling(compute, start=start, tol=tol)
    if np.any(subtract) and not subtracted:
        result[subtract] += g_sub[subtract] * math.pi * 1j / branch.offcut(
            targets[subtract]
        )
    if np.ndim(z) == 0:
        return complex(result[0])
    return result


def arc_integral(
    branch: SqrtRBranch,
    integrand: ComplexFunction,
    *,
    start: int = START_NODES,
    tol: float = 1e-12,
) -> complex:
    """int over the arcs of integrand(theta) dzeta / sqrt(R(zeta)), inside values."""

    def compute(n: int) -> ComplexArray:
        s = cosine_nodes(n)
        total = 0j
        for k in range(branch.k):
            theta, _, inv = branch.on_arc(k, s)
            total += np.sum(integrand(theta) * 1j * np.exp(1j * theta) * inv) * (
                math.pi / n
            )
        return np.array([total])

    return complex(_doubling(compute, start=start, tol=tol, max_nodes=MAX_NODES)[0])


def _wrap_near(theta: FloatArray, centre: float) -> FloatArray:
    return centre + np.mod(theta - centre + math.pi, TWO_PI) - math.pi


def _check_nonnegative(profile: DensityProfile) -> None:
    if profile.min_value() < -1e-10:
        raise ArcError(
            "Logarithmic potential needs a nonnegative density.", stage="circlemath"
        )


def _arc_log_potential(profile: DensityProfile, theta: FloatArray) -> FloatArray:
    out = np.zeros(theta.shape)
    for k in range(profile.support.k):
        sample = profile.arc_samples(k)
        m = float(profile.support.midpoints[k])
        h = float(profile.support.halfwidths[k])
        phi = sample.weights * profile.nodes / math.pi
        near_theta = _wrap_near(theta, m)
        x0 = (near_theta - m) / h
        near = np.abs(x0) <= NEAR_ZONE
        far = ~near
        if np.any(far):
            diff = theta[far][:, None] - sample.theta[None, :]
            kernel = np.log(np.abs(2.0 * np.sin(diff / 2.0)))
            out[far] -= kernel @ sample.weights
        if np.any(near):
            xn = x0[near]
            delta = np.cos(sample.s)[None, :] - xn[:, None]
            smooth = np.log(np.abs(np.sinc(h * delta / (2.0 * math.pi))))
            mass = phi.sum() * math.pi / profile.nodes
            rows = np.broadcast_to(phi, (xn.size, phi.size))
            singular = log_product(rows, xn)
            correction = (smooth * phi[None, :]).sum(axis=1) * math.pi / profile.nodes
            out[near] -= math.log(h) * mass + singular + correction
    return out


def log_kernel_potential(
    measure: Union[DensityProfile, DiscreteMeasure],
    theta: Angles,
    *,
    signed: bool = False,
) -> Any:
    """U(e^{i theta}) = -int log|2 sin((theta - t)/2)| dmu(t).

    Densities must be nonnegative unless ``signed`` is set.
    """
    t = np.atleast_1d(np.asarray(theta, dtype=float))
    if isinstance(measure, DiscreteMeasure):
        diff = t[:, None] - measure.theta[None, :]
        dist = np.abs(2.0 * np.sin(diff / 2.0))
        if np.any(dist < 1e-15):
            raise ArcError(
                "Discrete potential requested at a grid node.", stage="circlemath"
            )
        out = -(np.log(dist) @ measure.weights)
    elif measure.is_full:
        if not signed:
            _check_nonnegative(measure)
        coeffs = np.fft.rfft(measure.values) / measure.nodes
        modes = np.arange(1, coeffs.size)
        scale = np.where(2 * modes == measure.nodes, 1.0, 2.0) * math.pi / modes
        phases = np.exp(1j * np.outer(t, modes))
        out = (phases @ (scale * coeffs[1:])).real
    else:
        if not signed:
            _check_nonnegative(measure)
        out = _arc_log_potential(measure, t)
    if np.ndim(theta) == 0:
        return float(out[0])
    return out


def cot_transform(
    profile: DensityProfile, weight: Optional[Callable[[FloatArray], FloatArray]] = None
) -> FloatArray:
    """PV int u(t) f(t) cot((theta - t)/2) dt at the profile's own sample angles.

    The result has the shape of ``profile.values``; ``weight`` is u (1 when
    omitted).
    """
    if profile.is_full:
        u = 1.0 if weight is None else weight(profile.theta)
        return TWO_PI * conjugate_function(u * profile.values)
    out = np.zeros(profile.values.shape)
    samples = [profile.arc_samples(k) for k in range(profile.support.k)]
    for k, target in enumerate(samples):
        h = float(profile.support.halfwidths[k])
        for j, source in enumerate(samples):
            u = 1.0 if weight is None else weight(source.theta)
            if j != k:
                diff = target.theta[:, None] - source.theta[None, :]
                kernel = 1.0 / np.tan(diff / 2.0)
                out[k] += kernel @ (u * source.weights)
                continue
            phi = u * source.weights * profile.nodes / math.pi
            x0 = np.cos(target.s)
            half = h * (np.cos(source.s)[None, :] - x0[:, None]) / 2.0
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(np.abs(half) < 1e-12, 1.0, half / np.tan(half))
            psi = -(2.0 / h) * phi[None, :] * ratio
            out[k] += glauert_pv(psi, target.s)
    return out
