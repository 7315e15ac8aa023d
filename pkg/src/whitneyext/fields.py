"""Gallery of functions with exact partial derivatives.

Every field answers eval(points, gamma) with the exact derivative D^gamma
at an (N, d) batch of points, up to its declared k_max.  Analytic formulas
are hand-coded; a finite-difference cross-check lives in the test suite.
"""

from __future__ import annotations

import math

import numpy as np


class FieldFunction:
    k_max: int = 0
    label: str = "field"
    d: int = 2

    def eval(self, pts: np.ndarray, gamma: tuple[int, ...]) -> np.ndarray:
        raise NotImplementedError

    def __mul__(self, c: float) -> "FieldFunction":
        return ScaledField(self, float(c))

    __rmul__ = __mul__

    def __add__(self, other: "FieldFunction") -> "FieldFunction":
        return SumField(self, other)


class ScaledField(FieldFunction):
    def __init__(self, base: FieldFunction, c: float):
        self.base, self.c = base, c
        self.k_max = base.k_max
        self.d = base.d
        self.label = f"{c}*{base.label}"

    def eval(self, pts, gamma):
        return self.c * self.base.eval(pts, gamma)


class SumField(FieldFunction):
    def __init__(self, a: FieldFunction, b: FieldFunction):
        self.a, self.b = a, b
        self.k_max = min(a.k_max, b.k_max)
        self.d = a.d
        self.label = f"{a.label}+{b.label}"

    def eval(self, pts, gamma):
        return self.a.eval(pts, gamma) + self.b.eval(pts, gamma)


class PolyField(FieldFunction):
    """Polynomial sum c_gamma * (x - center)^gamma with exact derivatives."""

    k_max = 12

    def __init__(self, coeffs: dict[tuple[int, ...], float], center=None, label="poly"):
        self.coeffs = {tuple(g): float(v) for g, v in coeffs.items()}
        some = next(iter(self.coeffs))
        self.d = len(some)
        self.center = np.zeros(self.d) if center is None else np.asarray(center, dtype=float)
        self.label = label

    def eval(self, pts, gamma):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - self.center
        out = np.zeros(pts.shape[0])
        for mono, c in self.coeffs.items():
            term = np.full(pts.shape[0], c)
            ok = True
            for ax, (g, der) in enumerate(zip(mono, gamma)):
                if der > g:
                    ok = False
                    break
                term *= math.perm(g, der) * rel[:, ax] ** (g - der)
            if ok:
                out += term
        return out


class SinProdField(FieldFunction):
    """Product of one-dimensional sinusoids; derivatives of every order."""

    k_max = 8

    def __init__(self, freqs=(1.3, 0.9), phases=(0.4, 1.1), amp=1.0, label="sinprod"):
        self.freqs = np.asarray(freqs, dtype=float)
        self.phases = np.asarray(phases, dtype=float)
        self.amp = float(amp)
        self.d = len(self.freqs)
        self.label = label

    def eval(self, pts, gamma):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        out = np.full(pts.shape[0], self.amp)
        for ax, g in enumerate(gamma):
            a, ph = self.freqs[ax], self.phases[ax]
            out = out * a**g * np.sin(a * pts[:, ax] + ph + g * np.pi / 2.0)
        return out


class CuspField(FieldFunction):
    """|x - c|^tau, a Hoelder-tau point singularity; first derivatives exact."""

    k_max = 1

    def __init__(self, center=(0.3, 0.4), tau=0.6, label="cusp"):
        self.center = np.asarray(center, dtype=float)
        self.tau = float(tau)
        self.d = len(self.center)
        self.label = label

    def eval(self, pts, gamma):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - self.center
        r = np.linalg.norm(rel, axis=1)
        order = sum(gamma)
        if order == 0:
            return r**self.tau
        if order == 1:
            ax = gamma.index(1)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = self.tau * r ** (self.tau - 2.0) * rel[:, ax]
            return np.where(r > 0, out, 0.0)
        raise ValueError("cusp field provides derivatives up to order 1")


class SlitAngleField(FieldFunction):
    """Angle around a slit tip, with the branch cut running down the slit.

    Smooth on the slit square, jump of 2*pi across the slit itself.
    """

    k_max = 1

    def __init__(self, tip=(0.5, 0.5), label="slit_jump"):
        self.tip = np.asarray(tip, dtype=float)
        self.d = 2
        self.label = label

    def eval(self, pts, gamma):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        X = pts[:, 1] - self.tip[1]  # cut along the downward ray
        Y = pts[:, 0] - self.tip[0]
        order = sum(gamma)
        if order == 0:
            return np.arctan2(Y, X)
        r2 = X * X + Y * Y
        if gamma == (1, 0):
            return X / r2
        if gamma == (0, 1):
            return -Y / r2
        raise ValueError("slit field provides derivatives up to order 1")


class SlitStepField(FieldFunction):
    """Odd step across the slit {x=tip_x, y<tip_y}, smooth elsewhere.

    f = sign(x - tip_x) * S((tip_y - y)/width) with a cubic smoothstep S,
    so the jump magnitude 2*S closes up smoothly at the slit tip and the
    gradient stays bounded off the slit.
    """

    k_max = 1

    def __init__(self, tip=(0.5, 0.5), width=0.5, label="slit_step"):
        self.tip = np.asarray(tip, dtype=float)
        self.width = float(width)
        self.d = 2
        self.label = label

    def _step(self, t, der):
        t = np.clip(t, 0.0, 1.0)
        if der == 0:
            return 3.0 * t**2 - 2.0 * t**3
        inside = (t > 0.0) & (t < 1.0)
        return np.where(inside, 6.0 * t - 6.0 * t**2, 0.0)

    def eval(self, pts, gamma):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        side = np.sign(pts[:, 0] - self.tip[0])
        t = (self.tip[1] - pts[:, 1]) / self.width
        if gamma == (0, 0):
            return side * self._step(t, 0)
        if gamma == (1, 0):
            return np.zeros(pts.shape[0])  # flat in x off the slit
        if gamma == (0, 1):
            return side * self._step(t, 1) * (-1.0 / self.width)
        raise ValueError("slit step field provides derivatives up to order 1")


class ConstField(PolyField):
    def __init__(self, c: float, d: int = 2, label=None):
        super().__init__({(0,) * d: c}, label=label or f"const{c}")


def make_field(spec: dict) -> FieldFunction:
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind == "const":
        return ConstField(float(spec.pop("value", 1.0)), int(spec.pop("d", 2)))
    if kind == "poly":
        coeffs = {tuple(int(i) for i in k.split(",")): float(v) for k, v in spec.pop("coeffs").items()}
        return PolyField(coeffs, center=spec.pop("center", None), label=spec.pop("label", "poly"))
    if kind == "sinprod":
        return SinProdField(
            freqs=spec.pop("freqs", (1.3, 0.9)),
            phases=spec.pop("phases", (0.4, 1.1)),
            amp=spec.pop("amp", 1.0),
        )
    if kind == "cusp":
        return CuspField(center=spec.pop("center", (0.3, 0.4)), tau=float(spec.pop("tau", 0.6)))
    if kind == "slit_jump":
        return SlitAngleField(tip=spec.pop("tip", (0.5, 0.5)))
    raise ValueError(f"unknown field kind: {kind!r}")
