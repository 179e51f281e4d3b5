"""Named geometries: P1, local curves X_k, G_k, Hirzebruch surfaces and their canonical bundles."""

import logging
import re
from fractions import Fraction

from .errors import ConfigError
from .ifunction import GeometrySpec, Twist, toric_relations
from .types import Box

logger = logging.getLogger(__name__)

# Torus actions on the fibers of O(k) + O(-2-k), as multiples of lambda.
# The antidiagonal weights put -lambda on O(k), the orientation the golden
# antidiagonal mirror maps are written in.
ACTIONS: dict[str, tuple[Fraction, Fraction]] = {
    "diagonal": (Fraction(1), Fraction(1)),
    "antidiagonal": (Fraction(-1), Fraction(1)),
    "x0": (Fraction(0), Fraction(1)),
}

F3_FRAME = ((0, 0), (1, 0), (0, 1), (0, 2))  # 1, p1, p2, p2^2
F3_ETA = ((0, 0, 0, 3), (0, 0, 1, 0), (0, 1, 3, 0), (3, 0, 0, 0))


def projective_line(box: Box = (5,)) -> GeometrySpec:
    """The projective line with H*(P1) = Q[p]/(p^2)."""
    weights = ((1, 1),)
    return GeometrySpec(
        name="P1",
        weights=weights,
        relations=toric_relations(weights, [(0, 1)]),
        box=box,
        expected_c1=(2,),
    )


def parse_action(action: str | tuple[Fraction, Fraction] | None) -> tuple[Fraction, Fraction]:
    """
    Read a fiber action as a pair of lambda multiples.

    Accepts "diagonal", "antidiagonal", "x0", "custom(a,b)" or a pair.

    Raises:
        ConfigError: If the action cannot be read.
    """
    if action is None:
        return ACTIONS["diagonal"]
    if isinstance(action, tuple):
        return Fraction(action[0]), Fraction(action[1])
    if action in ACTIONS:
        return ACTIONS[action]
    match = re.fullmatch(r"custom\(\s*([-0-9/]+)\s*,\s*([-0-9/]+)\s*\)", action)
    if match is None:
        msg = f"Unknown torus action: {action!r}"
        raise ConfigError(msg)
    return Fraction(match.group(1)), Fraction(match.group(2))


def local_curve(k: int, action: str | tuple[Fraction, Fraction] | None = None, box: Box = (5,)) -> GeometrySpec:
    """
    The total space of O(k) + O(-2-k) over P1 with a torus action on the fibers.

    Args:
        k: Degree of the first summand.
        action: Fiber weights (lambda1, lambda2) as lambda multiples.
        box: Truncation box.
    """
    lam1, lam2 = parse_action(action)
    base = projective_line(box)
    name = f"X{k}" if k >= 0 else f"Xm{-k}"
    return GeometrySpec(
        name=name,
        weights=base.weights,
        relations=base.relations,
        twists=(Twist((k,), lam1), Twist((-2 - k,), lam2)),
        box=box,
        expected_c1=(2,),
    )


def g_space(k: int, box: Box = (3, 3)) -> GeometrySpec:
    """
    The threefold G_k (k >= -1): a P2-bundle over P1 with c1 = -3k p1 + 3 p2.

    Raises:
        ValueError: If k < -1.
    """
    if k < -1:
        msg = f"G_k is defined for k >= -1, got {k}"
        raise ValueError(msg)
    if k == -1:
        weights = ((1, 1, -1, -1, 0), (0, 0, 1, 1, 1))
    else:
        weights = ((1, 1, -k, -2 - 2 * k, 0), (0, 0, 1, 1, 1))
    return GeometrySpec(
        name=f"G{k}" if k >= 0 else "Gm1",
        weights=weights,
        relations=toric_relations(weights, [(0, 1), (2, 3, 4)]),
        box=box,
        expected_c1=(-3 * k, 3),
    )


def hirzebruch(n: int, box: Box = (3, 3)) -> GeometrySpec:
    """The Hirzebruch surface F_n with relations p1^2 and (-n p1 + p2) p2."""
    weights = ((1, 1, -n, 0), (0, 0, 1, 1))
    return GeometrySpec(
        name=f"F{n}",
        weights=weights,
        relations=toric_relations(weights, [(0, 1), (2, 3)]),
        box=box,
        expected_c1=(2 - n, 2),
        frame=F3_FRAME if n == 3 else None,
        eta=F3_ETA if n == 3 else None,
    )


def canonical_bundle(n: int, box: Box = (3, 6)) -> GeometrySpec:
    """F_n carrying its canonical class as the twist applied to J."""
    base = hirzebruch(n, box)
    return GeometrySpec(
        name=f"KF{n}",
        weights=base.weights,
        relations=base.relations,
        box=box,
        expected_c1=base.expected_c1,
        frame=base.frame,
        eta=base.eta,
        canonical_twist=Twist(tuple(-c for c in base.c1), Fraction(0), "hbar"),
    )


_PRESET_PATTERN = re.compile(r"(?P<family>P1|X|Xm|G|Gm|F|KF)(?P<index>\d*)")


def get_preset(name: str, action: str | None = None, box: Box | None = None) -> GeometrySpec:
    """
    Look up a preset by name: P1, X<k>, Xm<k>, G<k>, Gm1, F<n>, KF<n>.

    Args:
        name: Preset name.
        action: Fiber action for the X family.
        box: Truncation box override.

    Returns:
        The geometry.

    Raises:
        ConfigError: If the name is unknown.
    """
    match = _PRESET_PATTERN.fullmatch(name)
    if match is None or (match["family"] != "P1" and not match["index"]):
        msg = f"Unknown preset: {name!r}"
        raise ConfigError(msg)
    family = match["family"]
    index = int(match["index"]) if match["index"] else 0
    if family == "P1":
        spec = projective_line()
    elif family in ("X", "Xm"):
        k = index if family == "X" else -index
        if k == 0 and action is None:
            action = "x0"
        spec = local_curve(k, action)
    elif family in ("G", "Gm"):
        spec = g_space(index if family == "G" else -index)
    elif family == "F":
        spec = hirzebruch(index)
    else:
        spec = canonical_bundle(index)
    if box is not None:
        spec = spec.with_box(box)
    logger.debug("Resolved preset %s to %s with box %s", name, spec.name, spec.box)
    return spec
