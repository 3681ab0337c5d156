# Subjective Logic opinion algebra.
#
# Copyright (C) 2024  The slcim authors
#
# This program is free software; you can redistribute it and/or modify
# it under the terms of the GNU General Public License as published by
# the Free Software Foundation; either version 2 of the License, or
# (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program.  If not, see <http://www.gnu.org/licenses/>.
#

__all__ = ["Opinion", "Evidence", "TrustModel", "OpinionError", "DegenerateFusionError",
           "opinion_from_evidence", "project", "dissonance", "trust_coefficient",
           "discount", "fuse", "vacuity_maximize", "apply_uom_refresh"]

import math
from collections import namedtuple

# simplex tolerance for validation
TOLERANCE = 1e-9
# fused opinions drifting further than this are renormalized
_DRIFT = 1e-12


class OpinionError(ValueError):
    """Invalid opinion, evidence or trust model parameters."""
    pass


class DegenerateFusionError(OpinionError):
    """Consensus of two dogmatic opinions under full trust is undefined."""
    pass


class Opinion(namedtuple("Opinion", ["b", "d", "u", "a"])):
    """Binomial opinion about the true information.

    b is the belief in the true information, d the belief in the false one,
    u the vacuity and a the base rate (prior belief favoring true information).
    """
    __slots__ = ()

    @classmethod
    def create(cls, b, d, u, a):
        """Build a validated opinion.

        :raises OpinionError: when a component is out of [0, 1] or b + d + u != 1
        """
        op = cls(float(b), float(d), float(u), float(a))
        op.validate()
        return op

    @classmethod
    def vacuous(cls, a=0.5):
        return cls(0.0, 0.0, 1.0, float(a))

    def validate(self):
        for name, value in zip(self._fields, self):
            if not (-TOLERANCE <= value <= 1.0 + TOLERANCE) or math.isnan(value):
                raise OpinionError("Opinion component %s=%r is outside [0, 1]" % (name, value))
        total = self.b + self.d + self.u
        if abs(total - 1.0) > TOLERANCE:
            raise OpinionError("Opinion masses sum to %r instead of 1" % total)


class Evidence(namedtuple("Evidence", ["r", "s", "W"])):
    """Supporting (r) and refuting (s) evidence counts with the prior weight W."""
    __slots__ = ()

    def validate(self):
        if self.r < 0 or self.s < 0:
            raise OpinionError("Evidence counts must be nonnegative, got r=%r s=%r"
                               % (self.r, self.s))
        if not self.W > 0:
            raise OpinionError("Non-informative prior weight must be positive, got %r" % self.W)


# evidence used to initialize the three user types
LEGITIMATE_EVIDENCE = Evidence(1, 1, 101)
TIP_EVIDENCE = Evidence(100, 1, 2)
FIP_EVIDENCE = Evidence(1, 100, 2)


class TrustModel(object):
    """Opinion model deciding how much a receiver trusts a sender.

    UOM discounts by certainty and re-opens dissonant dogmatic opinions by
    vacuity maximization, HOM discounts by belief similarity and NOM does
    not discount at all.
    """
    UOM = "uom"
    HOM = "hom"
    NOM = "nom"
    VARIANTS = (UOM, HOM, NOM)

    def __init__(self, variant=UOM, xi=0.01, t_d=0.6, t_u=0.01):
        """
        :param variant: one of TrustModel.VARIANTS
        :type variant: str

        :param xi: vacuity threshold below which UOM considers vacuity maximization
        :type xi: float

        :param t_d: dissonance threshold above which UOM maximizes vacuity
        :type t_d: float

        :param t_u: vacuity at or below which an opinion is frozen
        :type t_u: float
        """
        variant = str(variant).lower()
        if variant not in self.VARIANTS:
            raise OpinionError("Unknown opinion model '%s', expected one of %s"
                               % (variant, ", ".join(self.VARIANTS)))
        for name, value in (("xi", xi), ("t_d", t_d), ("t_u", t_u)):
            if not 0.0 <= value <= 1.0:
                raise OpinionError("%s must lie in [0, 1], got %r" % (name, value))

        self.variant = variant
        self.xi = float(xi)
        self.t_d = float(t_d)
        self.t_u = float(t_u)

    def __eq__(self, other):
        return (isinstance(other, TrustModel) and
                (self.variant, self.xi, self.t_d, self.t_u) ==
                (other.variant, other.xi, other.t_d, other.t_u))

    def __hash__(self):
        return hash((self.variant, self.xi, self.t_d, self.t_u))

    def __repr__(self):
        return "TrustModel(%r, xi=%r, t_d=%r, t_u=%r)" % (self.variant, self.xi, self.t_d, self.t_u)

    def blocks_freeze(self, op):
        """Under UOM a dissonant dogmatic opinion is re-opened instead of frozen."""
        return self.variant == self.UOM and dissonance(op) > self.t_d

    def should_freeze(self, op):
        return op.u <= self.t_u and not self.blocks_freeze(op)


def opinion_from_evidence(ev, a):
    """Map evidence counts to an opinion with base rate `a`.

    :param ev: evidence counts
    :type ev: Evidence or (r, s, W) tuple

    :param a: base rate
    :type a: float

    :rtype: Opinion
    """
    ev = Evidence(*ev)
    ev.validate()
    if not 0.0 <= a <= 1.0:
        raise OpinionError("Base rate must lie in [0, 1], got %r" % a)

    total = float(ev.r + ev.s + ev.W)
    return Opinion(ev.r / total, ev.s / total, ev.W / total, float(a))


def project(op):
    """Return the projected (belief, disbelief) probabilities."""
    pb = op.b + op.a * op.u
    return pb, 1.0 - pb


def dissonance(op):
    """Uncertainty caused by conflicting belief and disbelief."""
    mass = op.b + op.d
    if mass <= 0.0:
        return 0.0
    balance = 1.0 - abs(op.b - op.d) / mass
    return mass * balance


def trust_coefficient(model, op_i, op_j):
    """Trust of receiver i in sender j under the given opinion model."""
    if model.variant == TrustModel.UOM:
        return (1.0 - op_i.u) * (1.0 - op_j.u)
    elif model.variant == TrustModel.HOM:
        norm = math.hypot(op_i.b, op_i.d) * math.hypot(op_j.b, op_j.d)
        if norm <= 0.0:
            return 0.0
        return min(1.0, max(0.0, (op_i.b * op_j.b + op_i.d * op_j.d) / norm))
    return 1.0


def discount(op_j, c):
    """Discount sender's opinion by the receiver's trust `c`."""
    return Opinion(c * op_j.b, c * op_j.d, 1.0 - c * (1.0 - op_j.u), op_j.a)


def fuse(op_i, op_j, c):
    """Consensus of the receiver's opinion with the discounted sender's opinion.

    :raises DegenerateFusionError: when both opinions are dogmatic and c == 1
    """
    # vacuity of the discounted sender opinion
    k = 1.0 - c * (1.0 - op_j.u)
    beta = 1.0 - c * (1.0 - op_i.u) * (1.0 - op_j.u)
    if abs(beta) < 1e-15:
        raise DegenerateFusionError("Cannot fuse two dogmatic opinions under full trust")

    b = (op_i.b * k + c * op_j.b * op_i.u) / beta
    d = (op_i.d * k + c * op_j.d * op_i.u) / beta
    u = op_i.u * k / beta

    denominator = beta - op_i.u * k
    if abs(denominator) < 1e-15:
        # only happens when both opinions are vacuous
        a = op_i.a
    else:
        a = ((op_i.a - (op_i.a + op_j.a) * op_i.u) * k + op_j.a * op_i.u) / denominator
        a = min(1.0, max(0.0, a))

    total = b + d + u
    if abs(total - 1.0) > _DRIFT:
        b, d, u = b / total, d / total, u / total
    return Opinion(b, d, u, a)


def vacuity_maximize(op):
    """Re-express `op` with maximal vacuity and unchanged projected probabilities."""
    pb, pd = project(op)
    if op.a <= 0.0:
        u = pd
    elif op.a >= 1.0:
        u = pb
    else:
        u = min(pb / op.a, pd / (1.0 - op.a))
    u = min(1.0, u)
    b = max(0.0, pb - op.a * u)
    d = max(0.0, pd - (1.0 - op.a) * u)
    return Opinion(b, d, u, op.a)


def apply_uom_refresh(op, model):
    """Maximize vacuity of a low-vacuity, highly dissonant opinion under UOM."""
    if model.variant != TrustModel.UOM:
        raise OpinionError("Vacuity refresh is only defined for the UOM opinion model")

    if op.u < model.xi and dissonance(op) > model.t_d:
        return vacuity_maximize(op)
    return op
