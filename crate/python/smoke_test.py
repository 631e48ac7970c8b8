from fractions import Fraction

import xytr

lam = xytr.Curve("lambert")
assert lam.omega(1, 1) == "z^2*(z-4)/(24*(z-1)^5)"
assert lam.xy_verify(0, 3)
assert lam.ramification_points == [Fraction(1)]

bad = xytr.Curve("lambert-bad")
assert not bad.xy_verify(1, 1)
assert bad.omega_via_xy(1, 1) == "(-6*z^2+4*z-1)/(24*z*(z-1)^5)"

airy = xytr.Curve(x="z^2/2", y="z", involution="-z")
assert airy.omega(1, 1) == "-1/(8*z^5)"

psi = xytr.psi_table(3)
assert psi[(1, (1,))] == Fraction(1, 24)
assert psi[(2, (4,))] == Fraction(1, 1152)

assert xytr.hurwitz(0, [2]) == Fraction(1, 2)
assert xytr.hurwitz(1, [2, 1]) == xytr.brute_force_hurwitz(1, [2, 1])
assert xytr.hodge(1, [1]) == xytr.hodge_table(1, 1, 1)[(1, (1,))]

try:
    lam.omega(0, 0)
except xytr.XytrError:
    pass
else:
    raise AssertionError("expected XytrError")

print("smoke test ok")
