import math

from .instance import MilpInstance


def counterexample_instance(upper=10.0):
    """``min x  s.t.  x ≥ 0.6,  x ∈ ℤ ∩ [0, upper]``.

    The root LP sits at 0.6 and the only branching is ``x ≤ 0 ∨ x ≥ 1``, so the
    upper bound seen by each child depends on which child is processed first.
    """
    return MilpInstance(
        name='counterexample',
        obj=[1.0],
        rows=[[-1.0]],
        rhs=[-0.6],
        lower=[0.0],
        upper=[upper if math.isfinite(upper) else math.inf],
        int_set=(0,),
    )
