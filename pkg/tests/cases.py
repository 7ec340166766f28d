"""Model sets shared by the condition, uniqueness and implication tests."""

from rdcomp.model import classical_lv, nonlinear_demo

# (b, c, e, f) fixed per entry, rates first
LV_UNIQUE = [
    (5.0, 1.0, 0.1, 5.0, 0.1, 1.0),
    (5.0, 1.0, 0.0, 5.0, 0.0, 1.0),
    (3.0, 1.0, 0.3, 4.0, 0.2, 1.0),
    (4.0, 1.0, 0.2, 3.0, 0.1, 1.0),
    (2.5, 1.0, 0.1, 2.5, 0.1, 1.0),
]
DEMO_UNIQUE = [dict(a=3.0, d=4.0), dict(a=3.0, d=4.0, c=0.2, e=0.3)]

# rates and couplings spanning existence, nonexistence, exclusion and bistability
LV_EXTRA = [
    (5.0, 1.0, 0.5, 5.0, 0.5, 1.0),
    (0.5, 1.0, 0.1, 5.0, 0.1, 1.0),
    (5.0, 1.0, 0.1, 0.5, 0.1, 1.0),
    (0.5, 1.0, 0.1, 0.5, 0.1, 1.0),
    (3.0, 1.0, 1.5, 3.0, 1.5, 1.0),
    (1.2, 1.0, 0.1, 5.0, 0.1, 1.0),
    (2.0, 2.0, 0.4, 6.0, 0.3, 0.5),
]
DEMO_EXTRA = [dict(a=5.0, d=5.0), dict(a=2.0, d=6.0, c=0.5, e=0.05, eps=0.2)]


def acceptance_models():
    """Every model the acceptance suite touches, with a short label."""
    out = [(f"lv{p}", classical_lv(*p)) for p in LV_UNIQUE + LV_EXTRA]
    out += [(f"demo{sorted(k.items())}", nonlinear_demo(**k)) for k in DEMO_UNIQUE + DEMO_EXTRA]
    return out
