"""Security levels: a computation's level is the max of what it reads."""

from __future__ import annotations

from gradedhoare.corpus import load_cases
from gradedhoare.grading import Grade, MaxNat
from gradedhoare.harness import clearance_levels, refute

cases = load_cases()

print("3 * 7 =", MaxNat().mul(Grade("max", 3), Grade("max", 7)))

# Two secure reads at levels 3 and 7 need clearance 7.
two = cases["sl_two"]
print("checked:", two.check(strict=True).grade)
print("clearances tried:", list(clearance_levels(two.model, two.judgment.grade)))
print(two.soundness().render())

# At clearance 6 the level-7 read returns the least cell value instead.
low = cases["sl_two_low"]
print("low:", refute(low.judgment, "seclevel", model=low.model).record())
