"""Union bound: failure probabilities add up along a sequence of samples."""

from __future__ import annotations

from gradedhoare.corpus import load_cases
from gradedhoare.harness import refute

cases = load_cases()

# Each fair coin misses "= 1" with probability 1/2; the bound for two is 1.
honest = cases["ub_two_coins"]
print("checked:", honest.check(strict=True).grade)
print(honest.soundness().render())

# A table that claims 1/8 per coin is accepted by a lenient check, since the
# logic trusts its axioms. Validating the table exposes the bad entry.
loose = cases["ub_two_coins_loose"]
print("lenient:", loose.accepted(strict=False), "strict:", loose.accepted(strict=True))
for entry in loose.validate().failing():
    print(entry.record())

# A judgment graded 1/8 is refuted outright: the real failure mass is 1/4.
tight = cases["ub_two_coins_tight"]
print("tight:", refute(tight.judgment, "union-bound", model=tight.model).record())
