"""Program-counter security: branches record which way control flowed."""

from __future__ import annotations

from gradedhoare.corpus import load_cases
from gradedhoare.ghl import elaborate_pc
from gradedhoare.harness import refute
from gradedhoare.syntax import parse_program, pretty_program

cases = load_cases()

# Elaboration marks each branch with a cfTrue or cfFalse command.
secure = cases["pc_secure_T"]
m = secure.model
plain = parse_program("if x {x := 1; y := 1} else {x := 0; y := 0}", m.signature, m.var_order)
print("elaborated:", pretty_program(elaborate_pc(plain)))

# With the guard fixed to true on both sides, the trace is exactly "T".
print("checked:", secure.check(strict=True).grade)
print(secure.soundness().render())

# Branching on a secret gives two runs that agree on public inputs but
# leave different traces.
insecure = cases["pc_insecure_T"]
cx = refute(insecure.judgment, "pc-security", model=insecure.model, pm=insecure.pm)
print("insecure:", cx.record())
