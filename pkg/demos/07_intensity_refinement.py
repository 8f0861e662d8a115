"""
Route to continuous compensators: discretized constant intensity
================================================================
A constant-rate arrival stream is approximated by per-step jump sizes
1 - exp(-lam * dt).  Refining the grid sends the sizes to zero and the
solution values settle down, which is the package's (monitored, not
proven) route to genuinely continuous compensators.
"""

from treebsde import BsdeProblem, Generator, backward_oracle, scenarios

driver = Generator(lambda slot, y, zeta: 0.2 * y, lip_y=0.2, lip_z=0.0)

print("K      dA per step   Y0             gap to previous")
prev = None
for K in (2, 4, 8, 16):
    model = scenarios.discretized_intensity(lam=1.0, K=K, m=1)
    problem = BsdeProblem(model=model, beta=1.0,
                          xi=scenarios.xi_jump_count(0.5), f=driver)
    y0 = float(backward_oracle(problem).Y[0])
    da = float(problem.tree().slot_dA[0])
    gap = "" if prev is None else f"{abs(y0 - prev):.6f}"
    print(f"{K:<6d} {da:<13.6f} {y0:<14.10f} {gap}")
    prev = y0
