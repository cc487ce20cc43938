"""Shared test configuration.

Prints one pass/fail line per acceptance criterion after the run, keyed
by the test names in test_acceptance.py.
"""

ACCEPTANCE_LABELS = [
    ("test_cm_moments_on_random_models",
     "shift density moments on 100 random models, 3 sigma"),
    ("test_mecke_identity_three_functions",
     "jump-measure identity for three test functions, 3 pooled sigma"),
    ("test_mineka_kernel_validity",
     "Mineka kernel: marginal TV < 0.01, symmetric defect, half-overlap rate"),
    ("test_coupling_endpoint_marginals",
     "coupled chains reproduce direct endpoint laws, TV < 0.02"),
    ("test_lemma31_identity_on_preset",
     "late-jump shifted-chain identity, 3 pooled sigma, exact at y = 0"),
    ("test_polynomial_rate_shape",
     "gaussian52-small decay: monotone, curve-dominated, exponent <= -0.15"),
    ("test_exponential_rate_shape",
     "z3-exponential decay: rate <= -0.8 lam0 lam/(lam0+lam), curve dominates"),
    ("test_decomposition_and_gradient",
     "zero-jump mass, weighted one-jump estimator, gradient bound shape"),
    ("test_cli_determinism",
     "verify all and tv-decay byte-identical across runs and thread counts"),
]


def pytest_terminal_summary(terminalreporter):
    stats = terminalreporter.stats
    outcome = {}
    for status in ("passed", "failed", "error"):
        for rep in stats.get(status, []):
            loc = getattr(rep, "location", None)
            if loc is None:
                continue
            base = loc[2].split("[")[0]
            if status == "passed":
                outcome.setdefault(base, True)
            else:
                outcome[base] = False
    if not any(name in outcome for name, _ in ACCEPTANCE_LABELS):
        return
    terminalreporter.section("acceptance criteria")
    for name, label in ACCEPTANCE_LABELS:
        if name not in outcome:
            terminalreporter.write_line(f"[SKIP] {label}")
        elif outcome[name]:
            terminalreporter.write_line(f"[PASS] {label}")
        else:
            terminalreporter.write_line(f"[FAIL] {label}")
