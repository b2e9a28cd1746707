import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

_CRITERIA = {
    "test_golden_example_1_development_prior":
        "Golden Example 1: Beta(24, 8) prior, mean 0.75, variance 0.0057, < 1 ms",
    "test_golden_example_2_scenario_barrier_indicator":
        "Golden Example 2: bound 0.8254, failure threshold y = 2 over n = 10",
    "test_golden_example_3_operational_posterior":
        "Golden Example 3: posterior Beta(30, 12), mean 0.7143, variance 0.0047",
    "test_golden_example_4_prior_and_revised_consequence_risk":
        "Golden Example 4: Pr 1.5998e-5/2.386e-5, RRL 4D (Low) unchanged (solver oracle)",
    "test_golden_example_5_risk_ratios_and_relaxed_recovery_barrier":
        "Golden Example 5: RR 1.49; after b5=0.96: 2.4e-4, 4C (Medium), RR 10.06/14.9",
    "test_property_suite_conjugacy_propagation_replay_ols_parser":
        "Property suite: conjugacy, propagation oracle+monotonicity, replay, OLS, parser",
    "test_consistency_round_trip_over_random_models":
        "Consistency round-trip: G;F = I and F;G <= I over 200 random models, < 60 s",
    "test_end_to_end_cli_reproduces_worked_example":
        "End-to-end CLI: validate/ingest/revise/report/consistency with golden values",
}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            name = report.nodeid.split("::")[-1]
            if name in _CRITERIA:
                results.append((list(_CRITERIA).index(name), _CRITERIA[name], outcome == "passed"))
    if results:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, label, passed in sorted(results):
            terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}")
