"""Shared pytest wiring: the acceptance-criteria scoreboard.

Every test in ``test_acceptance.py`` is named ``test_c<N>_...`` after the
criterion it checks.  This hook collects their outcomes and prints one
PASS/FAIL line per criterion at the end of the session, so the acceptance
status is readable at a glance without grepping the full test list.
"""

import re

CRITERIA = {
    1: "power flow matches an independent relaxation oracle on 200 random "
       "networks (<=1e-6 pu, <10 s)",
    2: "reward closed form: exp(-1/2) one sigma out, exact attacker "
       "inversion, flat deep tails",
    3: "coin pot conserved exactly every step; 1000 kW offline all episode "
       "pays exactly 100 coins; 20/10 bounties once",
    4: "losing a substation transformer islands all its consumers the same "
       "step; the cascade is idempotent",
    5: "repeated runs and both transports give identical canonical records; "
       "a 10-round, 200-step duel finishes in <60 s",
    6: "a 2x3 sweep with 5 seeds expands to exactly 30 runs with stable ids",
    7: "learning attacker out-earns a random attacker (one-sided Wilcoxon "
       "p<0.05 over 20 seeds); learning defender's reward improves",
    8: "attacker and defender on different strategy kinds complete a full "
       "tournament over the socket transport",
    9: "tabular learning at rate 1.0 reproduces value iteration within 1e-6",
}

_PATTERN = re.compile(r"test_c(\d+)_")
_outcomes: dict[int, list] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    interesting = report.when == "call" or (
        report.when == "setup" and report.outcome != "passed"
    )
    if not interesting:
        return
    match = _PATTERN.search(report.nodeid)
    if match:
        _outcomes.setdefault(int(match.group(1)), []).append(report)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_outcomes):
        reports = _outcomes[number]
        if any(r.failed for r in reports):
            verdict, markup = "FAIL", {"red": True, "bold": True}
        elif all(r.skipped for r in reports):
            verdict, markup = "SKIP", {"yellow": True}
        else:
            verdict, markup = "PASS", {"green": True}
        terminalreporter.write(f"{verdict} ", **markup)
        terminalreporter.write_line(
            f"criterion {number}: {CRITERIA.get(number, 'unnamed')}"
        )
