import sys
from pathlib import Path

# allow `from oracles import ...` in test modules
sys.path.insert(0, str(Path(__file__).parent))


def pytest_runtest_logreport(report):
    # one visible verdict line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n{name}: {'PASS' if report.passed else 'FAIL'}", flush=True)
