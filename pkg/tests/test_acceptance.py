import os
import subprocess
import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent


@pytest.mark.acceptance
@pytest.mark.skipif(not os.getenv("INVARIANCE_MNIST_DIR"), reason="INVARIANCE_MNIST_DIR is not set")
def test_full_acceptance_flow(tmp_path):
    proc = subprocess.run(
        [sys.executable, str(ROOT / "acceptance_test.py"), "--work-dir", str(tmp_path)],
        cwd=ROOT,
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stdout[-4000:] + proc.stderr[-4000:]
    assert "Acceptance passed." in proc.stdout
