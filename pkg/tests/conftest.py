import io
from contextlib import redirect_stderr, redirect_stdout

import pytest

from quadpeg.cli import main as cli_main


def run_cli(argv):
    """Invoke the CLI in-process; returns (exit_code, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli_main(list(argv))
    return code, out.getvalue(), err.getvalue()


@pytest.fixture(scope="session")
def cli():
    return run_cli
