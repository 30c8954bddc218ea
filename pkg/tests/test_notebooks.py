import runpy
from pathlib import Path

import pytest

SCRIPTS = sorted((Path(__file__).resolve().parent.parent / "notebooks").glob("*.py"))


@pytest.mark.parametrize("path", SCRIPTS, ids=[p.stem for p in SCRIPTS])
def test_script_runs(path, capsys):
    """Each narrative script executes top to bottom."""
    runpy.run_path(str(path), run_name="__main__")
    assert capsys.readouterr().out
