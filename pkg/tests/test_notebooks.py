import runpy
from pathlib import Path

NOTEBOOKS = Path(__file__).parent.parent / "notebooks"


def test_conflict_notebook_runs(capsys):
    runpy.run_path(str(NOTEBOOKS / "01_zadeh_conflict.py"), run_name="__main__")
    assert "conflict mass C = 0.999900" in capsys.readouterr().out
