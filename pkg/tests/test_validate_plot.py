import pytest

from bornfront.golden import appendix_cells
from bornfront.plotting import plot_profiles, plot_reduction
from bornfront.profile import critical_reduction, front_profile, make_limit_profile
from bornfront.reaction import classify, fisher
from bornfront.reduction import ModelParams
from bornfront.validate import check_round_trip, run_validation


def test_golden_table_has_thirty_cells():
    cells = appendix_cells()
    assert len(cells) == 30
    assert all(c.in_table for c in cells)
    assert len(appendix_cells(include_extra=True)) == 35
    assert cells[0].tolerance == 0.01
    assert cells[9].tolerance == pytest.approx(0.02 * 22.901)


def test_round_trip_check():
    assert check_round_trip().passed


def test_validation_suite():
    rep = run_validation(jobs=2)
    names = [c.name for c in rep.checks]
    assert names == ["bound-sandwich", "monotone-in-a-and-b", "gradient-below-a/b",
                     "profile-residual", "zero-reaction-closed-form", "E-round-trip",
                     "balanced-speed-zero", "balanced-steady-profile"]
    assert rep.passed, rep.lines()


def test_png_output(tmp_path):
    calc = classify(fisher())
    p = ModelParams(1, 1)
    res, prof = front_profile(calc, p)
    f1 = plot_profiles(prof, str(tmp_path / "p.png"),
                       limit=make_limit_profile(calc, "heaviside"), window=(-5, 5))
    f2 = plot_reduction(critical_reduction(calc, p, res.c_star), str(tmp_path / "r.png"))
    for f in (f1, f2):
        with open(f, "rb") as fh:
            assert fh.read(4) == b"\x89PNG"
