"""Acceptance suite: one test per shipping criterion, at the stated tolerance.

Each test delegates to latticelab.acceptance so the CLI `validate` command
exercises exactly the same checks; every test prints its criterion line.
The driven-lattice runs are shared through the session-scoped `lab` fixture
(criteria 3, 4 and 5 reuse the gamma = 1.8 and gamma = 1.1 spectra).
"""

import pytest

from latticelab import acceptance


def _check(result):
    print()
    print(result.line())
    assert result.passed, result.line()


@pytest.mark.slow
def test_criterion_1_linear_oracle(lab):
    _check(acceptance.criterion_1_linear_oracle(lab))


@pytest.mark.slow
def test_criterion_2_subcritical_spacing(lab):
    _check(acceptance.criterion_2_subcritical_spacing(lab))


@pytest.mark.slow
def test_criterion_3_gap_labelling(lab):
    _check(acceptance.criterion_3_gap_labelling(lab))


@pytest.mark.slow
def test_criterion_4_gap_widths(lab):
    _check(acceptance.criterion_4_gap_widths(lab))


@pytest.mark.slow
def test_criterion_5_density_self_consistency(lab):
    _check(acceptance.criterion_5_density_selfconsistency(lab))


@pytest.mark.slow
def test_criterion_6_one_phase_wave(lab):
    _check(acceptance.criterion_6_one_phase(lab))


def test_criterion_7_ggap_machinery(lab):
    _check(acceptance.criterion_7_ggap(lab))


@pytest.mark.slow
def test_criterion_8_eigen_dynamics(lab):
    _check(acceptance.criterion_8_eigen_dynamics(lab))


@pytest.mark.slow
def test_criterion_9_property_suites(lab):
    _check(acceptance.criterion_9_property_suites(lab))
