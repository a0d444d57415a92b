import math

import numpy as np
import pytest
from equilibria import examples
from equilibria.solver import (
    ArcError,
    ArcSet,
    ConfigError,
    DensityProfile,
    EquilibriumError,
    ProblemConfig,
    ResidualReport,
    SolverOptions,
    Tolerances,
    VerificationError,
    full_report,
    verify_solution,
)
from equilibria.solver._arcs import TWO_PI
from equilibria.solver._oracle import extrapolated_energy
from equilibria.solver._verify import assemble_solution, residual_report


@pytest.fixture(scope="module")
def single_arc():
    solution = full_report(examples.single_zero(2.0))
    yield solution
    solution.close()


def temp_table_count(con):
    return con.sql("SELECT count(*) FROM duckdb_tables() WHERE temporary").fetchone()[0]


def semicircle_profile(support):
    (alpha, beta), = support.pairs()
    m = (alpha + beta) / 2.0
    h = (beta - alpha) / 2.0

    def density(theta):
        inside = np.clip(h**2 - (theta - m) ** 2, 0.0, None)
        return 2.0 / (math.pi * h**2) * np.sqrt(inside)

    return DensityProfile.from_function(support, density, 32)


def test_uniform_weight_has_unit_capacity(con):
    solution = full_report(examples.uniform_weight(), con=con)
    assert solution.k == 0
    assert solution.support.is_full
    assert solution.robin_constant == pytest.approx(0.0, abs=1e-10)
    assert solution.energy == pytest.approx(0.0, abs=1e-10)
    assert solution.capacity == pytest.approx(1.0, abs=1e-10)
    assert solution.passed
    assert solution.support_report is None


def test_full_circle_solution(con):
    solution = full_report(examples.single_zero(3.0), con=con)
    assert solution.k == 0
    assert solution.passed, solution.report.failures()
    assert solution.capacity == pytest.approx(math.exp(-solution.energy))
    assert solution.robin_constant == pytest.approx(
        solution.energy - solution.q_integral
    )
    oracle = extrapolated_energy(examples.single_zero(3.0), 1024, tol=1e-7)
    assert solution.energy == pytest.approx(oracle.extrapolated, abs=1e-3)


def test_single_arc_solution(single_arc):
    assert single_arc.k == 1
    assert single_arc.passed, single_arc.report.failures()
    assert single_arc.support_report is not None
    assert single_arc.support_report.provenance == "oracle"
    (alpha, beta), = single_arc.support.pairs()
    assert alpha + beta == pytest.approx(TWO_PI, abs=1e-6)
    assert single_arc.capacity == pytest.approx(math.exp(-single_arc.energy))


def test_potential_is_constant_on_the_support(single_arc):
    (alpha, beta), = single_arc.support.pairs()
    inside = np.linspace(alpha + 0.05, beta - 0.05, 17)
    totals = single_arc.total_potential(inside)
    np.testing.assert_allclose(totals, single_arc.robin_constant, atol=1e-4)
    outside = np.linspace(beta + 0.05, alpha + TWO_PI - 0.05, 17)
    assert np.all(single_arc.total_potential(outside) >= single_arc.robin_constant)


def test_stored_solution_verifies(single_arc, con):
    document = single_arc.to_json()
    assert document["pass"] is True
    assert document["solution"]["k"] == 1
    checked = verify_solution(document, con=con)
    assert checked.passed, checked.report.failures()
    assert checked.robin_constant == pytest.approx(
        single_arc.robin_constant, abs=1e-6
    )


def test_widened_support_fails_verification(single_arc, con):
    document = single_arc.to_json()
    (alpha, beta), = single_arc.support.pairs()
    document["solution"]["arcs"] = [[alpha - 1e-2, beta + 1e-2]]
    checked = verify_solution(document, con=con)
    assert not checked.passed
    assert checked.report.failures()


def test_malformed_document_is_a_config_error(con):
    with pytest.raises(ConfigError):
        verify_solution({"solution": {}}, con=con)


def test_spread_potential_is_refused():
    field = examples.single_zero(2.0)
    support = ArcSet([[2.0, 4.0]])
    profile = semicircle_profile(support)
    with pytest.raises(VerificationError) as excinfo:
        assemble_solution(field, support, profile)
    assert excinfo.value.variation > 1e-3
    loose = assemble_solution(field, support, profile, strict=False)
    assert loose.variation == pytest.approx(excinfo.value.variation)


def test_profile_on_another_support():
    support = ArcSet([[2.0, 4.0]])
    with pytest.raises(ArcError):
        assemble_solution(
            examples.single_zero(2.0), ArcSet([[1.0, 2.0]]), semicircle_profile(support)
        )


def test_report_counts_nan_as_failure():
    report = ResidualReport(
        {"mass_gap": math.nan, "imag_part_sup": 0.0},
        {"mass_gap": 1e-8, "imag_part_sup": 1e-8},
    )
    assert report.failures() == ["mass_gap"]
    assert not report.passed
    assert report.to_dict()["failed"] == ["mass_gap"]


def test_tight_tolerances_fail(con):
    solution = full_report(
        examples.single_zero(3.0),
        tolerances=Tolerances(frostman_equality=1e-30),
        con=con,
    )
    assert not solution.passed
    assert solution.report.failures() == ["frostman_equality_sup"]


def test_solution_relations(con):
    solution = full_report(examples.uniform_weight(), con=con)
    summary = dict(solution.summary().fetchall())
    assert summary["capacity"] == pytest.approx(1.0, abs=1e-10)
    assert summary["arcs"] == 0.0
    residuals = solution.residuals().fetchall()
    assert len(residuals) == 6
    assert all(row[3] for row in residuals)
    assert solution.density().columns == ["theta", "f"]
    potential = solution.potential(256)
    assert potential.columns == ["theta", "total"]
    assert len(potential.fetchall()) == 256


def test_residuals_need_a_report(con):
    field = examples.uniform_weight()
    unchecked = full_report(field, con=con)
    unchecked.report = None
    with pytest.raises(EquilibriumError, match="residual report"):
        unchecked.residuals()
    residual_report(unchecked)
    assert unchecked.passed


def test_materialized_relations_are_dropped_on_close(con):
    solution = full_report(examples.uniform_weight(), con=con, materialize="all")
    solution.summary()
    solution.density()
    assert temp_table_count(con) == 2
    solution.close()
    assert temp_table_count(con) == 0


def test_materialize_must_be_known():
    with pytest.raises(ConfigError):
        full_report(examples.uniform_weight(), materialize="some")


def test_stage_is_attached_to_field_errors():
    field = examples.single_zero(1.0)
    with pytest.raises(EquilibriumError) as excinfo:
        full_report(field)
    assert excinfo.value.stage == "field"


@pytest.mark.parametrize(
    "options",
    [
        {"grid": 100},
        {"grid": 32},
        {"oracle_tol": -1.0},
        {"max_iter": 0},
        {"k": 0},
        {"use_oracle": "yes"},
        {"arcs": ArcSet.full_circle()},
    ],
)
def test_invalid_solver_options(options):
    with pytest.raises(ConfigError):
        SolverOptions(**options)


def test_tolerances_from_json():
    assert Tolerances.from_json({"mass": 1e-6}).mass == 1e-6
    with pytest.raises(ConfigError, match="unknown keys"):
        Tolerances.from_json({"bogus": 1.0})
    with pytest.raises(ConfigError):
        Tolerances(mass=0.0)


def test_solver_options_from_json():
    options = SolverOptions.from_json({"arcs": "2.0,4.0", "oracle_max_iter": 1000.0})
    assert options.arcs is not None and options.arcs.k == 1
    assert options.oracle_max_iter == 1000
    with pytest.raises(ConfigError):
        SolverOptions.from_json({"oracle_max_iter": 1000.5})
    with pytest.raises(ConfigError, match="arcs"):
        SolverOptions.from_json({"arcs": "2.0"})


def test_problem_config(tmp_path):
    config = ProblemConfig.from_json(examples.example_config("single_arc"))
    assert config.field.kind == "polynomial"
    assert config.formats == ("json", "csv")
    changed = config.with_overrides(grid=512, tol=1e-9, arcs="2.0,4.0")
    assert changed.solver.grid == 512
    assert changed.solver.endpoint_tol == 1e-9
    assert changed.solver.arcs is not None and changed.solver.arcs.k == 1
    assert config.with_overrides() is config
    rebuilt = ProblemConfig.from_json(changed.to_json())
    assert rebuilt.solver == changed.solver
    with pytest.raises(ConfigError):
        ProblemConfig.load(tmp_path / "missing.json")


@pytest.mark.parametrize(
    "document",
    [
        [],
        {"solver": {}},
        {"field": {"type": "polynomial"}},
        {"field": {"type": "trig", "coeffs": []}, "output": {"formats": ["xml"]}},
        {"field": {"type": "trig", "coeffs": []}, "solver": {"grid": "big"}},
        {"field": {"type": "trig", "coeffs": []}, "extra": 1},
    ],
)
def test_malformed_problem_config(document):
    with pytest.raises(ConfigError):
        ProblemConfig.from_json(document)
