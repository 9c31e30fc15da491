import numpy as np
import pytest

import charvar as cv


@pytest.fixture(scope="session")
def su2():
    return cv.GroupSpec("SU", 2)


@pytest.fixture(scope="session")
def su3():
    return cv.GroupSpec("SU", 3)


@pytest.fixture(scope="session")
def slc2():
    return cv.GroupSpec("SLC", 2)


@pytest.fixture(scope="session")
def closed_problem(su2):
    """SU(2), genus 2, no boundary, trivial target."""
    return cv.VarietyProblem(su2, cv.SurfacePresentation(2),
                             cv.ConjugacyClassSpec(su2))


@pytest.fixture(scope="session")
def solved_points(closed_problem):
    """Twenty independently solved irreducible points on the g=2 variety."""
    pts = []
    for seed in range(20):
        p = closed_problem.solve(np.random.default_rng(1000 + seed))
        pts.append(p.with_irreducible(cv.is_irreducible(p)))
    return pts


@pytest.fixture(scope="session")
def minus_problem(su2):
    """SU(2), genus 2, central target -I (the other Seifert component)."""
    return cv.VarietyProblem(su2, cv.SurfacePresentation(2),
                             cv.ConjugacyClassSpec(su2, (), -np.eye(2)))


@pytest.fixture(scope="session")
def minus_points(minus_problem):
    pts = []
    for seed in range(5):
        p = minus_problem.solve(np.random.default_rng(2000 + seed))
        pts.append(p.with_irreducible(cv.is_irreducible(p)))
    return pts


@pytest.fixture(scope="session")
def boundary_problem(su2):
    """SU(2), genus 1, one boundary loop in the class of diag(i, -i)."""
    rep = np.diag([1j, -1j])
    return cv.VarietyProblem(su2, cv.SurfacePresentation(1, 1),
                             cv.ConjugacyClassSpec(su2, (rep,)))


@pytest.fixture(scope="session")
def boundary_points(boundary_problem):
    pts = []
    for seed in range(5):
        p = boundary_problem.solve(np.random.default_rng(3000 + seed))
        pts.append(p.with_irreducible(cv.is_irreducible(p)))
    return pts
