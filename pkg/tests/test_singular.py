import numpy as np
import pytest

from ctv.exceptions import ContractError, RecipeError
from ctv.norms import L111, L211, LINF11, check_subdifferential_membership, eval_norm
from ctv.operators import gradient
from ctv.singular import (
    PiecewiseLinearProfile,
    SingularVectorRecipe,
    build_singular_vector,
    export_fixture,
    load_fixture,
    random_profile,
    random_recipe,
    verify_singular_vector,
)
from ctv.tensors import inner_product

FIG3_C = np.array([0.54, 0.2, -0.82])


@pytest.mark.parametrize("kind, spec", [("l111", L111), ("l211", L211), ("linf11", LINF11)])
def test_random_recipes_are_singular(kind, spec):
    rng = np.random.default_rng(11)
    for _ in range(20):
        h, w = (int(v) for v in rng.integers(8, 65, size=2))
        recipe = random_recipe(kind, (h, w), rng)
        u, z = build_singular_vector(recipe, (h, w))
        assert u.shape == (h, w, 3)
        assert verify_singular_vector(u, z, spec, tol=1e-10)


@pytest.mark.parametrize("kind", ["l111", "l211", "linf11"])
def test_eigen_relation(kind):
    # <z, Du> = J(u) and u = D^T z give <u, u> = J(u), i.e. u / ||u||^2 * J(u) = u
    rng = np.random.default_rng(5)
    recipe = random_recipe(kind, (16, 24), rng)
    u, z = build_singular_vector(recipe)
    J = eval_norm(gradient(u), recipe.spec)
    assert J == pytest.approx(np.sum(u * u), rel=1e-10)
    assert inner_product(z, gradient(u)) == pytest.approx(J, rel=1e-10)


def test_zero_coefficients():
    rng = np.random.default_rng(0)
    p = random_profile(10, rng)
    recipe = SingularVectorRecipe("l211", p, p, np.zeros(3), np.zeros(3))
    u, z = build_singular_vector(recipe)
    assert not u.any() and not z.any()


def fig3_recipe(rng, c=FIG3_C / np.linalg.norm(FIG3_C)):
    return SingularVectorRecipe("l211", random_profile(32, rng), random_profile(24, rng), c, c[::-1])


def test_fig3_coefficients_couple_through_l2():
    rng = np.random.default_rng(2)
    recipe = fig3_recipe(rng)
    u, z = build_singular_vector(recipe)
    assert verify_singular_vector(u, z, L211)
    assert not verify_singular_vector(u, z, L111)
    assert not verify_singular_vector(u, z, LINF11)


def test_fig3_coefficients_unnormalized_rejected():
    with pytest.raises(RecipeError):
        build_singular_vector(fig3_recipe(np.random.default_rng(2), FIG3_C))


def test_distinct_channel_profiles_only_l111():
    rng = np.random.default_rng(4)
    n = 24
    # channel profiles reach +-1 at different places, so the channels jump apart
    px = np.zeros((3, n))
    for k in range(3):
        # power-of-two ramps keep every slope exact
        up = np.linspace(0, 1, 2 ** (k + 1) + 1)[1:]
        head = np.concatenate([up, np.ones(2), np.linspace(1, -1, 5)[1:]])
        tail = np.linspace(-1, 0, 5)[1:]
        px[k] = np.concatenate([head, -np.ones(n - head.size - tail.size), tail])
    py = np.stack([random_profile(16, rng).samples for _ in range(3)])
    recipe = SingularVectorRecipe("l111", px, py, np.array([1.0, -1.0, 1.0]), np.array([1.0, 1.0, -1.0]))
    u, z = build_singular_vector(recipe)
    assert verify_singular_vector(u, z, L111)
    assert not verify_singular_vector(u, z, L211)
    assert not verify_singular_vector(u, z, LINF11)


def test_linf11_recipe_cross_checks():
    rng = np.random.default_rng(8)
    p, q = random_profile(20, rng), random_profile(12, rng)
    recipe = SingularVectorRecipe("linf11", p, q, np.array([1.0, -1.0, 0.0]), np.array([1.0, 1.0, 1.0]))
    u, z = build_singular_vector(recipe)
    assert verify_singular_vector(u, z, LINF11)
    # weights 1/2 and 1/3 stay inside every l1 coordinate bound but cannot saturate it
    assert not verify_singular_vector(u, z, L111)


def test_perturbed_coefficients_fail():
    rng = np.random.default_rng(3)
    recipe = random_recipe("l211", (16, 16), rng)
    u, z = build_singular_vector(recipe)
    # scaling z and u together keeps u = D^T z but leaves the dual ball
    assert not verify_singular_vector(1.1 * u, 1.1 * z, L211)
    bad = SingularVectorRecipe("l211", recipe.profile_x, recipe.profile_y, 1.1 * recipe.c1, recipe.c2)
    with pytest.raises(RecipeError):
        bad.validate()


def test_scale_invariance():
    rng = np.random.default_rng(9)
    for kind, spec in (("l111", L111), ("l211", L211), ("linf11", LINF11)):
        u, z = build_singular_vector(random_recipe(kind, (12, 20), rng))
        for s in (1.0, 3.0, 0.25):
            assert check_subdifferential_membership(z, gradient(s * u), spec, 1e-10)


def test_verify_rejects_mismatched_pair():
    rng = np.random.default_rng(1)
    u, z = build_singular_vector(random_recipe("l211", (8, 8), rng))
    with pytest.raises(ContractError):
        verify_singular_vector(u + 1e-6, z, L211)


def test_generated_profiles_satisfy_lemma():
    rng = np.random.default_rng(6)
    for _ in range(500):
        p = random_profile(int(rng.integers(2, 65)), rng)
        assert p.lemma_holds()
        assert np.all(np.abs(p.samples) <= 1)
        assert p.samples[-1] == 0


def test_profile_validation():
    PiecewiseLinearProfile([0.5, 1.0, 0.5, 0.0]).validate()
    with pytest.raises(RecipeError):
        PiecewiseLinearProfile([0.5, 0.7, 0.0]).validate()
    with pytest.raises(RecipeError):
        PiecewiseLinearProfile([1.5, 0.0]).validate()
    with pytest.raises(RecipeError):
        PiecewiseLinearProfile([1.0, 1.0]).validate()
    assert not PiecewiseLinearProfile([0.5, 0.7, 0.0]).lemma_holds()


def test_recipe_validation():
    p = [1.0, 0.0]
    with pytest.raises(RecipeError):
        SingularVectorRecipe("l111", p, p, [0.5, 1, 1], [1, 1, 1]).validate()
    with pytest.raises(RecipeError):
        SingularVectorRecipe("l211", [[1.0, 0.0], [0.5, 0.0]], p, [1, 0], [0, 1]).validate()
    with pytest.raises(RecipeError):
        SingularVectorRecipe("l2inf1", p, p, [1], [1])
    with pytest.raises(RecipeError):
        build_singular_vector(SingularVectorRecipe("l211", p, p, [1.0], [1.0]), grid=(3, 3))


def test_fixture_round_trip(tmp_path):
    recipe = random_recipe("linf11", (10, 14), np.random.default_rng(12))
    path = tmp_path / "fixture.json"
    export_fixture(path, recipe)
    loaded, u, z = load_fixture(path)
    u0, z0 = build_singular_vector(recipe)
    assert u.tobytes() == u0.tobytes() and z.tobytes() == z0.tobytes()
    assert loaded.to_dict() == recipe.to_dict()
    assert verify_singular_vector(u, z, LINF11)
