import numpy as np
import pytest
from hypothesis import given, strategies as st

from hnc._index import EvalStats
from hnc.clustering import CLOSED, INTERIOR, stratum_contains, stratum_margin
from hnc.configuration import Configuration, separation, validate
from hnc.hierarchy import Tree
from hnc.portal import (NotSymmetricError, PortalContext, consensus_radius, in_portal,
                        is_symmetric, napoleon_double_outer, napoleon_offset_and_centroids,
                        napoleon_outer, portal_center, portal_map, portal_merge, portal_scale,
                        portal_scale_parameter, side_spread)

from conftest import portal_case, seeds

EQUI = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, np.sqrt(3.0)]])


def triangles(dims=(2, 3)):
    return st.tuples(seeds, st.sampled_from(dims)).map(
        lambda a: np.random.default_rng(a[0]).normal(scale=5.0, size=(3, a[1])))


# -- Napoleon transformation ----------------------------------------------------------

def test_napoleon_equilateral_fixed():
    assert np.allclose(napoleon_double_outer(EQUI), EQUI, atol=1e-12)
    # A single outer step reflects an equilateral triangle through its centroid.
    single = napoleon_outer(EQUI)
    assert side_spread(single) < 1e-12
    assert np.allclose(single.mean(axis=0), EQUI.mean(axis=0))


def test_napoleon_collinear():
    out = napoleon_double_outer([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    assert side_spread(out) < 1e-12
    assert np.allclose(out.mean(axis=0), [1.0, 0.0], atol=1e-12)
    assert np.linalg.norm(out[0] - out[1]) > 0


def test_napoleon_degenerate():
    with pytest.raises(ValueError):
        napoleon_double_outer([[1.0, 1.0]] * 3)
    with pytest.raises(ValueError):
        napoleon_double_outer([[0.0], [1.0], [2.0]])


def test_napoleon_in_space_stays_in_plane():
    tri = np.array([[0.0, 0.0, 0.0], [3.0, 1.0, 2.0], [-1.0, 2.0, 5.0]])
    out = napoleon_double_outer(tri)
    normal = np.cross(tri[1] - tri[0], tri[2] - tri[0])
    assert np.allclose((out - tri[0]) @ normal, 0.0, atol=1e-9)


@given(triangles())
def test_napoleon_equilateral_and_centroid(tri):
    out = napoleon_double_outer(tri)
    assert side_spread(out) <= 1e-9
    assert np.allclose(out.mean(axis=0), tri.mean(axis=0), atol=1e-12 * (1 + np.abs(tri).max()))


# -- portal stages ---------------------------------------------------------------

@given(seeds)
def test_center_makes_triplet_symmetric(seed):
    config, ctx = portal_case(seed)
    centered = portal_center(config, ctx)
    assert is_symmetric(centered, ctx)
    ix = [j - 1 for j in ctx.p]
    assert np.allclose(centered.positions[ix].mean(axis=0), config.positions[ix].mean(axis=0),
                       atol=1e-12 * (1 + np.abs(config.positions).max()))
    # Clusters move rigidly and labels outside P stay put.
    for b in ctx.blocks:
        bx = [j - 1 for j in b]
        shift = centered.positions[bx] - config.positions[bx]
        assert np.allclose(shift, shift[0], atol=1e-12 * (1 + np.abs(config.positions).max()))
    out = [j - 1 for j in ctx.sigma.leaves - ctx.p]
    assert np.array_equal(centered.positions[out], config.positions[out])


def test_offset_matches_barycenter():
    config, ctx = portal_case(3)
    offset, targets = napoleon_offset_and_centroids(config, ctx)
    w = np.array([len(b) for b in ctx.blocks], dtype=float)
    ix = [j - 1 for j in ctx.p]
    assert np.allclose(w @ targets / w.sum(), config.positions[ix].mean(axis=0))
    assert side_spread(targets) <= 1e-9


def test_consensus_radius_needs_symmetry():
    config, ctx = portal_case(5)
    if not is_symmetric(config, ctx):
        with pytest.raises(NotSymmetricError):
            consensus_radius(config, ctx, "A")
        with pytest.raises(NotSymmetricError):
            portal_scale(config, ctx)


@given(seeds, st.floats(0.1, 10.0))
def test_consensus_radius_homogeneous(seed, lam):
    config, ctx = portal_case(seed)
    c = portal_center(config, ctx)
    for q in "ABC":
        r = consensus_radius(c, ctx, q)
        assert r > 0
        assert consensus_radius(c.positions * lam, ctx, q) == pytest.approx(lam * r, rel=1e-9)


@given(seeds, st.floats(0.0, 1.0))
def test_consensus_radius_ignores_cluster_shape(seed, shrink):
    # Only the triplet centroids matter, so contracting each cluster leaves the radius alone.
    config, ctx = portal_case(seed)
    c = portal_center(config, ctx).positions
    shrunk = c.copy()
    for b in ctx.blocks:
        ix = [j - 1 for j in b]
        m = c[ix].mean(axis=0)
        shrunk[ix] = m + shrink * (c[ix] - m)
    for q in "ABC":
        assert consensus_radius(shrunk, ctx, q) == pytest.approx(consensus_radius(c, ctx, q), rel=1e-9)


@given(seeds)
def test_scale_fits_consensus_balls(seed):
    config, ctx = portal_case(seed)
    c = portal_center(config, ctx)
    s = portal_scale(c, ctx)
    assert is_symmetric(s, ctx)
    assert portal_scale_parameter(s, ctx) == pytest.approx(0.0, abs=1e-9)
    for q in ctx.blocks:
        ix = [j - 1 for j in q]
        pts = s.positions[ix]
        rho = np.max(np.linalg.norm(pts - pts.mean(axis=0), axis=1) + s.radii[ix])
        assert rho + ctx.alpha <= consensus_radius(s, ctx, q) * (1 + 1e-9)
    ip = [j - 1 for j in ctx.p]
    assert np.allclose(s.positions[ip].mean(axis=0), c.positions[ip].mean(axis=0),
                       atol=1e-12 * (1 + np.abs(c.positions).max()))


def test_scale_parameter_zero_when_fitting():
    # Three unit clusters far apart already fit their consensus balls.
    tri = 100 * EQUI
    pos = np.vstack([tri[0], tri[1], tri[2]])
    config = Configuration(pos, np.zeros(3))
    ctx = PortalContext(Tree(((1, 2), 3)), Tree((1, (2, 3))))
    assert portal_scale_parameter(config, ctx) == 0.0
    assert np.array_equal(portal_scale(config, ctx).positions, pos)


@given(seeds)
def test_merge_restores_ancestor_margins(seed):
    config, ctx = portal_case(seed)
    s = portal_scale(portal_center(config, ctx), ctx)
    m = portal_merge(s, ctx)
    tree = ctx.sigma
    c = ctx.p
    while c != tree.leaves:
        for j in c:
            assert separation(m, tree, j, c) >= m.radii[j - 1] + ctx.alpha - 1e-9
        sib = tree.sibling(c)
        for j in sib:
            assert separation(m, tree, j, sib) >= m.radii[j - 1] + ctx.alpha - 1e-9
        c = tree.parent(c)


@given(seeds)
def test_portal_map_lands_in_both_strata(seed):
    config, ctx = portal_case(seed)
    stats = EvalStats()
    out = portal_map(config, ctx, stats)
    assert in_portal(out, ctx)
    assert stratum_contains(out, ctx.sigma, INTERIOR) and stratum_contains(out, ctx.tau, INTERIOR)
    assert validate(out) == []
    assert np.allclose(out.positions.mean(axis=0), config.positions.mean(axis=0),
                       atol=1e-12 * (1 + np.abs(out.positions).max()))
    assert 0 < stats.separations <= 4 * config.n ** 2


@given(seeds)
def test_portal_map_identity_inside(seed):
    config, ctx = portal_case(seed)
    out = portal_map(config, ctx)
    assert portal_map(out, ctx) is out


@given(seeds)
def test_portal_map_translation_equivariant(seed):
    config, ctx = portal_case(seed)
    shift = np.random.default_rng(seed).normal(size=config.dim) * 10
    a = portal_map(config, ctx).positions
    b = portal_map(Configuration(config.positions + shift, config.radii), ctx).positions
    assert np.allclose(b - shift, a, atol=1e-8 * (1 + np.abs(a).max()))


def test_portal_map_example():
    # Three disks in a row: sigma = ((1,2),3) to tau = (1,(2,3)).
    config = Configuration([[0.0, 0.0], [3.0, 0.0], [9.0, 0.0]], [1.0, 1.0, 1.0])
    ctx = PortalContext(Tree(((1, 2), 3)), Tree((1, (2, 3))))
    assert stratum_contains(config, ctx.sigma, CLOSED)
    assert not stratum_contains(config, ctx.tau, INTERIOR)
    out = portal_map(config, ctx)
    assert in_portal(out, ctx)
    assert stratum_margin(out, ctx.tau) > 0
    assert np.allclose(out.positions.mean(axis=0), [4.0, 0.0])
