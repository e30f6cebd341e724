import math

import numpy as np
import pytest

from lspkit.errors import ArgumentError, UnsupportedCombination
from lspkit.sets import (
    IFS,
    AffinePlane,
    Circle,
    IFSAttractor,
    IFSMap,
    Isometry,
    PointSet,
    Polyline,
    Sphere,
    cylinder_cut,
    distance_to_set,
    model_from_json,
    model_to_json,
    read_points_csv,
    sample_on_set,
    similarity_dimension,
    transform_model,
    word_interval,
    words_at_scale,
    write_points_csv,
)


def middle_third():
    return IFSAttractor(
        IFS((IFSMap(1 / 3, np.array([0.0])), IFSMap(1 / 3, np.array([2 / 3]))), True)
    )


def rotation(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def test_point_distances():
    ps = PointSet(np.array([[0.0, 0.0]]))
    assert distance_to_set(ps, [3.0, 4.0], metric="euclidean") == pytest.approx(5.0)
    assert distance_to_set(ps, [3.0, 4.0], metric="sup") == pytest.approx(4.0)


def test_plane_distance():
    xaxis = AffinePlane(np.zeros(2), np.array([[1.0, 0.0]]))
    assert distance_to_set(xaxis, [7.0, -2.0]) == pytest.approx(2.0)
    assert distance_to_set(xaxis, [7.0, -2.0], metric="euclidean") == pytest.approx(2.0)
    # non-axis-aligned line in the plane: hyperplane closed form under sup
    diag = AffinePlane(np.zeros(2), np.array([[1.0, 1.0]]) / math.sqrt(2))
    # sup distance to {y=x} from (1, 0): the point (0.5, 0.5) realizes 0.5
    assert distance_to_set(diag, [1.0, 0.0], metric="sup") == pytest.approx(0.5)
    assert distance_to_set(diag, [1.0, 0.0], metric="euclidean") == pytest.approx(
        math.sqrt(2) / 2
    )


def test_line_in_3d_sup_distance_lp():
    line = AffinePlane(np.zeros(3), np.array([[1.0, 1.0, 0.0]]) / math.sqrt(2))
    d = distance_to_set(line, [1.0, 0.0, 0.3], metric="sup")
    # brute force over the line parameter
    t = np.linspace(-3, 3, 200001)
    pts = t[:, None] * (np.array([1.0, 1.0, 0.0]) / math.sqrt(2))
    brute = np.min(np.max(np.abs(pts - np.array([1.0, 0.0, 0.3])), axis=1))
    assert d == pytest.approx(brute, abs=1e-4)


def test_cantor_distance():
    K = middle_third()
    assert distance_to_set(K, [0.5], tol=1e-8) == pytest.approx(1 / 6, abs=1e-6)
    assert distance_to_set(K, [0.0], tol=1e-8) == pytest.approx(0.0, abs=1e-6)


def test_circle_sphere_polyline_distances():
    circ = Circle(np.zeros(2), 1.0)
    assert distance_to_set(circ, [2.0, 0.0]) == pytest.approx(1.0)
    sph = Sphere(np.zeros(3), 1.0)
    assert distance_to_set(sph, [0.0, 0.0, 0.25]) == pytest.approx(0.75)
    seg = Polyline(np.array([[0.0, 0.0], [1.0, 0.0]]))
    assert distance_to_set(seg, [2.0, 0.0], metric="euclidean") == pytest.approx(1.0)
    assert distance_to_set(seg, [0.5, 0.3], metric="sup") == pytest.approx(0.3)
    assert distance_to_set(seg, [1.5, 0.2], metric="sup") == pytest.approx(0.5)


def test_sample_on_set():
    rng = np.random.default_rng(7)
    circ = Circle(np.zeros(2), 1.0)
    pts = sample_on_set(circ, 4, rng)
    assert np.max(np.abs(np.linalg.norm(pts, axis=1) - 1.0)) <= 1e-12

    K = middle_third()
    pts = sample_on_set(K, 100, np.random.default_rng(1))
    d = distance_to_set(K, pts, tol=1e-8)
    assert np.max(d) <= 1e-6

    ps = PointSet(np.array([[0.0], [1.0], [2.0]]))
    out = sample_on_set(ps, 10, rng)
    assert all(any(np.allclose(o, p) for p in ps.points) for o in out)


def test_words_at_scale():
    two_thirds = IFS((IFSMap(1 / 3, np.array([0.0])), IFSMap(1 / 3, np.array([2 / 3]))), True)
    assert sorted(words_at_scale(two_thirds, 1 / 3)) == [(0,), (1,)]
    assert sorted(words_at_scale(two_thirds, 0.2)) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    mixed = IFS((IFSMap(0.5, np.array([0.0])), IFSMap(0.25, np.array([0.5]))), True)
    assert sorted(words_at_scale(mixed, 0.25)) == [(0, 0), (0, 1), (1,)]
    with pytest.raises(ArgumentError):
        words_at_scale(mixed, 1.5)
    with pytest.raises(ArgumentError):
        words_at_scale(mixed, 0.001, cap=10)


def test_words_sandwich_property():
    mixed = IFS((IFSMap(0.5, np.array([0.0])), IFSMap(0.3, np.array([0.6]))), True)
    for r in (0.3, 0.11, 0.042):
        for w in words_at_scale(mixed, r):
            prod = math.prod(mixed.maps[a].ratio for a in w)
            parent = math.prod(mixed.maps[a].ratio for a in w[:-1])
            assert prod <= r < parent


def test_similarity_dimension():
    two_thirds = IFS((IFSMap(1 / 3, np.array([0.0])), IFSMap(1 / 3, np.array([2 / 3]))), True)
    assert similarity_dimension(two_thirds) == pytest.approx(math.log(2) / math.log(3), abs=1e-9)
    three_halves = IFS(
        tuple(IFSMap(0.5, np.array([float(k), 0.0])) for k in range(3)), True
    )
    assert similarity_dimension(three_halves) == pytest.approx(math.log(3) / math.log(2), abs=1e-9)
    pair_half = IFS((IFSMap(0.5, np.array([0.0])), IFSMap(0.5, np.array([0.5]))), True)
    assert similarity_dimension(pair_half) == pytest.approx(1.0, abs=1e-9)
    with pytest.raises(ArgumentError):
        IFS((IFSMap(0.5, np.array([0.0])),), True)


def test_transform_model_examples():
    ps = PointSet(np.array([[0.0, 0.0]]))
    ident = Isometry(translation=np.zeros(2))
    assert np.allclose(transform_model(ps, ident).points, ps.points)
    shifted = transform_model(ps, Isometry(translation=np.array([0.3, 0.4])))
    assert np.allclose(shifted.points, [[0.3, 0.4]])

    xaxis = AffinePlane(np.zeros(2), np.array([[1.0, 0.0]]))
    rot90 = transform_model(xaxis, Isometry(translation=np.zeros(2), rotation=rotation(math.pi / 2)))
    assert distance_to_set(rot90, [2.0, 0.0], metric="euclidean") == pytest.approx(2.0)


@pytest.mark.parametrize("seed", range(4))
def test_distance_equivariance(seed):
    rng = np.random.default_rng(100 + seed)
    models = [
        PointSet(rng.uniform(-1, 1, size=(5, 2))),
        AffinePlane(rng.uniform(-1, 1, size=2), np.array([[1.0, 0.0]]), extent=3.0),
        Circle(rng.uniform(-1, 1, size=2), 0.7),
        Polyline(rng.uniform(-1, 1, size=(4, 2))),
        middle_third_2d(),
    ]
    for _ in range(250):
        m = models[rng.integers(0, len(models))]
        theta = rng.uniform(0, 2 * math.pi)
        iso = Isometry(translation=rng.uniform(-1, 1, size=2), rotation=rotation(theta))
        x = rng.uniform(-2, 2, size=2)
        before = distance_to_set(m, x, tol=1e-9, metric="euclidean")
        after = distance_to_set(transform_model(m, iso), iso.apply(x), tol=1e-9, metric="euclidean")
        tol = 1e-6 if isinstance(m, IFSAttractor) else 1e-9
        assert after == pytest.approx(before, abs=tol, rel=tol)


def middle_third_2d():
    return IFSAttractor(
        IFS(
            (
                IFSMap(1 / 3, np.array([0.0, 0.0])),
                IFSMap(1 / 3, np.array([2 / 3, 0.1])),
            ),
            True,
        )
    )


def test_wrapped_equivariance_translations():
    rng = np.random.default_rng(3)
    ps = PointSet(rng.uniform(0, 1, size=(4, 2)))
    for _ in range(200):
        iso = Isometry(translation=rng.uniform(0, 1, size=2), wrap=True)
        x = rng.uniform(0, 1, size=2)
        before = distance_to_set(ps, x, metric="sup", wrap=True)
        after = distance_to_set(transform_model(ps, iso), iso.apply(x), metric="sup", wrap=True)
        assert after == pytest.approx(before, abs=1e-9)


def test_wrap_with_general_rotation_rejected():
    ps = PointSet(np.array([[0.2, 0.2]]))
    iso = Isometry(translation=np.zeros(2), rotation=rotation(0.3), wrap=True)
    with pytest.raises(UnsupportedCombination):
        transform_model(ps, iso)
    # signed permutations act on the torus and are allowed
    perm = Isometry(translation=np.zeros(2), rotation=np.array([[0.0, 1.0], [1.0, 0.0]]), wrap=True)
    out = transform_model(ps, perm)
    assert np.allclose(out.points, [[0.2, 0.2]])


def test_osc_cylinder_intersection_count_bounded():
    K = middle_third()
    ifs = K.ifs
    rng = np.random.default_rng(11)
    from lspkit.sets import attractor_bounds

    z0, r0 = attractor_bounds(ifs)
    counts = []
    for _ in range(100):
        x = sample_on_set(K, 1, rng)[0]
        r = 10 ** rng.uniform(-5, -1)
        hits = 0
        for w in words_at_scale(ifs, r):
            c, rad = word_interval(ifs, w, z0, r0)
            if np.linalg.norm(c - x) <= r + rad:
                hits += 1
        counts.append(hits)
    # the bound's existence is the point; its value is recorded
    print(f"OSC cylinder-hit bound over 100 draws: max={max(counts)}")
    assert max(counts) <= 8


def test_cylinder_cut_covers_attractor():
    K = middle_third()
    centers, radii = cylinder_cut(K.ifs, 0.01)
    pts = sample_on_set(K, 200, np.random.default_rng(5))
    d = np.min(np.abs(pts[:, 0][:, None] - centers[:, 0][None, :]) - radii[None, :], axis=1)
    assert np.max(d) <= 1e-12


def test_model_json_roundtrip():
    models = [
        PointSet(np.array([[0.1, 0.2]])),
        AffinePlane(np.zeros(2), np.array([[1.0, 0.0]]), extent=2.0),
        Circle(np.array([0.5, 0.5]), 0.3),
        Sphere(np.zeros(3), 1.0),
        Polyline(np.array([[0.0, 0.0], [1.0, 1.0]])),
        middle_third(),
    ]
    rng = np.random.default_rng(0)
    for m in models:
        back = model_from_json(model_to_json(m))
        x = rng.uniform(0, 1, size=m.ambient_dim)
        assert distance_to_set(back, x, metric="euclidean") == pytest.approx(
            distance_to_set(m, x, metric="euclidean"), rel=1e-9, abs=1e-9
        )


def test_points_csv_roundtrip(tmp_path):
    pts = np.random.default_rng(0).uniform(size=(7, 3))
    path = tmp_path / "pts.csv"
    write_points_csv(path, pts)
    back = read_points_csv(path)
    assert np.allclose(back, pts)
